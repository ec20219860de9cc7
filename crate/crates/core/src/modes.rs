//! Exact eigenmodes of the well with uniformly moving walls.
//!
//! With `xi = x - u_left * t`, `w(t) = a + delta * t` and `L = w / a`, mode `n`
//! reads
//!
//! ```text
//! psi_n(x, t) = sqrt(2 / w) * sin(n pi xi / w)
//!             * exp(i [ m delta xi^2 / (2 hbar w) + m u_left xi / hbar
//!                      + m u_left^2 t / (2 hbar) - E_n tau(t) / hbar ])
//! ```
//!
//! where `E_n = (hbar n pi / a)^2 / (2 m)` and `tau(t) = t / L(t)` is the
//! integral of `1 / L^2`. The quadratic term is the dilation phase, the linear
//! and secular terms are the Galilean boost into the frame of the left wall,
//! and the `sqrt(1 / L)` decay of the amplitude keeps every mode unit-norm.
//! Each mode vanishes on both walls and solves the free Schrodinger equation
//! exactly inside the well; outside the well it is identically zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::WellGeometry;

/// Separation constant `E_n = n^2 pi^2 hbar^2 / (2 m a^2)`.
///
/// This is the static-box eigenvalue for the initial width. When the walls
/// move it is not the instantaneous energy expectation.
pub fn mode_energy(g: &WellGeometry, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(invalid("quantum number n must be at least 1"));
    }
    let k = n as f64 * PI / g.a();
    Ok(g.hbar() * g.hbar() * k * k / (2.0 * g.mass()))
}

/// `tau(t) = integral_0^t dt' / L(t')^2`, which equals `(a / delta) (1 - 1 / L(t))`,
/// i.e. `t / L(t)`. Exactly `t` for a rigid well.
pub fn time_phase_integral(g: &WellGeometry, t: f64) -> Result<f64> {
    g.check_time(t)?;
    if g.delta() == 0.0 {
        return Ok(t);
    }
    Ok(t / g.scale_factor(t)?)
}

/// Decomposed phase and amplitude factor multiplying the standing wave.
///
/// The total exponent at co-moving offset `xi = x - u_left t` is
/// `log_amplitude + i (quadratic xi^2 + linear xi + secular + energy_phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParts {
    /// `m delta / (2 hbar a L)`, coefficient of `xi^2`.
    pub quadratic: f64,
    /// `m u_left / hbar`, coefficient of `xi`.
    pub linear: f64,
    /// `m u_left^2 t / (2 hbar)`.
    pub secular: f64,
    /// `-ln(L) / 2`.
    pub log_amplitude: f64,
    /// `-E_n tau / hbar`; zero when not tied to a mode.
    pub energy_phase: f64,
}

impl PhaseParts {
    /// Real phase at co-moving offset `xi`.
    pub fn phase(&self, xi: f64) -> f64 {
        (self.quadratic * xi + self.linear) * xi + self.secular + self.energy_phase
    }

    /// `exp(log_amplitude + i phase(xi))`.
    pub fn factor(&self, xi: f64) -> Complex64 {
        Complex64::from_polar(self.log_amplitude.exp(), self.phase(xi))
    }

    pub fn with_energy_phase(mut self, energy_phase: f64) -> Self {
        self.energy_phase = energy_phase;
        self
    }
}

/// Gauge phase and amplitude of the moving frame at time `t` (without the
/// per-mode energy phase).
pub fn gauge_phase(g: &WellGeometry, t: f64) -> Result<PhaseParts> {
    let l = g.scale_factor(t)?;
    let (hbar, m) = (g.hbar(), g.mass());
    let u = g.u_left();
    let log_amplitude = if g.delta() == 0.0 {
        0.0
    } else {
        -0.5 * (g.delta() * t / g.a()).ln_1p()
    };
    Ok(PhaseParts {
        quadratic: m * g.delta() / (2.0 * hbar * g.a() * l),
        linear: m * u / hbar,
        secular: m * u * u * t / (2.0 * hbar),
        log_amplitude,
        energy_phase: 0.0,
    })
}

/// One exact solution, labelled by its quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingMode {
    geometry: WellGeometry,
    n: u32,
    k: f64,
    energy: f64,
}

impl MovingMode {
    pub fn new(geometry: WellGeometry, n: u32) -> Result<Self> {
        let energy = mode_energy(&geometry, n)?;
        Ok(Self {
            geometry,
            n,
            k: n as f64 * PI / geometry.a(),
            energy,
        })
    }

    pub fn geometry(&self) -> &WellGeometry {
        &self.geometry
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `n pi / a`.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Full phase decomposition for this mode at time `t`.
    pub fn phase_parts(&self, t: f64) -> Result<PhaseParts> {
        let tau = time_phase_integral(&self.geometry, t)?;
        Ok(gauge_phase(&self.geometry, t)?.with_energy_phase(-self.energy * tau / self.geometry.hbar()))
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        let frame = ModeFrame::new(&self.geometry, t)?;
        Ok(frame.eval(self, x))
    }

    /// Batched [`eval`](Self::eval); each point goes through the same scalar
    /// path, so the results are bit-identical.
    pub fn eval_grid(&self, xs: &[f64], t: f64) -> Result<Vec<Complex64>> {
        let frame = ModeFrame::new(&self.geometry, t)?;
        Ok(xs.par_iter().map(|&x| frame.eval(self, x)).collect())
    }
}

/// Time-dependent quantities shared by every mode at one instant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeFrame {
    pub x_left: f64,
    pub x_right: f64,
    pub width: f64,
    pub tau: f64,
    pub gauge: PhaseParts,
}

impl ModeFrame {
    pub fn new(g: &WellGeometry, t: f64) -> Result<Self> {
        let (x_left, x_right) = g.wall_positions(t)?;
        Ok(Self {
            x_left,
            x_right,
            width: g.width(t)?,
            tau: time_phase_integral(g, t)?,
            gauge: gauge_phase(g, t)?,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_left && x <= self.x_right
    }

    /// `sin(n pi xi / w)`, evaluated from whichever wall is nearer so both
    /// walls give exactly zero.
    pub fn standing_wave(&self, n: u32, x: f64) -> f64 {
        let left = x - self.x_left;
        let right = self.x_right - x;
        let nf = n as f64;
        if left <= right {
            (nf * PI * left / self.width).sin()
        } else {
            let s = (nf * PI * right / self.width).sin();
            if n % 2 == 0 {
                -s
            } else {
                s
            }
        }
    }

    pub fn eval(&self, mode: &MovingMode, x: f64) -> Complex64 {
        if !self.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        let g = &mode.geometry;
        let amplitude = (2.0 / self.width).sqrt() * self.standing_wave(mode.n, x);
        let phase = self.gauge.phase(x - self.x_left) - mode.energy * self.tau / g.hbar();
        Complex64::from_polar(1.0, phase) * amplitude
    }
}
