//! Exact propagation by expansion in the moving-mode basis.
//!
//! Every mode solves the Schrodinger equation exactly and the modes stay
//! orthonormal on the instantaneous well, so the expansion coefficients of a
//! state are constants of the motion. Projection happens once; evaluation at
//! any later time is a finite sum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::WellGeometry;
use crate::modes::{ModeFrame, MovingMode};
use crate::quadrature::AdaptiveQuadrature;

/// Tolerance on `sum |c_n|^2 <= 1`.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    geometry: WellGeometry,
    /// `coefficients[i]` multiplies mode `n = i + 1`.
    coefficients: Vec<Complex64>,
}

impl SpectralState {
    pub fn new(geometry: WellGeometry, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(invalid("a spectral state needs at least one coefficient"));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(invalid("coefficients must be finite"));
        }
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if norm > 1.0 + NORM_SLACK {
            return Err(invalid(format!(
                "sum of |c_n|^2 is {norm}, which exceeds 1"
            )));
        }
        Ok(Self {
            geometry,
            coefficients,
        })
    }

    /// A single mode with unit amplitude.
    pub fn pure_mode(geometry: WellGeometry, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(invalid("quantum number n must be at least 1"));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); n as usize];
        c[n as usize - 1] = Complex64::new(1.0, 0.0);
        Self::new(geometry, c)
    }

    pub fn geometry(&self) -> &WellGeometry {
        &self.geometry
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn n_max(&self) -> usize {
        self.coefficients.len()
    }

    /// `sum |c_n|^2`, independent of time.
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        Ok(self.eval_state(&[x], t)?[0])
    }

    /// `psi(x, t) = sum_n c_n psi_n(x, t)` at each point of `xs`.
    pub fn eval_state(&self, xs: &[f64], t: f64) -> Result<Vec<Complex64>> {
        let g = &self.geometry;
        let frame = ModeFrame::new(g, t)?;
        let hbar = g.hbar();
        // c_n exp(-i E_n tau / hbar), shared by every point
        let rotated: Vec<(u32, Complex64)> = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, &c)| {
                let n = i as u32 + 1;
                let e = crate::modes::mode_energy(g, n)?;
                Ok((n, c * Complex64::from_polar(1.0, -e * frame.tau / hbar)))
            })
            .collect::<Result<_>>()?;
        let norm = (2.0 / frame.width).sqrt();
        Ok(xs
            .par_iter()
            .map(|&x| {
                if !frame.contains(x) {
                    return Complex64::new(0.0, 0.0);
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for &(n, c) in &rotated {
                    acc += c * frame.standing_wave(n, x);
                }
                acc * Complex64::from_polar(norm, frame.gauge.phase(x - frame.x_left))
            })
            .collect())
    }

    /// Norm, mean position and a sampled density on the instantaneous well.
    pub fn observables(&self, t: f64, grid_size: usize) -> Result<Observables> {
        if grid_size < 16 {
            return Err(invalid(format!("grid_size must be at least 16, got {grid_size}")));
        }
        let (l, r) = self.geometry.wall_positions(t)?;
        let q = AdaptiveQuadrature::new(1e-13)?;
        let density = |x: f64| -> f64 { self.eval(x, t).map(|v| v.norm_sqr()).unwrap_or(0.0) };
        let norm_x = q.integrate(density, l, r)?.value;
        let first = q.integrate(|x: f64| x * density(x), l, r)?.value;
        let h = (r - l) / (grid_size - 1) as f64;
        let xs: Vec<f64> = (0..grid_size)
            .map(|i| if i + 1 == grid_size { r } else { l + i as f64 * h })
            .collect();
        let values = self.eval_state(&xs, t)?;
        Ok(Observables {
            t,
            norm_x,
            mean_x: first / norm_x,
            density: values.iter().map(|v| v.norm_sqr()).collect(),
            xs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub t: f64,
    pub norm_x: f64,
    pub mean_x: f64,
    pub xs: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub coefficients: Vec<Complex64>,
    pub captured_norm: f64,
    /// `1 - captured_norm`.
    pub truncation_error: f64,
    /// Sum of the adaptive quadrature error estimates over all coefficients.
    pub quadrature_estimate: f64,
}

impl ProjectionReport {
    pub fn into_state(self, geometry: WellGeometry) -> Result<SpectralState> {
        SpectralState::new(geometry, self.coefficients)
    }
}

/// Projects a lab-frame function, given on `[0, a]`, onto modes `1..=n_max`
/// at `t = 0`.
pub fn project<F>(g: &WellGeometry, initial: F, n_max: usize, quad_tol: f64) -> Result<ProjectionReport>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    project_at(g, initial, 0.0, n_max, quad_tol)
}

/// Projects onto the modes at time `t`, integrating over the instantaneous
/// well.
pub fn project_at<F>(
    g: &WellGeometry,
    field: F,
    t: f64,
    n_max: usize,
    quad_tol: f64,
) -> Result<ProjectionReport>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    let (l, r) = g.wall_positions(t)?;
    let q = AdaptiveQuadrature::new(quad_tol)?;
    let results: Vec<(Complex64, f64)> = (1..=n_max as u32)
        .into_par_iter()
        .map(|n| {
            let mode = MovingMode::new(*g, n)?;
            let frame = ModeFrame::new(g, t)?;
            let res = q.integrate(|x: f64| frame.eval(&mode, x).conj() * field(x), l, r)?;
            Ok((res.value, res.error_estimate))
        })
        .collect::<Result<_>>()?;
    let coefficients: Vec<Complex64> = results.iter().map(|r| r.0).collect();
    let captured_norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    Ok(ProjectionReport {
        captured_norm,
        truncation_error: 1.0 - captured_norm,
        quadrature_estimate: results.iter().map(|r| r.1).sum(),
        coefficients,
    })
}
