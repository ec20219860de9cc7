//! Crank-Nicolson solver for the transformed, fixed-domain equation.
//!
//! In the co-moving coordinate `x_bar in [0, a]` the field
//! `psi_bar = exp(-log_amplitude - i G) psi`, with `G` the gauge phase of
//! [`gauge_phase`](crate::modes::gauge_phase), obeys
//!
//! ```text
//! i hbar d(psi_bar)/dt = -(hbar^2 / (2 m L(t)^2)) d^2(psi_bar)/dx_bar^2
//! ```
//!
//! with homogeneous Dirichlet ends. The solver integrates this equation
//! directly, without separating variables, so it is an independent check on
//! the analytic propagator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::WellGeometry;
use crate::modes::gauge_phase;

/// How the time-dependent coefficient `1/L^2` is frozen within a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRule {
    /// Evaluate at `t + dt / 2`.
    #[default]
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub dt: f64,
    pub coefficient_rule: CoefficientRule,
}

impl SolverSettings {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            dt,
            coefficient_rule: CoefficientRule::Midpoint,
        })
    }
}

/// Interior samples of the transformed field on a uniform co-moving grid.
/// The Dirichlet end values are implicit and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    geometry: WellGeometry,
    spacing: f64,
    samples: Vec<Complex64>,
    t: f64,
}

/// Lab-frame samples on the image of the co-moving grid, walls included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabSamples {
    pub t: f64,
    pub xs: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl GridState {
    /// Samples `lab_state` at time `t0` and removes the gauge factor.
    pub fn init_from_lab<F>(g: &WellGeometry, lab_state: F, nx: usize, t0: f64) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        if nx < 8 {
            return Err(invalid(format!("nx must be at least 8, got {nx}")));
        }
        let gauge = gauge_phase(g, t0)?;
        let spacing = g.a() / (nx + 1) as f64;
        let mut samples = Vec::with_capacity(nx);
        for j in 1..=nx {
            let x = g.from_comoving(j as f64 * spacing, t0)?;
            let xi = x - g.u_left() * t0;
            samples.push(lab_state(x) / gauge.factor(xi));
        }
        Ok(Self {
            geometry: *g,
            spacing,
            samples,
            t: t0,
        })
    }

    /// Wraps already-transformed samples.
    pub fn from_samples(g: &WellGeometry, samples: Vec<Complex64>, t: f64) -> Result<Self> {
        if samples.len() < 8 {
            return Err(invalid("need at least 8 interior samples"));
        }
        g.check_time(t)?;
        Ok(Self {
            geometry: *g,
            spacing: g.a() / (samples.len() + 1) as f64,
            samples,
            t,
        })
    }

    pub fn geometry(&self) -> &WellGeometry {
        &self.geometry
    }

    pub fn nx(&self) -> usize {
        self.samples.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Interior co-moving grid points `j h`, `j = 1..=nx`.
    pub fn comoving_points(&self) -> Vec<f64> {
        (1..=self.nx()).map(|j| j as f64 * self.spacing).collect()
    }

    /// `h * sum |psi_bar_j|^2`.
    pub fn discrete_norm(&self) -> f64 {
        self.spacing * self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// One Crank-Nicolson step, returning the advanced state.
    pub fn step(&self, settings: &SolverSettings) -> Result<GridState> {
        let mut next = self.clone();
        next.advance(settings.dt)?;
        Ok(next)
    }

    /// Advances in place by `dt`:
    /// `(I + i alpha K / 2) psi_new = (I - i alpha K / 2) psi_old` with
    /// `K = tridiag(-1, 2, -1)` and `alpha = hbar dt / (2 m h^2 L(t + dt/2)^2)`.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let g = &self.geometry;
        let t_new = self.t + dt;
        g.check_time(t_new)?;
        let l_mid = g.scale_factor(self.t + 0.5 * dt)?;
        let alpha = g.hbar() * dt / (2.0 * g.mass() * self.spacing * self.spacing * l_mid * l_mid);
        let half = Complex64::new(0.0, 0.5 * alpha);

        let n = self.samples.len();
        let zero = Complex64::new(0.0, 0.0);
        let rhs: Vec<Complex64> = (0..n)
            .map(|j| {
                let left = if j > 0 { self.samples[j - 1] } else { zero };
                let right = if j + 1 < n { self.samples[j + 1] } else { zero };
                let k_psi = self.samples[j] * 2.0 - left - right;
                self.samples[j] - half * k_psi
            })
            .collect();
        let off = -half;
        let diag = Complex64::new(1.0, alpha);
        self.samples = solve_tridiagonal(&vec![off; n], &vec![diag; n], &vec![off; n], &rhs)?;
        self.t = t_new;
        Ok(())
    }

    /// Steps to `t1` with uniform steps of `settings.dt`, shrinking the last
    /// one so the final time is exactly `t1`.
    pub fn evolve_to(&mut self, t1: f64, settings: &SolverSettings) -> Result<()> {
        if !t1.is_finite() || t1 < self.t {
            return Err(invalid(format!(
                "cannot evolve backwards from t = {} to t = {t1}",
                self.t
            )));
        }
        self.geometry.check_time(t1)?;
        let dt = settings.dt;
        let start = self.t;
        let span = t1 - start;
        let full = (span / dt + 1e-9).floor() as usize;
        for k in 0..full {
            let target = start + (k + 1) as f64 * dt;
            let step = target - self.t;
            self.advance(step)?;
            self.t = target;
        }
        let rest = t1 - self.t;
        if rest > 1e-12 * dt {
            self.advance(rest)?;
        }
        self.t = t1;
        Ok(())
    }

    /// Restores the gauge factor and maps the grid to lab coordinates.
    pub fn map_to_lab(&self) -> LabSamples {
        let g = &self.geometry;
        // t was validated when the state reached it
        let gauge = gauge_phase(g, self.t).expect("grid time inside validity window");
        let l = g.scale_factor(self.t).expect("grid time inside validity window");
        let x_left = g.u_left() * self.t;
        let n = self.nx();
        let mut xs = Vec::with_capacity(n + 2);
        let mut values = Vec::with_capacity(n + 2);
        xs.push(x_left);
        values.push(Complex64::new(0.0, 0.0));
        for (j, psi_bar) in self.samples.iter().enumerate() {
            let xi = l * ((j + 1) as f64 * self.spacing);
            xs.push(x_left + xi);
            values.push(gauge.factor(xi) * psi_bar);
        }
        xs.push(g.a() + g.u_right() * self.t);
        values.push(Complex64::new(0.0, 0.0));
        LabSamples {
            t: self.t,
            xs,
            values,
        }
    }
}

/// `init_from_lab` followed by `evolve_to(t1)`.
pub fn solve<F>(
    g: &WellGeometry,
    lab_state: F,
    t0: f64,
    t1: f64,
    nx: usize,
    settings: &SolverSettings,
) -> Result<GridState>
where
    F: Fn(f64) -> Complex64,
{
    g.check_time(t1)?;
    let mut state = GridState::init_from_lab(g, lab_state, nx, t0)?;
    state.evolve_to(t1, settings)?;
    Ok(state)
}

/// `|<A, B>| / (||A|| ||B||)` with trapezoid weights on the (possibly
/// non-uniform) grid `xs`.
pub fn fidelity(a: &[Complex64], b: &[Complex64], xs: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != xs.len() {
        return Err(invalid(format!(
            "mismatched grids: {} / {} samples on {} points",
            a.len(),
            b.len(),
            xs.len()
        )));
    }
    if xs.len() < 2 {
        return Err(invalid("fidelity needs at least two grid points"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid points must be strictly increasing"));
    }
    let n = xs.len();
    let mut overlap = Complex64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for j in 0..n {
        let lo = if j > 0 { xs[j - 1] } else { xs[j] };
        let hi = if j + 1 < n { xs[j + 1] } else { xs[j] };
        let w = 0.5 * (hi - lo);
        overlap += a[j].conj() * b[j] * w;
        na += a[j].norm_sqr() * w;
        nb += b[j].norm_sqr() * w;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(invalid("fidelity is undefined for a zero state"));
    }
    Ok((overlap.norm() / (na * nb).sqrt()).min(1.0))
}

/// Thomas algorithm for a complex tridiagonal system. `sub[0]` and
/// `sup[n - 1]` are ignored.
pub fn solve_tridiagonal(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if n == 0 || sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(invalid("tridiagonal bands must all have the system length"));
    }
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let mut pivot = diag[0];
    if pivot.norm() == 0.0 {
        return Err(invalid("zero pivot in tridiagonal solve"));
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.norm() == 0.0 {
            return Err(invalid("zero pivot in tridiagonal solve"));
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Ok(d)
}
