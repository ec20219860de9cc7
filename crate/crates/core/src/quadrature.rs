//! Adaptive composite Gauss-Legendre quadrature.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Default nodes per panel.
pub const DEFAULT_NODES: usize = 32;
/// Default hard budget on the number of panels evaluated.
pub const DEFAULT_MAX_PANELS: usize = 1 << 14;

/// Values that can be integrated: real or complex.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Gauss-Legendre rule needs at least one node"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th largest root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel estimate of the integral over `[lo, hi]`.
    pub fn integrate<T: Integrand, F: Fn(f64) -> T>(&self, f: &F, lo: f64, hi: f64) -> T {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * w;
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    /// Sum over accepted panels of |fine - coarse|.
    pub error_estimate: f64,
    pub panels: usize,
}

/// Panel bisection driven by the difference between a panel's rule and the
/// sum of the rule over its two halves.
#[derive(Debug, Clone)]
pub struct AdaptiveQuadrature {
    rule: GaussLegendre,
    tol: f64,
    max_panels: usize,
}

impl AdaptiveQuadrature {
    /// `tol` is an absolute tolerance on the whole integral.
    pub fn new(tol: f64) -> Result<Self> {
        Self::with_rule(tol, DEFAULT_NODES, DEFAULT_MAX_PANELS)
    }

    pub fn with_rule(tol: f64, nodes: usize, max_panels: usize) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(invalid(format!("quadrature tolerance must be positive, got {tol}")));
        }
        if max_panels < 3 {
            return Err(invalid("panel budget must allow at least one bisection"));
        }
        Ok(Self {
            rule: GaussLegendre::new(nodes)?,
            tol,
            max_panels,
        })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn integrate<T: Integrand, F: Fn(f64) -> T>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
    ) -> Result<QuadratureResult<T>> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(invalid("integration limits must be finite"));
        }
        if lo == hi {
            return Ok(QuadratureResult {
                value: T::zero(),
                error_estimate: 0.0,
                panels: 0,
            });
        }
        let total = (hi - lo).abs();
        let mut panels = 1;
        let mut stack = vec![(lo, hi, self.rule.integrate(&f, lo, hi))];
        let mut sum = T::zero();
        let mut err = 0.0;
        while let Some((l, r, coarse)) = stack.pop() {
            let m = 0.5 * (l + r);
            let left = self.rule.integrate(&f, l, m);
            let right = self.rule.integrate(&f, m, r);
            panels += 2;
            let fine = left + right;
            let diff = (fine - coarse).magnitude();
            let local_tol = self.tol * (r - l).abs() / total;
            let roundoff = 64.0 * f64::EPSILON * fine.magnitude();
            let unresolvable = (r - l).abs() <= 1e-13 * total;
            if diff <= local_tol || diff <= roundoff || unresolvable {
                sum = sum + fine;
                err += diff;
                continue;
            }
            if panels + 2 > self.max_panels {
                let mut best = sum + fine;
                for &(_, _, c) in &stack {
                    best = best + c;
                }
                return Err(Error::QuadratureBudgetExceeded {
                    panels,
                    estimate: best.to_complex(),
                    error_bound: err + diff,
                });
            }
            stack.push((m, r, right));
            stack.push((l, m, left));
        }
        Ok(QuadratureResult {
            value: sum,
            error_estimate: err,
            panels,
        })
    }
}
