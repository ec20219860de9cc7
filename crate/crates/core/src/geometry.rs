//! Geometry of an infinite square well whose two walls move at constant
//! velocities.
//!
//! The left wall sits at `u_left * t`, the right wall at `a + u_right * t`.
//! Velocities are signed, so expanding, contracting and rigidly translating
//! wells share one parametrization. The scale factor
//! `L(t) = (a + delta * t) / a` with `delta = u_right - u_left` is affine in
//! time and the co-moving coordinate `(x - u_left * t) / L(t)` maps the
//! instantaneous well onto the fixed interval `[0, a]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    /// Natural units, `hbar = mass = 1`.
    pub fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(invalid(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::natural()
    }
}

/// A well of initial width `a` with signed wall velocities.
///
/// Immutable once built. The width is checked on every time-dependent query
/// rather than at construction, since a contracting well is perfectly valid
/// before its width reaches zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellGeometry {
    a: f64,
    u_left: f64,
    u_right: f64,
    constants: PhysicalConstants,
}

impl WellGeometry {
    pub fn new(a: f64, u_left: f64, u_right: f64, constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid(format!("initial width a must be positive, got {a}")));
        }
        if !u_left.is_finite() || !u_right.is_finite() {
            return Err(invalid("wall velocities must be finite"));
        }
        Ok(Self {
            a,
            u_left,
            u_right,
            constants,
        })
    }

    /// Both walls at rest.
    pub fn fixed(a: f64, constants: PhysicalConstants) -> Result<Self> {
        Self::new(a, 0.0, 0.0, constants)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn u_left(&self) -> f64 {
        self.u_left
    }

    pub fn u_right(&self) -> f64 {
        self.u_right
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn hbar(&self) -> f64 {
        self.constants.hbar
    }

    pub fn mass(&self) -> f64 {
        self.constants.mass
    }

    /// Rate of change of the width, `u_right - u_left`.
    pub fn delta(&self) -> f64 {
        self.u_right - self.u_left
    }

    /// `dL/dt`, constant for uniformly moving walls.
    pub fn l_dot(&self) -> f64 {
        self.delta() / self.a
    }

    pub fn is_static(&self) -> bool {
        self.u_left == 0.0 && self.u_right == 0.0
    }

    fn raw_width(&self, t: f64) -> f64 {
        self.a + self.delta() * t
    }

    /// Fails with `HorizonExceeded` when the width at `t` is not positive.
    pub fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(invalid(format!("time must be finite, got {t}")));
        }
        if self.raw_width(t) > 0.0 {
            Ok(())
        } else {
            Err(Error::HorizonExceeded {
                t,
                horizon: -self.a / self.delta(),
            })
        }
    }

    /// Instantaneous width `a * L(t)`.
    pub fn width(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.raw_width(t))
    }

    /// `L(t) = 1 + delta * t / a`.
    pub fn scale_factor(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(1.0 + self.delta() * t / self.a)
    }

    pub fn wall_positions(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        Ok((self.u_left * t, self.a + self.u_right * t))
    }

    /// Lab position to co-moving coordinate in `[0, a]`.
    pub fn to_comoving(&self, x: f64, t: f64) -> Result<f64> {
        let l = self.scale_factor(t)?;
        Ok((x - self.u_left * t) / l)
    }

    pub fn from_comoving(&self, x_bar: f64, t: f64) -> Result<f64> {
        let l = self.scale_factor(t)?;
        Ok(self.u_left * t + l * x_bar)
    }

    /// Time at which a contracting well collapses; `None` when the width
    /// never shrinks.
    pub fn validity_horizon(&self) -> Option<f64> {
        let delta = self.delta();
        if delta < 0.0 {
            Some(self.a / -delta)
        } else {
            None
        }
    }
}
