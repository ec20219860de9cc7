//! Exact dynamics of a particle in an infinite square well whose walls move
//! at constant velocities.
//!
//! * [`geometry`]: wall trajectories, scale factor and co-moving coordinates.
//! * [`modes`]: the exact moving-wall eigenmodes and their phase factors.
//! * [`spectral`]: exact propagation of arbitrary states by projection onto
//!   the moving modes.
//! * [`fdm`]: an independent Crank-Nicolson solver in the co-moving frame.
//! * [`verify`]: residual, boundary, orthonormality and sign-convention audits.
//! * [`cli`]: configuration-driven workflows behind the `moving-well` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod fdm;
pub mod geometry;
pub mod modes;
pub mod output;
pub mod quadrature;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{PhysicalConstants, WellGeometry};
pub use modes::{gauge_phase, mode_energy, time_phase_integral, MovingMode, PhaseParts};
pub use num_complex::Complex64;
