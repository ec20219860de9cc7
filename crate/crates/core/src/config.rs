//! JSON run configuration for the command-line front end.
//!
//! Every block is optional and falls back to defaults; unknown keys are
//! rejected. All numeric constraints of the library are re-checked by
//! [`RunConfig::validate`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fdm::SolverSettings;
use crate::geometry::{PhysicalConstants, WellGeometry};
use crate::verify::AuditSettings;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub state: StateConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub a: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            u_left: -0.1,
            u_right: 0.2,
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Moving mode `n` at `t = 0`.
    Mode { n: u32 },
    /// Gaussian packet normalized on `[0, a]`.
    Gaussian {
        center: f64,
        width: f64,
        momentum: f64,
    },
    /// Samples `x, re[, im]` with a header row, linearly interpolated. Relative
    /// paths resolve against the config file's directory.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    pub initial: InitialState,
    pub n_max: usize,
    pub quad_tol: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            initial: InitialState::Mode { n: 1 },
            n_max: 64,
            quad_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub nx: usize,
    pub dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { nx: 511, dt: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub grid_resolution: usize,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            snapshot_times: vec![0.0, 0.5, 1.0],
            grid_resolution: 201,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub probe_count: usize,
    pub boundary_times: usize,
    pub norm_times: usize,
    pub t_max: f64,
    pub dx: f64,
    pub dt: f64,
    /// Modes whose residual, convergence order and boundary values are checked.
    pub residual_modes: Vec<u32>,
    pub convergence_spacings: Vec<f64>,
    pub order_range: [f64; 2],
    pub residual_threshold: f64,
    pub boundary_threshold: f64,
    pub norm_modes: u32,
    pub norm_threshold: f64,
    pub gram_n_max: u32,
    pub gram_times: Vec<f64>,
    pub orthonormality_threshold: f64,
    pub phase_samples: usize,
    pub phase_threshold: f64,
    pub tau_threshold: f64,
    pub quad_tol: f64,
    /// `evolve --method both` fails when any snapshot fidelity drops below this.
    pub fidelity_floor: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 20_061_123,
            probe_count: 200,
            boundary_times: 50,
            norm_times: 20,
            t_max: 5.0,
            dx: 1e-3,
            dt: 1e-3,
            residual_modes: vec![1],
            convergence_spacings: vec![4e-3, 2e-3, 1e-3],
            order_range: [1.8, 2.2],
            residual_threshold: 1e-4,
            boundary_threshold: 1e-12,
            norm_modes: 5,
            norm_threshold: 1e-10,
            gram_n_max: 8,
            gram_times: vec![0.0, 1.0, 3.0],
            orthonormality_threshold: 1e-10,
            phase_samples: 100,
            phase_threshold: 1e-12,
            tau_threshold: 1e-12,
            quad_tol: 1e-13,
            fidelity_floor: 1.0 - 1e-6,
        }
    }
}

impl VerifyConfig {
    pub fn audit_settings(&self) -> AuditSettings {
        AuditSettings {
            probe_count: self.probe_count,
            boundary_times: self.boundary_times,
            t_max: self.t_max,
            dx: self.dx,
            dt: self.dt,
            residual_threshold: self.residual_threshold,
            boundary_threshold: self.boundary_threshold,
            seed: self.seed,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| invalid(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn geometry(&self) -> Result<WellGeometry> {
        let g = &self.geometry;
        WellGeometry::new(g.a, g.u_left, g.u_right, PhysicalConstants::new(g.hbar, g.mass)?)
    }

    pub fn solver_settings(&self) -> Result<SolverSettings> {
        SolverSettings::new(self.solver.dt)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.geometry()?;
        match &self.state.initial {
            InitialState::Mode { n } if *n == 0 => return Err(invalid("state mode n must be at least 1")),
            InitialState::Gaussian { center, width, momentum } => {
                positive("gaussian width", *width)?;
                if !center.is_finite() || !momentum.is_finite() {
                    return Err(invalid("gaussian center and momentum must be finite"));
                }
            }
            _ => {}
        }
        if self.state.n_max == 0 {
            return Err(invalid("state n_max must be at least 1"));
        }
        positive("state quad_tol", self.state.quad_tol)?;
        if self.solver.nx < 8 {
            return Err(invalid(format!("solver nx must be at least 8, got {}", self.solver.nx)));
        }
        positive("solver dt", self.solver.dt)?;
        if self.output.grid_resolution < 16 {
            return Err(invalid("output grid_resolution must be at least 16"));
        }
        if self.output.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("snapshot times must be finite and non-negative"));
        }
        let v = &self.verify;
        if v.probe_count == 0 || v.boundary_times == 0 || v.norm_times == 0 || v.phase_samples == 0 {
            return Err(invalid("verify sample counts must be positive"));
        }
        for (name, x) in [
            ("verify t_max", v.t_max),
            ("verify dx", v.dx),
            ("verify dt", v.dt),
            ("verify residual_threshold", v.residual_threshold),
            ("verify boundary_threshold", v.boundary_threshold),
            ("verify norm_threshold", v.norm_threshold),
            ("verify orthonormality_threshold", v.orthonormality_threshold),
            ("verify phase_threshold", v.phase_threshold),
            ("verify tau_threshold", v.tau_threshold),
            ("verify quad_tol", v.quad_tol),
        ] {
            positive(name, x)?;
        }
        if v.residual_modes.iter().any(|&n| n == 0) || v.norm_modes == 0 || v.gram_n_max == 0 {
            return Err(invalid("verify mode numbers must be at least 1"));
        }
        if v.convergence_spacings.len() < 3 || v.convergence_spacings.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
            return Err(invalid(
                "verify convergence_spacings needs at least 3 strictly decreasing positive values",
            ));
        }
        if !(v.order_range[0] < v.order_range[1]) {
            return Err(invalid("verify order_range must be [low, high] with low < high"));
        }
        if !(v.fidelity_floor > 0.0 && v.fidelity_floor <= 1.0) {
            return Err(invalid("verify fidelity_floor must lie in (0, 1]"));
        }
        for &t in &v.gram_times {
            g.check_time(t)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"geometry": {"a": 1, "speed": 2}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"extra": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"state": {"initial": {"kind": "mode", "n": 2, "m": 1}}}"#).is_err());
    }

    #[test]
    fn parses_each_initial_state() {
        let g = r#"{"state": {"initial": {"kind": "gaussian", "center": 0.4, "width": 0.05, "momentum": 10}}}"#;
        assert!(matches!(
            RunConfig::from_json(g).unwrap().state.initial,
            InitialState::Gaussian { .. }
        ));
        let c = r#"{"state": {"initial": {"kind": "csv", "path": "init.csv"}}}"#;
        assert!(matches!(
            RunConfig::from_json(c).unwrap().state.initial,
            InitialState::Csv { .. }
        ));
    }

    #[test]
    fn numeric_constraints_rechecked() {
        assert!(RunConfig::from_json(r#"{"geometry": {"a": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"geometry": {"mass": -1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"solver": {"nx": 4}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"solver": {"dt": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"state": {"initial": {"kind": "mode", "n": 0}}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"verify": {"convergence_spacings": [1e-3, 2e-3, 4e-3]}}"#).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let mut cfg = RunConfig::default();
        cfg.output.formats = vec![Format::Svg];
        cfg.state.initial = InitialState::Gaussian {
            center: 0.3,
            width: 0.07,
            momentum: -4.0,
        };
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
