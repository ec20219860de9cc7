//! Workflows behind the `moving-well` binary.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 I/O failure, 3 a
//! requested time lies beyond the validity horizon, 4 a numerical check
//! failed.

use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Format, GeometryConfig, InitialState, RunConfig};
use crate::error::Error;
use crate::fdm::{fidelity, GridState};
use crate::geometry::WellGeometry;
use crate::modes::{gauge_phase, mode_energy, time_phase_integral, MovingMode};
use crate::output::{density_svg, write_csv, write_density_csv, write_json};
use crate::quadrature::AdaptiveQuadrature;
use crate::spectral::project;
use crate::verify::{
    audit_time_limit, boundary_check, convergence_from_reports, orthonormality_check,
    phase_identity_check, random_probes, random_times, residual_lab, residual_sweep,
    sign_convention_audit, Convention, SignAudit,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("time {t} lies beyond the validity horizon t* = {horizon}")]
    Horizon { t: f64, horizon: f64 },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Horizon { .. } => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::HorizonExceeded { t, horizon } => CliError::Horizon { t, horizon },
            Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            Error::QuadratureBudgetExceeded { .. } | Error::InvalidProbe { .. } | Error::AuditFailed(_) => {
                CliError::CheckFailed(e.to_string())
            }
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Fdm,
    Both,
}

pub type InitialFn = Box<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Builds the configured initial lab-frame wavefunction at `t = 0`.
/// `base_dir` anchors relative CSV paths.
pub fn initial_state(cfg: &RunConfig, base_dir: &Path) -> Result<InitialFn, CliError> {
    let g = cfg.geometry()?;
    match &cfg.state.initial {
        InitialState::Mode { n } => {
            let mode = MovingMode::new(g, *n)?;
            Ok(Box::new(move |x| mode.eval(x, 0.0).unwrap_or_default()))
        }
        &InitialState::Gaussian {
            center,
            width,
            momentum,
        } => {
            let hbar = g.hbar();
            let a = g.a();
            let raw = move |x: f64| {
                if !(0.0..=a).contains(&x) {
                    return Complex64::new(0.0, 0.0);
                }
                let envelope = (-(x - center).powi(2) / (4.0 * width * width)).exp();
                Complex64::from_polar(envelope, momentum * x / hbar)
            };
            let q = AdaptiveQuadrature::new(1e-14)?;
            let norm = q.integrate(|x: f64| raw(x).norm_sqr(), 0.0, a)?.value;
            if norm == 0.0 {
                return Err(CliError::Config("gaussian packet vanishes inside the well".into()));
            }
            let scale = norm.sqrt().recip();
            Ok(Box::new(move |x| raw(x) * scale))
        }
        InitialState::Csv { path } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let (xs, values) = read_state_csv(&full)?;
            Ok(Box::new(move |x| interpolate(&xs, &values, x)))
        }
    }
}

/// Reads `x, re[, im]` samples with a mandatory header row.
pub fn read_state_csv(path: &Path) -> Result<(Vec<f64>, Vec<Complex64>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let width = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .len();
    if !(2..=3).contains(&width) {
        return Err(CliError::Config(format!(
            "{}: expected 2 or 3 columns (x, re[, im]), found {width}",
            path.display()
        )));
    }
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<f64, CliError> {
            record
                .get(i)
                .unwrap_or("0")
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), line + 2)))
        };
        let x = field(0)?;
        let re = field(1)?;
        let im = if width == 3 { field(2)? } else { 0.0 };
        if let Some(&last) = xs.last() {
            if !(x > last) {
                return Err(CliError::Config(format!(
                    "{}: x must be strictly increasing (row {})",
                    path.display(),
                    line + 2
                )));
            }
        }
        xs.push(x);
        values.push(Complex64::new(re, im));
    }
    if xs.len() < 2 {
        return Err(CliError::Config(format!("{}: need at least two samples", path.display())));
    }
    Ok((xs, values))
}

/// Piecewise-linear interpolation, zero outside the sampled range.
fn interpolate(xs: &[f64], values: &[Complex64], x: f64) -> Complex64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return Complex64::new(0.0, 0.0);
    }
    let i = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let s = (x - x0) / (x1 - x0);
    values[i - 1] * (1.0 - s) + values[i] * s
}

fn sorted_snapshots(cfg: &RunConfig, g: &WellGeometry) -> Result<Vec<f64>, CliError> {
    let mut times = cfg.output.snapshot_times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    for &t in &times {
        g.check_time(t)?;
    }
    Ok(times)
}

fn well_grid(g: &WellGeometry, t: f64, points: usize) -> Result<Vec<f64>, CliError> {
    let (l, r) = g.wall_positions(t)?;
    let h = (r - l) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { r } else { l + i as f64 * h })
        .collect())
}

fn write_snapshot(
    cfg: &RunConfig,
    dir: &Path,
    stem: &str,
    t: f64,
    xs: &[f64],
    values: &[Complex64],
    walls: (f64, f64),
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    if cfg.output.wants(Format::Csv) {
        let path = dir.join(format!("{stem}.csv"));
        write_density_csv(&path, xs, values)?;
        files.push(path);
    }
    if cfg.output.wants(Format::Svg) {
        let density: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
        let path = dir.join(format!("{stem}.svg"));
        std::fs::write(&path, density_svg(&format!("{stem}, t = {t}"), xs, &density, walls))?;
        files.push(path);
    }
    Ok(())
}

fn prepare_output(cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join("resolved_config.json");
    write_json(&path, cfg)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct ModeRow {
    n: u32,
    k: f64,
    energy: f64,
}

#[derive(Debug, Serialize)]
struct ModesSummary {
    modes: Vec<ModeRow>,
    snapshots: Vec<FrameRow>,
}

#[derive(Debug, Serialize)]
struct FrameRow {
    t: f64,
    scale_factor: f64,
    tau: f64,
    log_amplitude: f64,
    x_left: f64,
    x_right: f64,
}

/// Tabulates modes `1..=n_max` and writes densities of the configured mode
/// (mode 1 when the initial state is not a mode) at each snapshot time.
pub fn cmd_modes(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let g = cfg.geometry()?;
    let times = sorted_snapshots(cfg, &g)?;
    let mut files = vec![prepare_output(cfg, dir)?];

    let frames: Vec<FrameRow> = times
        .iter()
        .map(|&t| {
            let (x_left, x_right) = g.wall_positions(t)?;
            Ok(FrameRow {
                t,
                scale_factor: g.scale_factor(t)?,
                tau: time_phase_integral(&g, t)?,
                log_amplitude: gauge_phase(&g, t)?.log_amplitude,
                x_left,
                x_right,
            })
        })
        .collect::<Result<_, Error>>()?;
    let modes: Vec<ModeRow> = (1..=cfg.state.n_max as u32)
        .map(|n| {
            let m = MovingMode::new(g, n)?;
            Ok(ModeRow {
                n,
                k: m.k(),
                energy: mode_energy(&g, n)?,
            })
        })
        .collect::<Result<_, Error>>()?;

    if cfg.output.wants(Format::Csv) {
        let mut header = vec!["n".to_string(), "k".to_string(), "E_n".to_string()];
        for f in &frames {
            header.push(format!("L(t={})", f.t));
            header.push(format!("tau(t={})", f.t));
            header.push(format!("log_amplitude(t={})", f.t));
        }
        let rows: Vec<Vec<f64>> = modes
            .iter()
            .map(|m| {
                let mut row = vec![m.n as f64, m.k, m.energy];
                for f in &frames {
                    row.extend([f.scale_factor, f.tau, f.log_amplitude]);
                }
                row
            })
            .collect();
        let path = dir.join("modes.csv");
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&path, &header, &rows)?;
        files.push(path);
    }
    if cfg.output.wants(Format::Json) {
        let path = dir.join("modes.json");
        write_json(&path, &ModesSummary { modes, snapshots: frames })?;
        files.push(path);
    }

    let n = match cfg.state.initial {
        InitialState::Mode { n } => n,
        _ => 1,
    };
    let mode = MovingMode::new(g, n)?;
    for (i, &t) in times.iter().enumerate() {
        let xs = well_grid(&g, t, cfg.output.grid_resolution)?;
        let values = mode.eval_grid(&xs, t)?;
        let walls = g.wall_positions(t)?;
        write_snapshot(cfg, dir, &format!("mode{n}_t{i:03}"), t, &xs, &values, walls, &mut files)?;
    }
    Ok(files)
}

#[derive(Debug, Serialize)]
struct ProjectionSummary<'a> {
    n_max: usize,
    quad_tol: f64,
    captured_norm: f64,
    truncation_error: f64,
    quadrature_estimate: f64,
    coefficients: &'a [Complex64],
}

/// Propagates the configured initial state with the chosen method(s) and
/// writes snapshots. With [`Method::Both`] it also writes `fidelity.csv` and
/// fails when any snapshot falls below the configured fidelity floor.
pub fn cmd_evolve(cfg: &RunConfig, method: Method, base_dir: &Path, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let g = cfg.geometry()?;
    let times = sorted_snapshots(cfg, &g)?;
    let initial = initial_state(cfg, base_dir)?;
    let mut files = vec![prepare_output(cfg, dir)?];

    let spectral = if matches!(method, Method::Analytic | Method::Both) {
        let report = project(&g, &initial, cfg.state.n_max, cfg.state.quad_tol)?;
        if cfg.output.wants(Format::Json) {
            let path = dir.join("projection.json");
            write_json(
                &path,
                &ProjectionSummary {
                    n_max: cfg.state.n_max,
                    quad_tol: cfg.state.quad_tol,
                    captured_norm: report.captured_norm,
                    truncation_error: report.truncation_error,
                    quadrature_estimate: report.quadrature_estimate,
                    coefficients: &report.coefficients,
                },
            )?;
            files.push(path);
        }
        let state = report.into_state(g)?;
        let mut observables = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let xs = well_grid(&g, t, cfg.output.grid_resolution)?;
            let values = state.eval_state(&xs, t)?;
            write_snapshot(cfg, dir, &format!("analytic_t{i:03}"), t, &xs, &values, g.wall_positions(t)?, &mut files)?;
            let o = state.observables(t, cfg.output.grid_resolution)?;
            observables.push(vec![t, o.norm_x, o.mean_x]);
        }
        if cfg.output.wants(Format::Csv) {
            let path = dir.join("analytic_observables.csv");
            write_csv(&path, &["t", "norm_x", "mean_x"], &observables)?;
            files.push(path);
        }
        Some(state)
    } else {
        None
    };

    if matches!(method, Method::Fdm | Method::Both) {
        let settings = cfg.solver_settings()?;
        let mut grid = GridState::init_from_lab(&g, &initial, cfg.solver.nx, 0.0)?;
        let mut norms = Vec::new();
        let mut fidelities = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            grid.evolve_to(t, &settings)?;
            let lab = grid.map_to_lab();
            write_snapshot(cfg, dir, &format!("fdm_t{i:03}"), t, &lab.xs, &lab.values, g.wall_positions(t)?, &mut files)?;
            norms.push(vec![t, grid.discrete_norm()]);
            if let Some(state) = &spectral {
                let exact = state.eval_state(&lab.xs, t)?;
                fidelities.push(vec![t, fidelity(&lab.values, &exact, &lab.xs)?]);
            }
        }
        if cfg.output.wants(Format::Csv) {
            let path = dir.join("fdm_norm.csv");
            write_csv(&path, &["t", "discrete_norm"], &norms)?;
            files.push(path);
        }
        if method == Method::Both {
            let path = dir.join("fidelity.csv");
            write_csv(&path, &["t", "fidelity"], &fidelities)?;
            files.push(path);
            let floor = cfg.verify.fidelity_floor;
            if let Some(worst) = fidelities.iter().find(|r| r[1] < floor) {
                return Err(CliError::CheckFailed(format!(
                    "fidelity {} at t = {} is below the floor {floor}",
                    worst[1], worst[0]
                )));
            }
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: None,
            upper: Some(upper),
            passed: value <= upper,
            detail: None,
        }
    }

    fn within(name: impl Into<String>, value: f64, range: [f64; 2]) -> Self {
        Self {
            name: name.into(),
            value,
            lower: Some(range[0]),
            upper: Some(range[1]),
            passed: value >= range[0] && value <= range[1],
            detail: None,
        }
    }

    fn failed(name: impl Into<String>, detail: String) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            lower: None,
            upper: None,
            passed: false,
            detail: Some(detail),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub checks: Vec<CheckRecord>,
    pub sign_audit: Option<SignAudit>,
}

/// Independent random stream per check, so adding a check never perturbs the
/// samples of another.
fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs every audit and collects the results. Pure: no files are touched.
pub fn verify_report(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let g = cfg.geometry()?;
    let v = &cfg.verify;
    let mut checks = Vec::new();

    let coarsest = v.convergence_spacings[0].max(v.dx).max(v.dt);
    for &n in &v.residual_modes {
        let mode = MovingMode::new(g, n)?;
        let field = |x: f64, t: f64| mode.eval(x, t);
        let mut rng = stream(v.seed, 1 + n as u64);
        let probes = random_probes(&g, v.probe_count, v.t_max, coarsest, coarsest, &mut rng)?;
        let report = residual_lab(&g, field, &probes, v.dx, v.dt)?;
        checks.push(CheckRecord::at_most(format!("residual/mode_{n}"), report.relative_max, v.residual_threshold));
        let sweep = residual_sweep(&g, field, &probes, &v.convergence_spacings)?;
        let order = convergence_from_reports(&sweep)?;
        checks.push(CheckRecord::within(format!("convergence_order/mode_{n}"), order.fitted_order, v.order_range));
        let times = random_times(&g, v.boundary_times, v.t_max, &mut stream(v.seed, 100 + n as u64));
        let boundary = boundary_check(&g, field, &times)?;
        checks.push(CheckRecord::at_most(format!("boundary/mode_{n}"), boundary, v.boundary_threshold));
    }

    let q = AdaptiveQuadrature::new(v.quad_tol)?;
    let norm_times = random_times(&g, v.norm_times, v.t_max, &mut stream(v.seed, 200));
    let mut worst_norm: f64 = 0.0;
    for n in 1..=v.norm_modes {
        let mode = MovingMode::new(g, n)?;
        for &t in &norm_times {
            let (l, r) = g.wall_positions(t)?;
            let norm = q.integrate(|x: f64| mode.eval(x, t).unwrap_or_default().norm_sqr(), l, r)?.value;
            worst_norm = worst_norm.max((norm - 1.0).abs());
        }
    }
    checks.push(CheckRecord::at_most("norm_conservation", worst_norm, v.norm_threshold));

    for &t in &v.gram_times {
        let dev = orthonormality_check(&g, v.gram_n_max, t, v.quad_tol)?;
        checks.push(CheckRecord::at_most(format!("orthonormality/t={t}"), dev, v.orthonormality_threshold));
    }

    let sign_audit = match sign_convention_audit(&g, 1, &v.audit_settings()) {
        Ok(audit) => {
            let expected = if audit.degenerate {
                Convention::Tie
            } else {
                Convention::CoMoving
            };
            let mut rec = CheckRecord::at_most(
                "sign_audit",
                audit.candidates[0].residual.relative_max,
                v.residual_threshold,
            );
            rec.passed = audit.passing_convention == expected;
            rec.detail = Some(format!("passing convention: {:?}", audit.passing_convention));
            checks.push(rec);
            Some(audit)
        }
        Err(Error::AuditFailed(msg)) => {
            checks.push(CheckRecord::failed("sign_audit", msg));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let mut rng = stream(v.seed, 300);
    let limit = audit_time_limit(&g, v.t_max);
    let samples: Vec<(f64, f64)> = (0..v.phase_samples)
        .map(|_| (rng.random_range(0.0..=g.a()), rng.random_range(0.0..=limit)))
        .collect();
    let phase = phase_identity_check(&g, &samples, g.a() / 8.0)?;
    checks.push(CheckRecord::at_most("phase_identity/gauge_condition", phase.gauge_condition, v.phase_threshold));
    checks.push(CheckRecord::at_most("phase_identity/curvature", phase.curvature, v.phase_threshold));

    let tq = AdaptiveQuadrature::new(1e-15)?;
    let mut worst_tau: f64 = 0.0;
    for &t in &random_times(&g, 50, v.t_max, &mut stream(v.seed, 400)) {
        let closed = time_phase_integral(&g, t)?;
        let oracle = tq
            .integrate(|s: f64| g.scale_factor(s).map(|l| 1.0 / (l * l)).unwrap_or(f64::NAN), 0.0, t)?
            .value;
        worst_tau = worst_tau.max((closed - oracle).abs());
    }
    checks.push(CheckRecord::at_most("tau_closed_form", worst_tau, v.tau_threshold));

    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        seed: v.seed,
        geometry: cfg.geometry,
        checks,
        sign_audit,
    })
}

/// Runs [`verify_report`] and writes `verify_report.json`.
pub fn cmd_verify(cfg: &RunConfig, dir: &Path) -> Result<VerifyReport, CliError> {
    prepare_output(cfg, dir)?;
    let report = verify_report(cfg)?;
    write_json(&dir.join("verify_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Tabulate the moving modes and write their densities.
    Modes,
    /// Propagate the configured initial state.
    Evolve,
    /// Run the residual, boundary, orthonormality, convergence and sign audits.
    Verify,
}

/// Loads the config and dispatches. `out` overrides the configured output
/// directory.
pub fn run(command: Command, config: &Path, method: Method, out: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    let base = config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None if cfg.output.directory.is_absolute() => cfg.output.directory.clone(),
        None => base.join(&cfg.output.directory),
    };
    match command {
        Command::Modes => cmd_modes(&cfg, &dir).map(|_| ()),
        Command::Evolve => cmd_evolve(&cfg, method, &base, &dir).map(|_| ()),
        Command::Verify => {
            let report = cmd_verify(&cfg, &dir)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(CliError::CheckFailed(failed.join(", ")))
            }
        }
    }
}
