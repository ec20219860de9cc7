//! Python bindings for `moving_well`.

use moving_well::cli::{verify_report, CliError};
use moving_well::config::RunConfig;
use moving_well::fdm::{fidelity as grid_fidelity, GridState, SolverSettings};
use moving_well::spectral::{project as project_state, SpectralState};
use moving_well::verify::{sign_convention_audit, AuditSettings};
use moving_well::{Error, MovingMode, PhysicalConstants, WellGeometry};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(moving_well, HorizonError, PyValueError);
create_exception!(moving_well, CheckError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::HorizonExceeded { .. } => HorizonError::new_err(e.to_string()),
        Error::InvalidParameter(_) | Error::InvalidProbe { .. } => PyValueError::new_err(e.to_string()),
        Error::QuadratureBudgetExceeded { .. } | Error::AuditFailed(_) => CheckError::new_err(e.to_string()),
    }
}

fn cli_to_py(e: CliError) -> PyErr {
    match e {
        CliError::Horizon { .. } => HorizonError::new_err(e.to_string()),
        CliError::CheckFailed(_) => CheckError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Geometry", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGeometry(WellGeometry);

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (a, u_left, u_right, hbar = 1.0, mass = 1.0))]
    fn new(a: f64, u_left: f64, u_right: f64, hbar: f64, mass: f64) -> PyResult<Self> {
        let constants = PhysicalConstants::new(hbar, mass).map_err(to_py)?;
        WellGeometry::new(a, u_left, u_right, constants).map(Self).map_err(to_py)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    #[getter]
    fn u_left(&self) -> f64 {
        self.0.u_left()
    }

    #[getter]
    fn u_right(&self) -> f64 {
        self.0.u_right()
    }

    fn width(&self, t: f64) -> PyResult<f64> {
        self.0.width(t).map_err(to_py)
    }

    fn scale_factor(&self, t: f64) -> PyResult<f64> {
        self.0.scale_factor(t).map_err(to_py)
    }

    fn wall_positions(&self, t: f64) -> PyResult<(f64, f64)> {
        self.0.wall_positions(t).map_err(to_py)
    }

    fn validity_horizon(&self) -> Option<f64> {
        self.0.validity_horizon()
    }

    fn tau(&self, t: f64) -> PyResult<f64> {
        moving_well::time_phase_integral(&self.0, t).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Geometry(a={}, u_left={}, u_right={}, hbar={}, mass={})",
            self.0.a(),
            self.0.u_left(),
            self.0.u_right(),
            self.0.hbar(),
            self.0.mass()
        )
    }
}

#[pyclass(name = "Mode", frozen)]
struct PyMode(MovingMode);

#[pymethods]
impl PyMode {
    #[new]
    fn new(geometry: &PyGeometry, n: u32) -> PyResult<Self> {
        MovingMode::new(geometry.0, n).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.n()
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy()
    }

    fn __call__(&self, x: f64, t: f64) -> PyResult<Complex64> {
        self.0.eval(x, t).map_err(to_py)
    }

    fn eval_grid(&self, xs: Vec<f64>, t: f64) -> PyResult<Vec<Complex64>> {
        self.0.eval_grid(&xs, t).map_err(to_py)
    }
}

#[pyclass(name = "SpectralState", frozen)]
struct PySpectralState(SpectralState);

#[pymethods]
impl PySpectralState {
    #[new]
    fn new(geometry: &PyGeometry, coefficients: Vec<Complex64>) -> PyResult<Self> {
        SpectralState::new(geometry.0, coefficients).map(Self).map_err(to_py)
    }

    #[getter]
    fn coefficients(&self) -> Vec<Complex64> {
        self.0.coefficients().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn __call__(&self, x: f64, t: f64) -> PyResult<Complex64> {
        self.0.eval(x, t).map_err(to_py)
    }

    fn eval_grid(&self, xs: Vec<f64>, t: f64) -> PyResult<Vec<Complex64>> {
        self.0.eval_state(&xs, t).map_err(to_py)
    }
}

/// Projects `f(x)`, sampled at `t = 0`, onto the first `n_max` modes.
#[pyfunction]
#[pyo3(signature = (geometry, f, n_max, quad_tol = 1e-12))]
fn project(py: Python<'_>, geometry: &PyGeometry, f: Bound<'_, PyAny>, n_max: usize, quad_tol: f64) -> PyResult<PySpectralState> {
    let f: Py<PyAny> = f.unbind();
    let failure: std::sync::Mutex<Option<PyErr>> = std::sync::Mutex::new(None);
    let call = |x: f64| {
        Python::attach(|py| {
            f.call1(py, (x,)).and_then(|v| v.extract::<Complex64>(py)).unwrap_or_else(|e| {
                failure.lock().unwrap().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            })
        })
    };
    let g = geometry.0;
    let report = py.detach(|| project_state(&g, call, n_max, quad_tol));
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let report = report.map_err(to_py)?;
    report.into_state(g).map(PySpectralState).map_err(to_py)
}

/// Crank-Nicolson propagation of `state` from `t0` to `t1`. Returns the lab
/// grid and the samples at `t1`.
#[pyfunction]
#[pyo3(signature = (state, t0, t1, nx = 511, dt = 1e-4))]
fn fdm_solve(py: Python<'_>, state: &PySpectralState, t0: f64, t1: f64, nx: usize, dt: f64) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
    let s = &state.0;
    let g = *s.geometry();
    py.detach(|| {
        let settings = SolverSettings::new(dt)?;
        let mut grid = GridState::init_from_lab(&g, |x| s.eval(x, t0).unwrap_or_default(), nx, t0)?;
        grid.evolve_to(t1, &settings)?;
        let lab = grid.map_to_lab();
        Ok((lab.xs, lab.values))
    })
    .map_err(to_py)
}

#[pyfunction]
fn fidelity(a: Vec<Complex64>, b: Vec<Complex64>, xs: Vec<f64>) -> PyResult<f64> {
    grid_fidelity(&a, &b, &xs).map_err(to_py)
}

/// Name of the mode convention that solves the wave equation for `geometry`.
#[pyfunction]
#[pyo3(signature = (geometry, n = 1))]
fn sign_audit(py: Python<'_>, geometry: &PyGeometry, n: u32) -> PyResult<String> {
    let g = geometry.0;
    let audit = py
        .detach(|| sign_convention_audit(&g, n, &AuditSettings::default()))
        .map_err(to_py)?;
    Ok(serde_json::to_value(audit.passing_convention)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default())
}

/// Runs the verification suite for a JSON config and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config_json = "{}"))]
fn verify(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = RunConfig::from_json(config_json).map_err(to_py)?;
    let report = py.detach(|| verify_report(&cfg)).map_err(cli_to_py)?;
    serde_json::to_string_pretty(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "moving_well")]
fn moving_well_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyMode>()?;
    m.add_class::<PySpectralState>()?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(fdm_solve, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(sign_audit, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("HorizonError", m.py().get_type::<HorizonError>())?;
    m.add("CheckError", m.py().get_type::<CheckError>())?;
    Ok(())
}
