//! Python bindings for the cqsqueeze library.

use std::path::PathBuf;

use cqsqueeze as core;
use cqsqueeze::squeezing::{theta_grid, theta_scan_on};
use cqsqueeze::{runner, Error, ExperimentConfig, LinearizationOptions};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Usage(_) => PyValueError::new_err(e.to_string()),
        Error::Diverged { .. } | Error::Background { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Consistency(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => PyOSError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Uniform periodic time grid of `n` points spanning `t_span`.
#[pyclass(frozen, from_py_object, name = "TimeGrid", module = "pycqsqueeze")]
#[derive(Clone)]
struct PyTimeGrid(core::TimeGrid);

#[pymethods]
impl PyTimeGrid {
    #[new]
    fn new(n: usize, t_span: f64) -> PyResult<Self> {
        core::TimeGrid::new(n, t_span).py().map(Self)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn t_span(&self) -> f64 {
        self.0.t_span()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.0.t().to_vec()
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.0.omega().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("TimeGrid(n={}, t_span={})", self.0.n(), self.0.t_span())
    }
}

impl PyTimeGrid {
    fn field(&self, values: Vec<Complex64>) -> PyResult<core::ComplexField> {
        core::ComplexField::from_values(&self.0, values).py()
    }
}

/// Nonlinearity coefficients: cubic `chi` and quintic `gamma`.
#[pyclass(frozen, from_py_object, name = "CqParams", module = "pycqsqueeze")]
#[derive(Clone, Copy)]
struct PyCqParams(core::CqParams);

#[pymethods]
impl PyCqParams {
    #[new]
    #[pyo3(signature = (gamma, chi = 1.0))]
    fn new(gamma: f64, chi: f64) -> PyResult<Self> {
        core::CqParams::new(chi, gamma).py().map(Self)
    }

    /// Linear dispersion without any nonlinearity.
    #[staticmethod]
    fn dispersion_only() -> Self {
        Self(core::CqParams::dispersion_only())
    }

    #[getter]
    fn chi(&self) -> f64 {
        self.0.chi()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    fn __repr__(&self) -> String {
        format!("CqParams(gamma={}, chi={})", self.0.gamma(), self.0.chi())
    }
}

/// Stationary soliton with propagation constant `beta`.
#[pyclass(frozen, from_py_object, name = "SolitonSpec", module = "pycqsqueeze")]
#[derive(Clone, Copy)]
struct PySolitonSpec(core::SolitonSpec);

#[pymethods]
impl PySolitonSpec {
    #[new]
    fn new(params: PyCqParams, beta: f64) -> PyResult<Self> {
        core::SolitonSpec::new(params.0, beta).py().map(Self)
    }

    #[staticmethod]
    fn from_amplitude(params: PyCqParams, amplitude: f64) -> PyResult<Self> {
        core::SolitonSpec::from_amplitude(params.0, amplitude).py().map(Self)
    }

    #[getter]
    fn params(&self) -> PyCqParams {
        PyCqParams(self.0.params)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.0.amplitude()
    }

    /// FWHM of the intensity profile, if defined.
    #[getter]
    fn width(&self) -> Option<f64> {
        self.0.width()
    }

    /// Soliton period `pi/(2*beta)`.
    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    fn profile(&self, grid: &PyTimeGrid) -> PyResult<Vec<Complex64>> {
        Ok(core::soliton_profile(&self.0, &grid.0).py()?.into_values())
    }

    fn __repr__(&self) -> String {
        format!("SolitonSpec(beta={}, amplitude={})", self.0.beta, self.0.amplitude())
    }
}

/// Gaussian input `A exp(-t²/(2 alpha²) + i chirp t²)`.
#[pyclass(frozen, from_py_object, name = "GaussianSpec", module = "pycqsqueeze")]
#[derive(Clone, Copy)]
struct PyGaussianSpec(core::GaussianSpec);

#[pymethods]
impl PyGaussianSpec {
    #[new]
    #[pyo3(signature = (amplitude, alpha, chirp = 0.0))]
    fn new(amplitude: f64, alpha: f64, chirp: f64) -> PyResult<Self> {
        core::GaussianSpec::new(amplitude, alpha, chirp).py().map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (energy, alpha, chirp = 0.0))]
    fn from_energy(energy: f64, alpha: f64, chirp: f64) -> PyResult<Self> {
        core::GaussianSpec::from_energy(energy, alpha, chirp).py().map(Self)
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.0.amplitude
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy()
    }

    fn profile(&self, grid: &PyTimeGrid) -> Vec<Complex64> {
        core::gaussian_pulse(&self.0, &grid.0).into_values()
    }
}

/// Quadrature variance ratio `R(theta) = a cos² + b sin² + 2c sin cos`.
#[pyclass(frozen, from_py_object, name = "QuadratureForm", module = "pycqsqueeze")]
#[derive(Clone, Copy)]
struct PyQuadratureForm(core::QuadratureForm);

#[pymethods]
impl PyQuadratureForm {
    #[new]
    fn new(a: f64, b: f64, c: f64) -> Self {
        Self(core::QuadratureForm { a, b, c })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    fn ratio(&self, theta: f64) -> f64 {
        self.0.ratio(theta)
    }

    /// `(R_opt, theta_opt)` with `theta_opt` in `[0, pi)`.
    fn optimum(&self) -> (f64, f64) {
        self.0.optimum()
    }

    fn maximum(&self) -> f64 {
        self.0.maximum()
    }

    fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// Classical run with stored checkpoints.
#[pyclass(frozen, name = "Trajectory", module = "pycqsqueeze")]
struct PyTrajectory(core::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn dz(&self) -> f64 {
        self.0.dz()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.0.n_steps()
    }

    #[getter]
    fn grid(&self) -> PyTimeGrid {
        PyTimeGrid(self.0.grid().clone())
    }

    fn initial(&self) -> Vec<Complex64> {
        self.0.initial().into_values()
    }

    fn final_field(&self) -> Vec<Complex64> {
        self.0.final_field().into_values()
    }

    fn field_at_step(&self, step: usize) -> PyResult<Vec<Complex64>> {
        Ok(self.0.field_at_step(step).py()?.into_values())
    }

    fn photon_drift(&self) -> f64 {
        self.0.photon_drift()
    }

    fn hamiltonian_drift(&self) -> f64 {
        self.0.hamiltonian_drift()
    }
}

/// Optimal squeezing ratio sampled along a run.
#[pyclass(frozen, name = "SqueezingCurve", module = "pycqsqueeze")]
struct PySqueezingCurve(core::SqueezingCurve);

#[pymethods]
impl PySqueezingCurve {
    #[getter]
    fn z(&self) -> Vec<f64> {
        self.0.z_points.clone()
    }

    #[getter]
    fn z_in_periods(&self) -> Vec<f64> {
        self.0.z_in_periods()
    }

    #[getter]
    fn r_opt(&self) -> Vec<f64> {
        self.0.r_opt.clone()
    }

    #[getter]
    fn r_opt_db(&self) -> Vec<f64> {
        self.0.r_opt_db()
    }

    #[getter]
    fn theta_opt(&self) -> Vec<f64> {
        self.0.theta_opt.clone()
    }

    #[getter]
    fn forms(&self) -> Vec<PyQuadratureForm> {
        self.0.forms.iter().copied().map(PyQuadratureForm).collect()
    }
}

#[pyfunction]
#[pyo3(signature = (initial, grid, params, length, dz = 1e-3))]
fn propagate(initial: Vec<Complex64>, grid: &PyTimeGrid, params: PyCqParams, length: f64, dz: f64) -> PyResult<PyTrajectory> {
    let u = grid.field(initial)?;
    core::propagate(&u, params.0, length, &core::StepConfig::with_dz(dz)).py().map(PyTrajectory)
}

/// Pull a projection function at the end of `traj` back to `z = 0`.
#[pyfunction]
fn back_propagate(f_final: Vec<Complex64>, traj: &PyTrajectory) -> PyResult<Vec<Complex64>> {
    let f = core::ComplexField::from_values(traj.0.grid(), f_final).py()?;
    Ok(core::back_propagate(&f, &traj.0).py()?.into_values())
}

#[pyfunction]
#[pyo3(signature = (traj, n_samples, soliton_period = 1.0))]
fn squeezing_curve(traj: &PyTrajectory, n_samples: usize, soliton_period: f64) -> PyResult<PySqueezingCurve> {
    core::squeezing::squeezing_curve_on(&traj.0, n_samples, soliton_period, LinearizationOptions::default())
        .py()
        .map(PySqueezingCurve)
}

/// `(theta, R(theta))` at the end of `traj` over `n` phases in `[0, pi)`.
#[pyfunction]
fn theta_scan(traj: &PyTrajectory, n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let scan = theta_scan_on(&traj.0, &theta_grid(n), LinearizationOptions::default()).py()?;
    Ok((scan.theta, scan.r))
}

/// Vacuum variance of the quadrature measured by `f`.
#[pyfunction]
fn coherent_variance(f: Vec<Complex64>, grid: &PyTimeGrid) -> PyResult<f64> {
    Ok(core::coherent_variance(&grid.field(f)?))
}

#[pyfunction]
fn solve_bistable_amplitudes(params: PyCqParams, tau: f64) -> Vec<f64> {
    core::solve_bistable_amplitudes(params.0, tau)
}

/// `(tau_min, A)` at the turning point of the width–amplitude curve.
#[pyfunction]
fn min_width(params: PyCqParams) -> PyResult<(f64, f64)> {
    core::min_width(params.0).py()
}

#[pyfunction]
fn beta_from_amplitude(params: PyCqParams, amplitude: f64) -> PyResult<f64> {
    core::beta_from_amplitude(params.0, amplitude).py()
}

#[pyfunction]
fn soliton_period(beta: f64) -> f64 {
    core::soliton_period(beta)
}

/// Run a CLI command on a config file.  Returns `(passed, manifest_json)`.
#[pyfunction]
#[pyo3(signature = (command, config, overrides = Vec::new()))]
fn run(command: &str, config: PathBuf, overrides: Vec<String>) -> PyResult<(bool, String)> {
    let cfg = ExperimentConfig::load(&config, &overrides).py()?;
    let summary = match command {
        "family" => runner::cmd_family(&cfg),
        "propagate" => runner::cmd_propagate(&cfg),
        "squeeze" => runner::cmd_squeeze(&cfg),
        "theta-scan" => runner::cmd_theta_scan(&cfg),
        "validate" => runner::cmd_validate(&cfg),
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    }
    .py()?;
    let manifest = runner::read_manifest(&summary.manifest).py()?;
    Ok((summary.passed, manifest.to_string()))
}

#[pymodule]
fn pycqsqueeze(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeGrid>()?;
    m.add_class::<PyCqParams>()?;
    m.add_class::<PySolitonSpec>()?;
    m.add_class::<PyGaussianSpec>()?;
    m.add_class::<PyQuadratureForm>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PySqueezingCurve>()?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(back_propagate, m)?)?;
    m.add_function(wrap_pyfunction!(squeezing_curve, m)?)?;
    m.add_function(wrap_pyfunction!(theta_scan, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_variance, m)?)?;
    m.add_function(wrap_pyfunction!(solve_bistable_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(min_width, m)?)?;
    m.add_function(wrap_pyfunction!(beta_from_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(soliton_period, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
