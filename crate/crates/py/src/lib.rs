//! Python bindings: one-dimensional fields are passed as lists of samples on
//! a uniform grid of the given period.

use std::f64::consts::TAU;

use muskat_core::besov::{abs_d_b0, DyadicPartition};
use muskat_core::dn::{DnConfig, DnSolver, Side};
use muskat_core::evolution::{Evolution, PicardConfig, Problem};
use muskat_core::spectral::{SpectralField, TorusGrid};
use muskat_core::verify::{run_verify, VerifySettings};
use muskat_core::{Error, PhysicalParams};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::InvalidGrid(_) | Error::GridMismatch => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn field(samples: &[f64], period: f64) -> Result<SpectralField, Error> {
    let grid = TorusGrid::new(1, samples.len(), period)?;
    SpectralField::from_physical(&grid, samples)
}

fn solver(grid: &TorusGrid, z_nodes: usize) -> Result<DnSolver, Error> {
    DnSolver::new(
        grid,
        DnConfig {
            z_nodes,
            ..DnConfig::default()
        },
    )
}

/// `||u||_{B^s_{inf,1}}` of sampled data.
#[pyfunction]
#[pyo3(signature = (samples, s, period = TAU))]
fn besov_norm(samples: Vec<f64>, s: f64, period: f64) -> PyResult<f64> {
    let u = field(&samples, period).map_err(py_err)?;
    Ok(muskat_core::besov::besov_norm(&u, s, &DyadicPartition::new(u.grid())))
}

/// `|| |D| eta ||_{B^0_{inf,1}}`, the quantity bounded by the smallness threshold.
#[pyfunction]
#[pyo3(signature = (samples, period = TAU))]
fn smallness(samples: Vec<f64>, period: f64) -> PyResult<f64> {
    let u = field(&samples, period).map_err(py_err)?;
    Ok(abs_d_b0(&u, &DyadicPartition::new(u.grid())))
}

/// `G^-(eta) f` (or `G^+` with `side="plus"`) on the sample grid.
#[pyfunction]
#[pyo3(signature = (eta, f, side = "minus", period = TAU, z_nodes = 257))]
fn dn_apply(py: Python<'_>, eta: Vec<f64>, f: Vec<f64>, side: &str, period: f64, z_nodes: usize) -> PyResult<Vec<f64>> {
    let side = match side {
        "minus" => Side::Minus,
        "plus" => Side::Plus,
        other => return Err(PyValueError::new_err(format!("side must be \"minus\" or \"plus\", got {other:?}"))),
    };
    py.detach(|| {
        let eta = field(&eta, period)?;
        let f = field(&f, period)?;
        let dn = solver(eta.grid(), z_nodes)?;
        Ok(dn.apply(&eta, &f.mean_free(), side)?.to_physical())
    })
    .map_err(py_err)
}

/// Finite-difference Dirichlet-Neumann oracle on `nz` rows of a strip of depth `depth`.
#[pyfunction]
#[pyo3(signature = (eta, f, nz = 256, depth = 5.0, period = TAU))]
fn fd_dn(py: Python<'_>, eta: Vec<f64>, f: Vec<f64>, nz: usize, depth: f64, period: f64) -> PyResult<Vec<f64>> {
    py.detach(|| {
        let eta = field(&eta, period)?;
        let f = field(&f, period)?;
        let n = eta.grid().n();
        Ok(muskat_core::oracle::fd_dn(&eta, &f.mean_free(), n, nz, depth)?.to_physical())
    })
    .map_err(py_err)
}

/// One-phase evolution to time `t` by global Picard iteration with `k` steps.
#[pyfunction]
#[pyo3(signature = (eta0, t, k = 64, mu_minus = 1.0, rho_minus = 1.0, period = TAU, z_nodes = 257, tol = 1e-10, delta = 0.05))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    eta0: Vec<f64>,
    t: f64,
    k: usize,
    mu_minus: f64,
    rho_minus: f64,
    period: f64,
    z_nodes: usize,
    tol: f64,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let path = py
        .detach(|| {
            let eta0 = field(&eta0, period)?.mean_free();
            let dn = solver(eta0.grid(), z_nodes)?;
            let ev = Evolution::new(dn, Problem::one_phase(PhysicalParams::one_phase(mu_minus, rho_minus)?))?;
            let cfg = PicardConfig {
                k,
                tol,
                delta,
                ..PicardConfig::default()
            };
            ev.solve_global_picard(&eta0, t, &cfg)
        })
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("times", path.times.clone())?;
    out.set_item("terminal", path.terminal().to_physical())?;
    out.set_item("besov1", path.report.besov_1.clone())?;
    out.set_item("x1_kappa", path.x1_kappa())?;
    out.set_item("iterations", path.iterations)?;
    out.set_item("contraction_ratio", path.contraction_ratio)?;
    Ok(out)
}

/// The acceptance suite (all criteria when `only` is empty) as a JSON string.
#[pyfunction]
#[pyo3(signature = (only = Vec::new(), seed = None))]
fn verify(py: Python<'_>, only: Vec<u8>, seed: Option<u64>) -> PyResult<String> {
    let mut settings = VerifySettings::default();
    if let Some(s) = seed {
        settings.seed = s;
    }
    let report = py.detach(|| run_verify(&only, &settings)).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn muskat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(besov_norm, m)?)?;
    m.add_function(wrap_pyfunction!(smallness, m)?)?;
    m.add_function(wrap_pyfunction!(dn_apply, m)?)?;
    m.add_function(wrap_pyfunction!(fd_dn, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
