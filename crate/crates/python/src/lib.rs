//! Python bindings. Results cross the boundary as JSON text so the Python
//! side needs nothing beyond the standard library.

use std::path::Path;

use narrowgap::asymptotics::{
    capacitance_oracle, fit_rate, run_sweep, Observable, RateModel, SweepPlan, DEFAULT_EPS_GRID,
};
use narrowgap::capacitance::solve_scene;
use narrowgap::geometry::{build_scene, validate_assumptions, SceneConfig};
use narrowgap::harmonic::SolverOptions;
use narrowgap::mesh::GradingPolicy;
use narrowgap::presets;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: narrowgap::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Preset name, path to a scene file, or scene JSON text.
fn load(scene: &str, eps: Option<f64>) -> PyResult<SceneConfig> {
    let cfg = if presets::NAMES.contains(&scene) {
        presets::by_name(scene, eps.unwrap_or(0.01)).map_err(to_py)?
    } else if scene.trim_start().starts_with('{') {
        SceneConfig::from_json(scene).map_err(to_py)?
    } else {
        let text = std::fs::read_to_string(Path::new(scene))
            .map_err(|e| PyValueError::new_err(format!("cannot read scene '{scene}': {e}")))?;
        SceneConfig::from_json(&text).map_err(to_py)?
    };
    Ok(match eps {
        Some(e) => cfg.with_epsilon(e),
        None => cfg,
    })
}

fn options(tol: Option<f64>) -> SolverOptions {
    tol.map(SolverOptions::with_tol).unwrap_or_default()
}

/// Names of the built-in scenes.
#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::NAMES.to_vec()
}

/// Scene configuration as JSON text.
#[pyfunction]
#[pyo3(signature = (scene, eps=None))]
fn scene_json(scene: &str, eps: Option<f64>) -> PyResult<String> {
    load(scene, eps)?.to_json().map_err(to_py)
}

/// Solves one scene and returns the result record as JSON text.
#[pyfunction]
#[pyo3(signature = (scene, eps=None, tol=None))]
fn solve(py: Python<'_>, scene: &str, eps: Option<f64>, tol: Option<f64>) -> PyResult<String> {
    let cfg = load(scene, eps)?;
    py.detach(|| {
        let s = build_scene(&cfg).map_err(to_py)?;
        let report = validate_assumptions(&s);
        if !report.all_passed() {
            let names: Vec<&str> = report.failures().iter().map(|c| c.name).collect();
            return Err(PyValueError::new_err(format!(
                "scene violates the structural assumptions: {}",
                names.join(", ")
            )));
        }
        let sol = solve_scene(&s, &GradingPolicy::default(), &options(tol)).map_err(to_py)?;
        serde_json::to_string(&sol.record()).map_err(json_err)
    })
}

/// Runs an epsilon sweep; returns `{"rows": [...], "fits": {...}}` as JSON.
#[pyfunction]
#[pyo3(signature = (scene, eps_grid=None, workers=None, tol=None))]
fn sweep(
    py: Python<'_>,
    scene: &str,
    eps_grid: Option<Vec<f64>>,
    workers: Option<usize>,
    tol: Option<f64>,
) -> PyResult<String> {
    let cfg = load(scene, None)?;
    let grid = eps_grid.unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
    let plan = SweepPlan::new(cfg, grid).with_solver(options(tol));
    py.detach(|| {
        let record = run_sweep(&plan, workers).map_err(to_py)?;
        let fits: serde_json::Map<String, serde_json::Value> = Observable::ALL
            .iter()
            .filter_map(|o| {
                fit_rate(&record, *o, RateModel::PurePower)
                    .ok()
                    .map(|f| (o.as_str().to_string(), serde_json::json!(f)))
            })
            .collect();
        let doc = serde_json::json!({"rows": record.rows, "fits": fits});
        serde_json::to_string(&doc).map_err(json_err)
    })
}

/// `(off_sigma, sigma_block)` of the radial capacitance integral.
#[pyfunction]
fn oracle(n: u32, m: u32, r0: f64, r1: f64, eps: f64) -> PyResult<(f64, f64)> {
    let o = capacitance_oracle(n, m, r0, r1, eps).map_err(to_py)?;
    Ok((o.off_sigma, o.sigma_block))
}

#[pyfunction]
fn rho_n(n: u32, eps: f64) -> PyResult<f64> {
    narrowgap::asymptotics::rho_n(n, eps).map_err(to_py)
}

#[pyfunction]
fn rho_n_m(n: u32, m: u32, eps: f64) -> PyResult<f64> {
    narrowgap::asymptotics::rho_n_m(n, m, eps).map_err(to_py)
}

#[pymodule]
fn narrowgap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(scene_json, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(rho_n, m)?)?;
    m.add_function(wrap_pyfunction!(rho_n_m, m)?)?;
    Ok(())
}
