//! Python bindings. Results cross the boundary as JSON strings; callers
//! `json.loads` them.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vvloop::metrics::{render_report, ReportFormat};
use vvloop::scenario::{load_scenario_dir, run_campaign, CampaignPlan};
use vvloop::{parse_scenario_file, RunOptions};

fn options(recovery: bool) -> RunOptions {
    RunOptions {
        recovery_enabled: recovery,
        ..RunOptions::default()
    }
}

/// Parse and validate scenario text; returns the scenario id.
#[pyfunction]
fn validate(text: &str) -> PyResult<String> {
    parse_scenario_file(text)
        .map(|s| s.id)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// One run; returns its summary as JSON.
#[pyfunction]
#[pyo3(signature = (text, seed, recovery = true))]
fn run_scenario(text: &str, seed: u64, recovery: bool) -> PyResult<String> {
    let spec = parse_scenario_file(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let res = vvloop::run_scenario(&spec, seed, &options(recovery))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    serde_json::to_string(&res.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Every `*.ini` in `scenario_dir`, `runs` times each. Returns
/// `(summary_json, report_text)`; traces go to `out_dir` when given.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (scenario_dir, runs = 15, base_seed = 0, recovery = true, parallelism = 1, out_dir = None, format = "md"))]
fn campaign(
    py: Python<'_>,
    scenario_dir: PathBuf,
    runs: u32,
    base_seed: u64,
    recovery: bool,
    parallelism: usize,
    out_dir: Option<PathBuf>,
    format: &str,
) -> PyResult<(String, String)> {
    let format = match format {
        "md" | "markdown" => ReportFormat::Markdown,
        "csv" => ReportFormat::Csv,
        other => return Err(PyValueError::new_err(format!("unknown format `{other}`"))),
    };
    let specs = load_scenario_dir(&scenario_dir).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let mut plan = CampaignPlan::new(specs, base_seed);
    plan.runs_per_spec = runs;
    plan.parallelism = parallelism.max(1);
    plan.options = options(recovery);
    plan.out_dir = out_dir;
    let res = py
        .allow_threads(|| run_campaign(&plan))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = serde_json::to_string(&res.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((json, render_report(&res.summary, format)))
}

#[pymodule]
fn vvloop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(campaign, m)?)?;
    Ok(())
}
