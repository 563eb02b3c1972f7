//! Batches of seeded runs over several scenarios.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::{parse_scenario_file, ScenarioError, ScenarioSpec};
use crate::metrics::{
    read_trace_file, summarize_campaign, summarize_run, trace_path, write_trace_file, CampaignSummary,
    FailedRun, RunSummary, TraceError,
};
use crate::orchestrator::{run_scenario, RunOptions, TerminationStatus};
use crate::rng::stable_mix;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("duplicate scenario id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("no scenario files in {0}")]
    Empty(PathBuf),
}

#[derive(Debug, Clone)]
pub struct CampaignPlan {
    pub specs: Vec<ScenarioSpec>,
    pub runs_per_spec: u32,
    pub base_seed: u64,
    pub options: RunOptions,
    /// Worker threads; 1 runs everything on the calling thread.
    pub parallelism: usize,
    /// Where traces go (`<dir>/<scenario>/<seed>.jsonl`); `None` keeps them
    /// in memory only.
    pub out_dir: Option<PathBuf>,
}

impl CampaignPlan {
    pub fn new(specs: Vec<ScenarioSpec>, base_seed: u64) -> Self {
        Self {
            specs,
            runs_per_spec: 15,
            base_seed,
            options: RunOptions::default(),
            parallelism: 1,
            out_dir: None,
        }
    }

    /// Seed of run `i` of scenario `id`.
    pub fn seed_for(&self, id: &str, i: u32) -> u64 {
        stable_mix(self.base_seed, id, u64::from(i))
    }
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub summary: CampaignSummary,
    /// In plan order (scenario, then run index).
    pub runs: Vec<RunSummary>,
    pub failed: Vec<FailedRun>,
    /// Deterministic trace digest per `(scenario, seed)`.
    pub trace_hashes: BTreeMap<(String, u64), String>,
}

enum Outcome {
    Done(RunSummary, String),
    Failed(FailedRun),
}

fn run_one(plan: &CampaignPlan, spec: &ScenarioSpec, seed: u64) -> Result<Outcome, CampaignError> {
    match run_scenario(spec, seed, &plan.options) {
        Ok(res) => {
            if let Some(dir) = &plan.out_dir {
                let path = trace_path(dir, &spec.id, seed);
                write_trace_file(&res.records, &path).map_err(|source| CampaignError::Trace { path, source })?;
            }
            Ok(Outcome::Done(res.summary, crate::metrics::trace_hash(&res.records)))
        }
        Err(e) => {
            if let Some(dir) = &plan.out_dir {
                let d = dir.join(&spec.id);
                std::fs::create_dir_all(&d)?;
                std::fs::write(d.join(format!("{seed}.failed")), format!("{e}\n"))?;
            }
            Ok(Outcome::Failed(FailedRun {
                scenario_id: spec.id.clone(),
                seed,
                error: e.to_string(),
            }))
        }
    }
}

/// Runs every scenario `runs_per_spec` times. A failing run is recorded and
/// the campaign continues; only I/O problems abort it.
pub fn run_campaign(plan: &CampaignPlan) -> Result<CampaignResult, CampaignError> {
    let mut ids = BTreeSet::new();
    for s in &plan.specs {
        if !ids.insert(s.id.as_str()) {
            return Err(CampaignError::DuplicateId(s.id.clone()));
        }
    }
    let jobs: Vec<(&ScenarioSpec, u64)> = plan
        .specs
        .iter()
        .flat_map(|s| (0..plan.runs_per_spec).map(move |i| (s, plan.seed_for(&s.id, i))))
        .collect();

    let outcomes: Vec<Result<Outcome, CampaignError>> = if plan.parallelism <= 1 {
        jobs.iter().map(|(s, seed)| run_one(plan, s, *seed)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.parallelism)
            .build()
            .map_err(|e| CampaignError::Pool(e.to_string()))?;
        // collect keeps job order regardless of completion order
        pool.install(|| jobs.par_iter().map(|(s, seed)| run_one(plan, s, *seed)).collect())
    };

    let mut runs = Vec::new();
    let mut failed = Vec::new();
    let mut trace_hashes = BTreeMap::new();
    for o in outcomes {
        match o? {
            Outcome::Done(summary, hash) => {
                trace_hashes.insert((summary.scenario_id.clone(), summary.seed), hash);
                runs.push(summary);
            }
            Outcome::Failed(f) => failed.push(f),
        }
    }
    Ok(CampaignResult {
        summary: summarize_campaign(&runs, &failed),
        runs,
        failed,
        trace_hashes,
    })
}

/// Parses every `*.ini` in `dir` (sorted by file name).
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<ScenarioSpec>, CampaignError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "ini"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CampaignError::Empty(dir.to_path_buf()));
    }
    let mut specs = Vec::new();
    let mut ids = BTreeSet::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let spec = parse_scenario_file(&text).map_err(|source| CampaignError::Scenario {
            path: path.clone(),
            source,
        })?;
        if !ids.insert(spec.id.clone()) {
            return Err(CampaignError::DuplicateId(spec.id));
        }
        specs.push(spec);
    }
    Ok(specs)
}

/// Re-aggregates a campaign directory written by [`run_campaign`].
pub fn report_from_traces(dir: &Path) -> Result<CampaignSummary, CampaignError> {
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    let mut scen_dirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    scen_dirs.sort();
    for sd in scen_dirs {
        let Some(id) = sd.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        let mut files: Vec<PathBuf> = std::fs::read_dir(&sd)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        files.sort();
        for path in files {
            let Some(seed) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u64>().ok()) else {
                continue;
            };
            match path.extension().and_then(|x| x.to_str()) {
                Some("jsonl") => {
                    let records = read_trace_file(&path).map_err(|source| CampaignError::Trace {
                        path: path.clone(),
                        source,
                    })?;
                    let term = records.last().map_or(TerminationStatus::Running, |r| r.status);
                    let summary = summarize_run(&id, seed, &records, term).map_err(|e| CampaignError::Trace {
                        path: path.clone(),
                        source: TraceError::MalformedTrace {
                            line: 0,
                            message: e.to_string(),
                        },
                    })?;
                    runs.push(summary);
                }
                Some("failed") => failed.push(FailedRun {
                    scenario_id: id.clone(),
                    seed,
                    error: std::fs::read_to_string(&path)?.trim().to_string(),
                }),
                _ => {}
            }
        }
    }
    Ok(summarize_campaign(&runs, &failed))
}
