use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vvloop::metrics::{render_report, trace_path, write_trace_file, CampaignSummary, ReportFormat};
use vvloop::scenario::{load_scenario_dir, report_from_traces, run_campaign, CampaignError, CampaignPlan};
use vvloop::{parse_scenario_file, run_scenario, RunOptions, ScenarioSpec};

/// Multi-role V&V loop around an unsignalized-intersection simulator.
#[derive(Parser)]
#[command(name = "vvloop", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario with one seed and write its trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_recovery: bool,
        #[arg(long)]
        halt_on_violation: bool,
    },
    /// Run every scenario in a directory N times and write a report.
    Campaign {
        #[arg(long)]
        scenario_dir: PathBuf,
        #[arg(long, default_value_t = 15)]
        runs: u32,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: ReportFormat,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        no_recovery: bool,
    },
    /// Rebuild a report from a campaign's trace directory.
    Report {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: ReportFormat,
    },
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

const EXIT_INVALID: u8 = 1;
const EXIT_RUN: u8 = 2;

fn load(path: &Path) -> Result<ScenarioSpec, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_INVALID)
    })?;
    parse_scenario_file(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_INVALID)
    })
}

fn write_report(summary: &CampaignSummary, path: &Path, format: ReportFormat) -> Result<String, ExitCode> {
    let text = render_report(summary, format);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        let _ = std::fs::create_dir_all(dir);
    }
    std::fs::write(path, &text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(EXIT_RUN)
    })?;
    Ok(text)
}

fn campaign_exit(e: &CampaignError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CampaignError::Scenario { .. } | CampaignError::DuplicateId(_) | CampaignError::Empty(_) => {
            ExitCode::from(EXIT_INVALID)
        }
        _ => ExitCode::from(EXIT_RUN),
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn real_main(cli: Cli) -> Result<(), ExitCode> {
    match cli.cmd {
        Cmd::Validate { scenario } => {
            let spec = load(&scenario)?;
            println!(
                "ok: {} (base {}, attack {})",
                spec.id,
                spec.base.as_str(),
                spec.attack.map_or("none", |a| a.label())
            );
        }
        Cmd::Run {
            scenario,
            seed,
            out,
            no_recovery,
            halt_on_violation,
        } => {
            let spec = load(&scenario)?;
            let options = RunOptions {
                recovery_enabled: !no_recovery,
                halt_on_violation,
                ..RunOptions::default()
            };
            let res = run_scenario(&spec, seed, &options).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_RUN)
            })?;
            let path = trace_path(&out, &spec.id, seed);
            write_trace_file(&res.records, &path).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_RUN)
            })?;
            let s = &res.summary;
            println!(
                "{} seed={} termination={:?} ticks={} unsafe_ticks={} collision={} clearance_s={} trace={}",
                s.scenario_id,
                s.seed,
                s.termination,
                s.ticks,
                s.unsafe_tick_count,
                s.collision,
                s.clearance_time_s.map_or("-".into(), |t| format!("{t:.2}")),
                path.display()
            );
        }
        Cmd::Campaign {
            scenario_dir,
            runs,
            base_seed,
            out,
            report,
            format,
            parallel,
            no_recovery,
        } => {
            let specs = load_scenario_dir(&scenario_dir).map_err(|e| campaign_exit(&e))?;
            let mut plan = CampaignPlan::new(specs, base_seed);
            plan.runs_per_spec = runs;
            plan.parallelism = parallel.max(1);
            plan.options.recovery_enabled = !no_recovery;
            plan.out_dir = Some(out);
            let res = run_campaign(&plan).map_err(|e| campaign_exit(&e))?;
            let text = write_report(&res.summary, &report, format)?;
            print!("{text}");
            if !res.failed.is_empty() {
                for f in &res.failed {
                    eprintln!("failed: {} seed={}: {}", f.scenario_id, f.seed, f.error);
                }
                return Err(ExitCode::from(EXIT_RUN));
            }
        }
        Cmd::Report { traces, report, format } => {
            let summary = report_from_traces(&traces).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            })?;
            let text = write_report(&summary, &report, format)?;
            print!("{text}");
        }
    }
    Ok(())
}
