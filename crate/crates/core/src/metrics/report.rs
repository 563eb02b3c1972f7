//! CSV and Markdown campaign reports.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::CampaignSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    #[value(name = "md")]
    Markdown,
}

const CSV_HEADER: &str =
    "scenario,runs,pct_unsafe_flag,pct_collision,clearance_mean_s,clearance_std_s,gridlocks,failed";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

pub fn render_report(campaign: &CampaignSummary, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &campaign.rows {
                let _ = writeln!(
                    out,
                    "{},{},{:.1},{:.1},{},{},{},{}",
                    r.scenario,
                    r.runs,
                    r.pct_unsafe_flag,
                    r.pct_collision,
                    opt(r.clearance_mean_s),
                    opt(r.clearance_std_s),
                    r.gridlocks,
                    r.failed
                );
            }
        }
        ReportFormat::Markdown => {
            out.push_str(
                "| Scenario | Runs | Monitor flags \"unsafe\" (%) | Collision rate (%) | Avg. clearance (s) | Std. clearance (s) | Gridlocks | Failed |\n",
            );
            out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
            let dash = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
            for r in &campaign.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.1} ({}/{}) | {:.1} ({}/{}) | {} | {} | {} | {} |",
                    r.scenario,
                    r.runs,
                    r.pct_unsafe_flag,
                    r.unsafe_flagged,
                    r.runs,
                    r.pct_collision,
                    r.collided,
                    r.runs,
                    dash(r.clearance_mean_s),
                    dash(r.clearance_std_s),
                    r.gridlocks,
                    r.failed
                );
            }
            if let Some(o) = &campaign.overall {
                let _ = writeln!(
                    out,
                    "| **Overall Avg.** | {} | {:.1} | {:.1} | {} | | {} | {} |",
                    o.runs,
                    o.pct_unsafe_flag,
                    o.pct_collision,
                    dash(o.clearance_mean_s),
                    o.gridlocks,
                    o.failed
                );
            }
        }
    }
    out
}
