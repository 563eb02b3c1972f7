//! Per-tick records, run/campaign aggregation, trace files and reports.

mod record;
pub mod report;
pub mod summary;
pub mod trace;

pub use record::{inf_codec, ActiveFault, IterationRecord};
pub use report::{render_report, ReportFormat};
pub use summary::{
    percent, summarize_campaign, summarize_run, CampaignSummary, ComfortCounts, FailedRun,
    MetricsError, OverallRow, RunSummary, ScenarioRow,
};
pub use trace::{read_trace, read_trace_file, trace_hash, trace_path, write_trace, write_trace_file, TraceError};
