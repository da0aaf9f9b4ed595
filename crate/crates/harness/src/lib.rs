//! Experiment harness: seeded runs of the collaborative-agent topology,
//! per-run records, IQR/Wilcoxon/d_z statistics, and CSV + text reports.

pub mod experiment;
pub mod report;
pub mod stats;

pub use experiment::{run_experiment, run_spec_for, ExperimentConfig, Mode, RunRecord};
pub use report::{read_csv, summary, write_csv, CSV_COLUMNS};
pub use stats::{
    cohens_dz, iqr_filter, normalized_time, quantile, wilcoxon_signed_rank, IqrResult,
    SummaryStats, WilcoxonResult,
};
