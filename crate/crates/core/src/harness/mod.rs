//! Experiment orchestration: rate, chaos, modulus, moment and oracle
//! studies, log-log slope fits, and CSV/SVG reports.

mod config;
mod fit;
mod report;
mod studies;

pub use config::{ExperimentConfig, ExperimentKind, ModelSpec, ReferenceSpec};
pub use fit::{fit_loglog_slope, SlopeFit};
pub use report::{emit_report, parse_csv, render_csv, write_plot, ReportFormat, CSV_HEADER};
pub use studies::{
    cell_seed, coupled_error_table, run, run_chaos_study, run_modulus_study, run_moment_study,
    run_oracle_study, run_rate_study, Check, FitOutcome, Report, Row,
};
