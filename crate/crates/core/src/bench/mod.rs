//! Experiment pipeline behind the `pbdfs` command line: generate, label,
//! train, predict, evaluate, run heuristics, report.

mod commands;
mod config;
mod dataset;
mod report;

pub use commands::{
    cmd_eval_ml, cmd_gen, cmd_heuristic, cmd_label, cmd_predict, cmd_report, cmd_train, generate_instance,
    instance_rows_path, EvalRow, EvalSummary, LabelSummary, TrainSummary,
};
pub use config::{Counts, ExperimentConfig, LabelLimits, Method, Problem, Scale, Size, SizeRange, Sizes};
pub use dataset::{Dataset, InstanceMeta, SolutionFile};
pub use report::{aggregate, ms, read_csv, shifted_geomean, write_csv, InstanceRow, ReportRow, GEOMEAN_SHIFT};
