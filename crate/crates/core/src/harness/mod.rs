//! Experiment harness: parameter sweeps, evaluation records and plots.

mod classification;
mod config;
mod grids;
mod plots;
mod regression;
mod results;
mod scale;
mod temporal;

pub use classification::{
    accuracy, critical_lambdas, noise_summary, peak, reproduce_cell, run_classification_experiment, run_noise_sweep, summarize_curves, svm_objectives, write_curves_csv,
    ClassificationConfig, CurvePoint, Method,
};
pub use config::{ExperimentConfig, LossChoice, NoiseConfig, SolveConfig};
pub use grids::{arithmetic_grid, geometric_grid, default_lambda_grid, default_mu_grid, SweepSpec};
pub use plots::{emit_plots, plot_series, PlotFiles, PlotKind, SeriesPoint};
pub use regression::{
    prepare_regression, read_regression_csv, run_regression_experiment, PreparedRegression, RegressionConfig,
    RegressionTable, Standardizer,
};
pub use results::{mean_value, read_records, write_records, EvalRecord, Metric};
pub use scale::{degree_probabilities, run_scalability, write_scale_csv, ScaleConfig, ScaleRow};
pub use temporal::{
    gen_drifting_clusters, run_temporal_experiment, run_temporal_sweep, temporal_table, write_temporal_table, DriftParams,
    DriftSequence, TemporalConfig,
};

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error("no results of kind {0}")]
    EmptyResults(String),
    #[error("csv error on {path}: {msg}")]
    Csv { path: String, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    pub(crate) fn csv(path: &Path, e: csv::Error) -> Self {
        HarnessError::Csv { path: path.display().to_string(), msg: e.to_string() }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}
