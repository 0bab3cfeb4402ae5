//! Experiment harness for `adasa-core`: TOML configs, a deterministic parallel
//! runner writing per-cell trace CSVs and a summary CSV, log-log rate fits,
//! and SVG plots.

pub mod config;
pub mod curves;
pub mod fit;
pub mod plot;
pub mod runner;
pub mod summary;

pub use config::{AlgorithmId, AlgorithmSpec, DataSource, DatasetSpec, ExperimentConfig, SetShape};
pub use fit::fit_rate;
pub use plot::{emit_plot, PlotKind};
pub use runner::{run_experiment, RunOutcome};
pub use summary::{read_summary, SummaryRow, SUMMARY_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] adasa_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("{0}")]
    Input(String),
}

impl BenchError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
