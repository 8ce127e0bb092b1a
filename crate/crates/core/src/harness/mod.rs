//! Seeded experiment driver: environments, episodes with delayed feedback,
//! hyperparameter grids, summaries, output files and the NTK report.

pub mod config;
pub mod env;
pub mod episode;
pub mod grid;
pub mod output;
pub mod report;
pub mod stats;

pub use config::{Cell, DatasetRef, ExperimentConfig, GridSpec};
pub use env::{ClassificationEnv, DataSource, Environment, SyntheticEnv, SyntheticReward, SyntheticSpec};
pub use episode::{is_flush_round, run_policy, RegretTrace, RoundEvent, RoundRecord, TraceMeta};
pub use grid::{best_cell_index, run_episode, run_grid, CellResult, GridResult};
pub use output::{emit_outputs, read_trace, write_trace, OutputOptions};
pub use report::{ntk_report, NtkReport, NtkReportConfig};
pub use stats::{summarize, Summary};
