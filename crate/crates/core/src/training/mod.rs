//! Training loop, leak-free transductive evaluation, checkpoints and the
//! experiment grid.

mod checkpoint;
mod config;
mod eval;
mod grid;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{GraphKind, TrainConfig};
pub use eval::{
    eval_graph, eval_indices, evaluate, leakage_violations, predict, support_mask, EvalGraph,
    EvalReport,
};
pub use grid::{
    read_results_csv, run_experiment_grid, GridFailure, GridResults, GridSpec, ModelKind,
    ResultRow,
};
pub use train::{train, EpochRecord, TrainHistory};
