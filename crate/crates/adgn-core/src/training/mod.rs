//! Training stack: losses, Adam, the two task protocols (graph-level
//! regression and node classification), and the grid search on top.

pub mod grid;
pub mod loss;
pub mod optimizer;
pub mod trainer;

pub use grid::{grid_search_gpp, grid_search_node, GridEntry, GridOutcome, GridSpec, Objective, PointSummary};
pub use loss::{accuracy, log10_mse, mse_loss, squared_error_sum, LOG10_MSE_FLOOR};
pub use optimizer::{adam_step, AdamConfig, AdamState, WeightDecayMode};
pub use trainer::{
    evaluate_mse, node_logits, train_gpp, train_node, EpochRecord, ModelHyper, ModelKind,
    TrainOutcome, TrainReport, TrainSettings,
};
