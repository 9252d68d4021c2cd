//! Optimization, the epoch loop with dev-set model selection, and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod model;
mod schedule;
mod trainer;

pub use adam::{adam_step, clip_global_norm, OptimizerState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION, MAGIC};
pub use config::{Architecture, TrainConfig, SELECTION_METRIC};
pub use model::{predict_corpus, Model};
pub use schedule::{lr_at, LrSchedule};
pub use trainer::{evaluate, train, train_with_progress, EpochLog, TrainOutcome};
