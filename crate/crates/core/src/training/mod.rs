//! Alternating segmentation, labeling and parameter fitting.

pub mod config;
pub mod examples;
pub mod objective;
pub mod sl3;

pub use config::{LabelingMode, TrainConfig, TrainMode};
pub use examples::{controller_examples, executor_examples, proposal_examples};
pub use objective::{joint_log_prob, total_log_prob, ObjectiveError};
pub use sl3::{objective, sl3_train, LikelihoodEntry, Phase, PhaseTiming, TrainError, TrainState};
