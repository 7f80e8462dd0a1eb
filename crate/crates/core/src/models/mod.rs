//! Log-linear categorical models: controller, executor and labeling proposal.

pub mod checkpoint;
pub mod controller;
pub mod executor;
pub mod fit;
pub mod params;
pub mod proposal;

pub use checkpoint::{CheckpointError, ModelCheckpoint};
pub use controller::{featurize_controller, ControllerModel, Decoded, Inventory};
pub use executor::{
    exec_sequence_log_prob, featurize_exec, featurize_summary, target_class, ArgRef, ExecClass,
    ExecClassSpace, ExecContext, ExecutorModel, ObsSummary,
};
pub use fit::{fit, fit_examples, objective, FitConfig, FitError, FitReport};
pub use params::{argmax, log_softmax, logsumexp, CompiledFv, FeatureVector, ModelError, ModelParams};
pub use proposal::{featurize_proposal, ProposalModel};
