//! Metrics, baselines and experiment drivers.

pub mod baselines;
pub mod experiments;
pub mod metrics;
pub mod offline;
pub mod online;
pub mod policy;

pub use baselines::{flat_examples, run_baseline, train_flat, BaselineError, BaselineKind, Trained};
pub use experiments::{
    evaluate, imputed_segmentation_accuracy, mean_demo_length, report_csv_row, run_arm,
    supervision_sweep, sweep_csv, teleport_ablation, AblationArm, Corpora, ExperimentConfig,
    ExperimentError, MetricsReport, SweepRow, TeleportAblation, CSV_HEADER, OFFLINE_NOTE,
};
pub use metrics::{boundary_agreement, segmentation_accuracy, CategoryRates, EvalError, Rate};
pub use offline::{offline_subtask_accuracy, OfflinePolicy};
pub use online::{online_eval, online_eval_flat, online_eval_policy, Actor, OnlineConfig, OnlineReport, Planner};
pub use policy::{Policy, StepCaps};
