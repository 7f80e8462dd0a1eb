use serde::{Deserialize, Serialize};

use crate::models::FitConfig;
use crate::segmentation::HmmConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingMode {
    /// Independent per-segment argmax of the proposal model.
    Amortized,
    /// Joint controller + executor argmax by dynamic programming.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Impute segmentations and labels for unannotated demos.
    Sl3,
    /// Same machinery, but unannotated demos never enter the fits.
    NoLatent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub controller: FitConfig,
    pub executor: FitConfig,
    pub proposal: FitConfig,
    pub hmm: HmmConfig,
    pub labeling: LabelingMode,
    /// Restrict exact labeling to the best B labels per segment.
    pub beam_per_segment: Option<usize>,
    pub mode: TrainMode,
    /// At the first iteration, split unannotated demos into as many segments
    /// as the annotated-only controller plans for their goal. When off, the
    /// HMM's own state changes decide the count.
    pub unannotated_init_budget: bool,
    /// Stop once an iteration leaves every imputed alignment and label unchanged.
    pub early_stop: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 4,
            controller: FitConfig::default(),
            executor: FitConfig::default(),
            proposal: FitConfig::default(),
            hmm: HmmConfig::default(),
            labeling: LabelingMode::Amortized,
            beam_per_segment: None,
            mode: TrainMode::Sl3,
            unannotated_init_budget: true,
            early_stop: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations == 0 {
            return Err("iterations must be at least 1".into());
        }
        if self.hmm.states < 2 {
            return Err("hmm.states must be at least 2".into());
        }
        if self.beam_per_segment == Some(0) {
            return Err("beam_per_segment must be positive".into());
        }
        Ok(())
    }

    /// Same configuration with every L2 penalty set to `l2`.
    pub fn with_l2(mut self, l2: f64) -> Self {
        self.controller.l2 = l2;
        self.executor.l2 = l2;
        self.proposal.l2 = l2;
        self
    }
}
