//! Policy-dependent log-likelihood of labeled, aligned demonstrations.

use rayon::prelude::*;

use crate::corpus::{Alignment, Demonstration, Instruction};
use crate::models::{ControllerModel, ExecutorModel, ModelError};
use crate::segmentation::SegmentScorer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("demonstration {0} has no imputed alignment")]
    MissingAlignment(String),
    #[error("demonstration {0} has no labels")]
    MissingLabels(String),
    #[error("demonstration {id}: {reason}")]
    Invalid { id: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `log π^C(τ | g)` (END included) plus every segment's executor score with STOP.
pub fn joint_log_prob(
    ctrl: &ControllerModel,
    ex: &ExecutorModel,
    d: &Demonstration,
    instrs: &[Instruction],
    a: &Alignment,
) -> Result<f64, ObjectiveError> {
    let invalid = |reason: String| ObjectiveError::Invalid {
        id: d.id.clone(),
        reason,
    };
    a.validate_for(d.len(), instrs.len()).map_err(|e| invalid(e.to_string()))?;
    let seg = a.segmentation().map_err(|e| invalid(e.to_string()))?;
    let sc = SegmentScorer::new(ex, d, instrs);
    let exec: f64 = seg
        .spans
        .iter()
        .enumerate()
        .map(|(j, s)| sc.segment(s.start, s.end, j))
        .sum();
    Ok(ctrl.sequence_log_prob(instrs, &d.goal)? + exec)
}

/// Sum of `joint_log_prob` over demos, reduced in input order.
pub fn total_log_prob<'a>(
    ctrl: &ControllerModel,
    ex: &ExecutorModel,
    items: &[(&'a Demonstration, &'a [Instruction], &'a Alignment)],
) -> Result<f64, ObjectiveError> {
    let parts = items
        .par_iter()
        .map(|(d, l, a)| joint_log_prob(ctrl, ex, d, l, a))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(parts.iter().sum())
}
