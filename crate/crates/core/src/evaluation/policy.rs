use serde::{Deserialize, Serialize};

use crate::corpus::{Action, Dataset, EvalAccess, Goal, Instruction, SubtaskCategory};
use crate::models::{ControllerModel, ExecContext, ExecutorModel, ObsSummary};

/// A trained policy: controller plus executor, or a single goal-conditioned
/// executor with no plan.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    Hierarchical {
        controller: ControllerModel,
        executor: ExecutorModel,
    },
    Flat {
        executor: ExecutorModel,
    },
}

impl Policy {
    pub fn executor(&self) -> &ExecutorModel {
        match self {
            Policy::Hierarchical { executor, .. } | Policy::Flat { executor } => executor,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Policy::Flat { .. })
    }
}

/// Executor context for the flat policy: the goal takes the instruction's place.
pub fn flat_context(g: &Goal) -> ExecContext {
    ExecContext::from_goal(g)
}

/// Greedy executor step; an unresolvable class comes back as `Err(())`.
pub fn greedy_step(
    ex: &ExecutorModel,
    obs: &crate::corpus::Observation,
    prev: Option<&Action>,
    ctx: &ExecContext,
) -> Result<Option<Action>, ()> {
    ex.act(&ObsSummary::new(obs), prev, ctx).map_err(|_| ())
}

pub fn context_for(ins: &Instruction) -> ExecContext {
    ExecContext::from_instruction(ins)
}

/// Per-category rollout step limits: a multiple of the mean expert segment
/// length for that category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCaps {
    pub caps: Vec<(SubtaskCategory, usize)>,
    pub fallback: usize,
}

impl StepCaps {
    pub const MULTIPLIER: f64 = 4.0;

    /// Measured on ground-truth segments of a corpus.
    pub fn from_dataset(d: &Dataset, access: &EvalAccess) -> Self {
        let mut sums = [0usize; 8];
        let mut counts = [0usize; 8];
        for demo in &d.demos {
            let (Some(a), Some(ins)) = (demo.gt_alignment(access), demo.gt_annotation(access)) else {
                continue;
            };
            let Ok(seg) = a.segmentation() else { continue };
            for (s, i) in seg.spans.iter().zip(ins) {
                let c = i.category().index();
                sums[c] += s.len();
                counts[c] += 1;
            }
        }
        let caps: Vec<(SubtaskCategory, usize)> = SubtaskCategory::ALL
            .iter()
            .filter(|c| counts[c.index()] > 0)
            .map(|&c| {
                let mean = sums[c.index()] as f64 / counts[c.index()] as f64;
                (c, (Self::MULTIPLIER * mean).ceil().max(1.0) as usize)
            })
            .collect();
        let fallback = caps.iter().map(|c| c.1).max().unwrap_or(20);
        StepCaps { caps, fallback }
    }

    pub fn get(&self, c: SubtaskCategory) -> usize {
        self.caps
            .iter()
            .find(|x| x.0 == c)
            .map_or(self.fallback, |x| x.1)
    }
}
