use serde::{Deserialize, Serialize};

use super::action::{Action, ActionKind};
use super::alignment::{Alignment, AlignmentError};
use super::instruction::{Goal, Instruction};
use super::observation::Observation;

/// Capability required to read evaluation-only ground truth. Learning code
/// never constructs one.
#[derive(Debug)]
pub struct EvalAccess {
    _private: (),
}

impl EvalAccess {
    pub fn grant() -> Self {
        EvalAccess { _private: () }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub obs: Observation,
    pub act: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DemoError {
    #[error("demonstration `{id}` has no steps")]
    NoSteps { id: String },
    #[error("demonstration `{id}` has an empty goal")]
    EmptyGoal { id: String },
    #[error("demonstration `{id}` step {step}: {reason}")]
    BadStep {
        id: String,
        step: usize,
        reason: String,
    },
    #[error("demonstration `{id}` has {m} instructions for {n} steps")]
    TooManyInstructions { id: String, m: usize, n: usize },
    #[error("demonstration `{id}` ground truth: {source}")]
    GroundTruth {
        id: String,
        #[source]
        source: AlignmentError,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: String,
    pub goal: Goal,
    pub steps: Vec<Step>,
    /// Observation after the last action; the last segment's STOP is scored here.
    pub final_obs: Observation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Vec<Instruction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt_alignment: Option<Alignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt_annotation: Option<Vec<Instruction>>,
}

impl Demonstration {
    pub fn new(id: impl Into<String>, goal: Goal, steps: Vec<Step>, final_obs: Observation) -> Self {
        Demonstration {
            id: id.into(),
            goal,
            steps,
            final_obs,
            annotation: None,
            gt_alignment: None,
            gt_annotation: None,
        }
    }

    pub fn with_annotation(mut self, annotation: Vec<Instruction>) -> Self {
        self.annotation = Some(annotation);
        self
    }

    pub fn with_gt_alignment(mut self, a: Alignment) -> Self {
        self.gt_alignment = Some(a);
        self
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> + '_ {
        self.steps.iter().map(|s| &s.act)
    }

    /// Observation seen before action `i`, or `final_obs` for `i == len()`.
    pub fn obs_at(&self, i: usize) -> &Observation {
        if i < self.steps.len() {
            &self.steps[i].obs
        } else {
            &self.final_obs
        }
    }

    pub fn is_annotated(&self) -> bool {
        self.annotation.is_some()
    }

    pub fn gt_alignment(&self, _: &EvalAccess) -> Option<&Alignment> {
        self.gt_alignment.as_ref()
    }

    /// The reference instruction sequence: the visible annotation if present,
    /// otherwise the stripped one.
    pub fn gt_annotation(&self, _: &EvalAccess) -> Option<&Vec<Instruction>> {
        self.annotation.as_ref().or(self.gt_annotation.as_ref())
    }

    /// Overwrite evaluation-only fields. Used to build leakage tests.
    pub fn set_ground_truth(
        &mut self,
        _: &EvalAccess,
        alignment: Option<Alignment>,
        annotation: Option<Vec<Instruction>>,
    ) {
        self.gt_alignment = alignment;
        self.gt_annotation = annotation;
    }

    /// Move the annotation into the evaluation-only field.
    pub fn strip_annotation(&mut self) {
        if let Some(a) = self.annotation.take() {
            self.gt_annotation = Some(a);
        }
    }

    pub fn validate(&self) -> Result<(), DemoError> {
        let id = || self.id.clone();
        if self.steps.is_empty() {
            return Err(DemoError::NoSteps { id: id() });
        }
        if self.goal.tokens.is_empty() {
            return Err(DemoError::EmptyGoal { id: id() });
        }
        let side = self.final_obs.side();
        for (i, s) in self.steps.iter().enumerate() {
            let bad = |reason: String| DemoError::BadStep {
                id: id(),
                step: i + 1,
                reason,
            };
            s.act.validate().map_err(|e| bad(e.to_string()))?;
            if s.act.kind == ActionKind::Stop {
                return Err(bad("stored demonstrations never contain stop".into()));
            }
            if s.obs.side().is_none() || s.obs.side() != side {
                return Err(bad("observation window shape differs".into()));
            }
        }
        let n = self.steps.len();
        let reference = self.annotation.as_ref().or(self.gt_annotation.as_ref());
        if let Some(ann) = reference {
            if ann.len() > n {
                return Err(DemoError::TooManyInstructions {
                    id: id(),
                    m: ann.len(),
                    n,
                });
            }
        }
        if let Some(a) = &self.gt_alignment {
            let res = match reference {
                Some(ann) => a.validate_for(n, ann.len()),
                None => a.validate().and_then(|_| {
                    if a.len() == n {
                        Ok(())
                    } else {
                        Err(AlignmentError::Length {
                            expected: n,
                            found: a.len(),
                        })
                    }
                }),
            };
            res.map_err(|source| DemoError::GroundTruth { id: id(), source })?;
        }
        Ok(())
    }
}
