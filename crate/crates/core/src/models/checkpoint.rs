//! JSON checkpoints.
//!
//! A model is stored as
//!
//! ```json
//! {
//!   "kind": "executor",
//!   "feature_template_version": 1,
//!   "classes": ["up", "down", ...],
//!   "l2": 0.01,
//!   "version": 3,
//!   "weights": { "<feature>": { "<class>": 0.25, ... }, ... }
//! }
//! ```
//!
//! Zero weights are omitted; feature rows keep their order, so a round trip
//! reproduces the parameters exactly.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::controller::{ControllerModel, Inventory};
use super::executor::{ExecClassSpace, ExecutorModel};
use super::params::ModelParams;
use super::proposal::ProposalModel;
use crate::corpus::Instruction;

pub const FEATURE_TEMPLATE_VERSION: u32 = 1;
pub const END_LABEL: &str = "<end>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub kind: String,
    pub feature_template_version: u32,
    pub classes: Vec<String>,
    pub l2: f64,
    pub version: u64,
    pub weights: IndexMap<String, IndexMap<String, f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("expected a {expected} checkpoint, found {found}")]
    Kind { expected: String, found: String },
    #[error("unsupported feature template version {0}")]
    Version(u32),
    #[error("class set does not match: {0}")]
    Classes(String),
    #[error("unknown class `{0}` in weights")]
    UnknownClass(String),
    #[error("non-finite weight for feature `{0}`")]
    NonFinite(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ModelCheckpoint {
    pub fn from_params(kind: &str, classes: Vec<String>, p: &ModelParams) -> Self {
        let mut weights = IndexMap::with_capacity(p.num_features());
        for (r, name) in p.feature_names().enumerate() {
            let row: IndexMap<String, f64> = p
                .row_at(r)
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(c, w)| (classes[c].clone(), *w))
                .collect();
            weights.insert(name.to_string(), row);
        }
        ModelCheckpoint {
            kind: kind.to_string(),
            feature_template_version: FEATURE_TEMPLATE_VERSION,
            classes,
            l2: p.l2,
            version: p.version,
            weights,
        }
    }

    pub fn to_params(&self, kind: &str, classes: &[String]) -> Result<ModelParams, CheckpointError> {
        if self.kind != kind {
            return Err(CheckpointError::Kind {
                expected: kind.into(),
                found: self.kind.clone(),
            });
        }
        if self.feature_template_version != FEATURE_TEMPLATE_VERSION {
            return Err(CheckpointError::Version(self.feature_template_version));
        }
        if self.classes != classes {
            return Err(CheckpointError::Classes(format!(
                "{} stored, {} expected",
                self.classes.len(),
                classes.len()
            )));
        }
        let index: IndexMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut p = ModelParams::new(classes.len(), self.l2);
        p.version = self.version;
        for (f, row) in &self.weights {
            p.intern(f);
            for (c, &w) in row {
                if !w.is_finite() {
                    return Err(CheckpointError::NonFinite(f.clone()));
                }
                let ci = *index
                    .get(c.as_str())
                    .ok_or_else(|| CheckpointError::UnknownClass(c.clone()))?;
                p.set_weight(f, ci, w);
            }
        }
        Ok(p)
    }
}

pub fn inventory_labels(inv: &Inventory) -> Vec<String> {
    inv.items().iter().map(Instruction::text).collect()
}

pub fn executor_checkpoint(ex: &ExecutorModel) -> ModelCheckpoint {
    ModelCheckpoint::from_params("executor", ExecClassSpace::get().names(), &ex.params)
}

pub fn executor_from_checkpoint(c: &ModelCheckpoint) -> Result<ExecutorModel, CheckpointError> {
    Ok(ExecutorModel {
        params: c.to_params("executor", &ExecClassSpace::get().names())?,
    })
}

fn controller_labels(inv: &Inventory) -> Vec<String> {
    let mut v = inventory_labels(inv);
    v.push(END_LABEL.to_string());
    v
}

pub fn controller_checkpoint(c: &ControllerModel) -> ModelCheckpoint {
    ModelCheckpoint::from_params("controller", controller_labels(&c.inventory), &c.params)
}

pub fn controller_from_checkpoint(
    c: &ModelCheckpoint,
    inv: Inventory,
) -> Result<ControllerModel, CheckpointError> {
    Ok(ControllerModel {
        params: c.to_params("controller", &controller_labels(&inv))?,
        inventory: inv,
    })
}

pub fn proposal_checkpoint(q: &ProposalModel) -> ModelCheckpoint {
    ModelCheckpoint::from_params("proposal", inventory_labels(&q.inventory), &q.params)
}

pub fn proposal_from_checkpoint(
    c: &ModelCheckpoint,
    inv: Inventory,
) -> Result<ProposalModel, CheckpointError> {
    Ok(ProposalModel {
        params: c.to_params("proposal", &inventory_labels(&inv))?,
        inventory: inv,
    })
}
