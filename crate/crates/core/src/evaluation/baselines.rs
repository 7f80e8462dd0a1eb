//! The four training arms compared in experiments.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::{flat_context, Policy};
use crate::corpus::{Action, Dataset, Demonstration};
use crate::models::{featurize_summary, fit, target_class, ExecutorModel, FitConfig, ObsSummary};
use crate::training::{sl3_train, TrainConfig, TrainError, TrainMode, TrainState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Sl3,
    Seq2seq,
    Seq2seq2seq,
    NoLatent,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Sl3,
        BaselineKind::Seq2seq,
        BaselineKind::Seq2seq2seq,
        BaselineKind::NoLatent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Sl3 => "sl3",
            BaselineKind::Seq2seq => "seq2seq",
            BaselineKind::Seq2seq2seq => "seq2seq2seq",
            BaselineKind::NoLatent => "no_latent",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown baseline `{s}` (expected sl3, seq2seq, seq2seq2seq or no_latent)"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("flat executor fit: {0}")]
    Fit(String),
}

/// A trained arm; hierarchical arms keep their training state.
#[derive(Clone, Debug)]
pub struct Trained {
    pub kind: BaselineKind,
    pub policy: Policy,
    pub state: Option<TrainState>,
}

/// Flat executor examples: the whole demo as one segment under the goal,
/// ending in STOP.
pub fn flat_examples(d: &Demonstration) -> Vec<(crate::models::FeatureVector, usize, f64)> {
    let ctx = flat_context(&d.goal);
    let mut prev: Option<&Action> = None;
    let mut out = Vec::with_capacity(d.len() + 1);
    for st in &d.steps {
        out.push((featurize_summary(&ObsSummary::new(&st.obs), prev, &ctx), target_class(Some(&st.act), &ctx), 1.0));
        prev = Some(&st.act);
    }
    out.push((featurize_summary(&ObsSummary::new(&d.final_obs), prev, &ctx), target_class(None, &ctx), 1.0));
    out
}

/// Goal-conditioned executor fitted on every demonstration; annotations unused.
pub fn train_flat(demos: &[&Demonstration], cfg: &FitConfig) -> Result<ExecutorModel, BaselineError> {
    let data: Vec<_> = demos.par_iter().map(|d| flat_examples(d)).collect::<Vec<_>>().concat();
    let ex = ExecutorModel::new(cfg.l2);
    let (params, _) = fit(&ex.params, &data, cfg).map_err(|e| BaselineError::Fit(e.to_string()))?;
    Ok(ExecutorModel { params })
}

pub fn run_baseline(
    kind: BaselineKind,
    unannotated: &Dataset,
    annotated: &Dataset,
    cfg: &TrainConfig,
) -> Result<Trained, BaselineError> {
    let hier = |st: TrainState| Trained {
        kind,
        policy: Policy::Hierarchical {
            controller: st.controller.clone(),
            executor: st.executor.clone(),
        },
        state: Some(st),
    };
    match kind {
        BaselineKind::Sl3 => Ok(hier(sl3_train(unannotated, annotated, &TrainConfig {
            mode: TrainMode::Sl3,
            ..cfg.clone()
        })?)),
        BaselineKind::NoLatent => Ok(hier(sl3_train(unannotated, annotated, &TrainConfig {
            mode: TrainMode::NoLatent,
            ..cfg.clone()
        })?)),
        // annotated demos aligned once by the initializer, fitted once, never relabeled
        BaselineKind::Seq2seq2seq => Ok(hier(sl3_train(unannotated, annotated, &TrainConfig {
            mode: TrainMode::NoLatent,
            iterations: 1,
            ..cfg.clone()
        })?)),
        BaselineKind::Seq2seq => {
            // id order, so the annotated/unannotated split cannot matter
            let mut demos: Vec<&Demonstration> = annotated.demos.iter().chain(&unannotated.demos).collect();
            demos.sort_by(|a, b| a.id.cmp(&b.id));
            Ok(Trained {
                kind,
                policy: Policy::Flat {
                    executor: train_flat(&demos, &cfg.executor)?,
                },
                state: None,
            })
        }
    }
}
