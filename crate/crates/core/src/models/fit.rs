//! Full-batch gradient ascent on the regularized log-likelihood.

use std::collections::HashMap;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{log_softmax, CompiledFv, FeatureVector, ModelError, ModelParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Initial step size, applied to the gradient divided by the example count.
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Stop when an accepted step improves the objective by less than
    /// `tol * max(1, |objective|)`.
    pub tol: f64,
    /// Give up on an epoch once halving drives the step below this.
    pub min_lr: f64,
    /// Unused by the deterministic optimizer; kept so runs record it.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lr: 4.0,
            epochs: 300,
            l2: 0.01,
            tol: 1e-7,
            min_lr: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("no training examples")]
    Empty,
    #[error("non-finite objective at epoch {epoch} with step size {lr}")]
    NonFinite { epoch: usize, lr: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub epochs_run: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub final_lr: f64,
}

/// Training data aggregated by distinct feature vector.
struct Aggregated {
    fvs: Vec<CompiledFv>,
    /// Per distinct vector: `(class, count)` pairs in first-seen order.
    counts: Vec<Vec<(usize, f64)>>,
    total: f64,
}

fn aggregate(
    params: &mut ModelParams,
    data: &[(FeatureVector, usize, f64)],
) -> Result<Aggregated, FitError> {
    let mut index: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
    let mut fvs = Vec::new();
    let mut counts: Vec<IndexMap<usize, f64>> = Vec::new();
    let mut total = 0.0;
    for (fv, class, count) in data {
        params.check_class(*class)?;
        if let Some((n, _)) = fv.entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::NonFiniteFeature(n.clone()).into());
        }
        let c = params.compile_mut(fv);
        let i = *index.entry(c.key()).or_insert_with(|| {
            fvs.push(c);
            counts.push(IndexMap::new());
            fvs.len() - 1
        });
        *counts[i].entry(*class).or_insert(0.0) += count;
        total += count;
    }
    Ok(Aggregated {
        fvs,
        counts: counts.into_iter().map(|m| m.into_iter().collect()).collect(),
        total,
    })
}

fn all_log_probs(params: &ModelParams, agg: &Aggregated) -> Vec<Vec<f64>> {
    agg.fvs
        .par_iter()
        .map(|fv| log_softmax(params.scores(fv)))
        .collect()
}

fn objective_from(params: &ModelParams, agg: &Aggregated, lps: &[Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for (lp, cs) in lps.iter().zip(&agg.counts) {
        for &(c, n) in cs {
            ll += n * lp[c];
        }
    }
    ll - params.l2 * params.l2_norm_sq()
}

fn gradient(params: &ModelParams, agg: &Aggregated, lps: &[Vec<f64>]) -> Vec<f64> {
    let k = params.num_classes();
    let w = params.weights();
    let mut g: Vec<f64> = w.iter().map(|x| -2.0 * params.l2 * x).collect();
    for ((fv, lp), cs) in agg.fvs.iter().zip(lps).zip(&agg.counts) {
        let n: f64 = cs.iter().map(|c| c.1).sum();
        // residual: observed counts minus expected counts
        let mut resid: Vec<f64> = lp.iter().map(|l| -n * l.exp()).collect();
        for &(c, m) in cs {
            resid[c] += m;
        }
        for &(r, v) in &fv.0 {
            for (gi, ri) in g[r * k..(r + 1) * k].iter_mut().zip(&resid) {
                *gi += v * ri;
            }
        }
    }
    g
}

/// Regularized objective `Σ count·log p(class | fv) − l2·‖w‖²`.
pub fn objective(params: &ModelParams, data: &[(FeatureVector, usize, f64)]) -> Result<f64, FitError> {
    let mut p = params.clone();
    let agg = aggregate(&mut p, data)?;
    let lps = all_log_probs(&p, &agg);
    Ok(objective_from(&p, &agg, &lps))
}

/// Fit from the current weights (warm start). Per-example softmaxes run in
/// parallel; reductions run sequentially in data order, so the result does not
/// depend on the thread count.
pub fn fit(
    params: &ModelParams,
    data: &[(FeatureVector, usize, f64)],
    cfg: &FitConfig,
) -> Result<(ModelParams, FitReport), FitError> {
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    let mut p = params.clone();
    p.l2 = cfg.l2;
    let agg = aggregate(&mut p, data)?;
    let scale = 1.0 / agg.total.max(1.0);
    let mut lps = all_log_probs(&p, &agg);
    let mut obj = objective_from(&p, &agg, &lps);
    if !obj.is_finite() {
        return Err(FitError::NonFinite { epoch: 0, lr: cfg.lr });
    }
    let initial = obj;
    let mut trace = vec![obj];
    let mut lr = cfg.lr;
    let mut epochs_run = 0;
    'outer: for epoch in 1..=cfg.epochs {
        epochs_run = epoch;
        let g = gradient(&p, &agg, &lps);
        loop {
            let mut cand = p.clone();
            for (w, gi) in cand.weights_mut().iter_mut().zip(&g) {
                *w += lr * scale * gi;
            }
            let cand_lps = all_log_probs(&cand, &agg);
            let cand_obj = objective_from(&cand, &agg, &cand_lps);
            if !cand_obj.is_finite() {
                return Err(FitError::NonFinite { epoch, lr });
            }
            if cand_obj >= obj {
                let gain = cand_obj - obj;
                p = cand;
                lps = cand_lps;
                obj = cand_obj;
                trace.push(obj);
                if gain <= cfg.tol * obj.abs().max(1.0) {
                    break 'outer;
                }
                break;
            }
            lr *= 0.5;
            if lr < cfg.min_lr {
                break 'outer;
            }
        }
    }
    p.version = params.version + 1;
    Ok((
        p,
        FitReport {
            epochs_run,
            initial_objective: initial,
            final_objective: obj,
            trace,
            final_lr: lr,
        },
    ))
}

/// Unit-count convenience wrapper.
pub fn fit_examples(
    params: &ModelParams,
    data: &[(FeatureVector, usize)],
    cfg: &FitConfig,
) -> Result<(ModelParams, FitReport), FitError> {
    let weighted: Vec<_> = data.iter().map(|(f, c)| (f.clone(), *c, 1.0)).collect();
    fit(params, &weighted, cfg)
}
