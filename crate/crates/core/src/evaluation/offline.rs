//! Teacher-forced exact-match accuracy on ground-truth segments.

use super::metrics::{CategoryRates, EvalError};
use super::policy::{context_for, flat_context, greedy_step, Policy};
use crate::corpus::{Dataset, Demonstration, EvalAccess};

/// What produces actions during offline scoring.
#[derive(Clone, Copy, Debug)]
pub enum OfflinePolicy<'a> {
    Learned(&'a Policy),
    /// Replays the demonstration's own actions; an upper bound.
    ExpertReplay,
}

/// Score every ground-truth segment of every test demo. Hierarchical
/// executors decode from the segment's start under the true instruction and
/// must reproduce each action, then STOP. Flat executors have no segment
/// STOP; they must reproduce the segment's actions with the previous action
/// carried across segment boundaries. Object and receptacle arguments count.
pub fn offline_subtask_accuracy(
    policy: OfflinePolicy<'_>,
    test: &Dataset,
    access: &EvalAccess,
) -> Result<CategoryRates, EvalError> {
    use rayon::prelude::*;
    let parts = test
        .demos
        .par_iter()
        .map(|d| demo_accuracy(policy, d, access))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = CategoryRates::default();
    for p in &parts {
        out.merge(p);
    }
    Ok(out)
}

fn demo_accuracy(
    policy: OfflinePolicy<'_>,
    d: &Demonstration,
    access: &EvalAccess,
) -> Result<CategoryRates, EvalError> {
    let missing = || EvalError::MissingGroundTruth(d.id.clone());
    let a = d.gt_alignment(access).ok_or_else(missing)?;
    let ins = d.gt_annotation(access).ok_or_else(missing)?;
    let seg = a.segmentation().map_err(|e| EvalError::Invalid(e.to_string()))?;
    if seg.spans.len() != ins.len() || a.len() != d.len() {
        return Err(EvalError::Invalid(format!("ground truth of {} does not fit", d.id)));
    }
    let mut out = CategoryRates::default();
    for (span, ins) in seg.spans.iter().zip(ins) {
        let hit = match policy {
            OfflinePolicy::ExpertReplay => true,
            OfflinePolicy::Learned(Policy::Hierarchical { executor, .. }) => {
                let ctx = context_for(ins);
                let mut ok = true;
                for i in span.clone() {
                    let prev = (i > span.start).then(|| &d.steps[i - 1].act);
                    if greedy_step(executor, &d.steps[i].obs, prev, &ctx) != Ok(Some(d.steps[i].act)) {
                        ok = false;
                        break;
                    }
                }
                ok && greedy_step(executor, d.obs_at(span.end), Some(&d.steps[span.end - 1].act), &ctx) == Ok(None)
            }
            OfflinePolicy::Learned(Policy::Flat { executor }) => {
                let ctx = flat_context(&d.goal);
                span.clone().all(|i| {
                    let prev = i.checked_sub(1).map(|p| &d.steps[p].act);
                    greedy_step(executor, &d.steps[i].obs, prev, &ctx) == Ok(Some(d.steps[i].act))
                })
            }
        };
        out.add(ins.category(), hit);
    }
    Ok(out)
}
