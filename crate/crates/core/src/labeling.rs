//! Instruction labels for the segments of unannotated demonstrations.

use crate::corpus::{Action, Alignment, Demonstration, Instruction, Segmentation};
use crate::models::{argmax, ControllerModel, ExecutorModel, Inventory, ProposalModel};
use crate::segmentation::SegmentScorer;

pub use crate::corpus::build_inventory;

/// Largest number of label sequences the exhaustive oracle will score.
pub const ENUMERATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("alignment does not fit demonstration {id}: {reason}")]
    InvalidAlignment { id: String, reason: String },
    #[error("empty instruction inventory")]
    EmptyInventory,
    #[error("{count} label sequences exceed the limit of {limit}")]
    TooMany { count: f64, limit: f64 },
}

fn segments(d: &Demonstration, a: &Alignment) -> Result<Segmentation, LabelError> {
    let bad = |reason: String| LabelError::InvalidAlignment {
        id: d.id.clone(),
        reason,
    };
    if a.0.len() != d.len() {
        return Err(bad(format!("{} labels for {} actions", a.0.len(), d.len())));
    }
    a.segmentation().map_err(|v| bad(v.to_string()))
}

fn span_actions(d: &Demonstration, s: &std::ops::Range<usize>) -> Vec<Action> {
    d.steps[s.clone()].iter().map(|st| st.act).collect()
}

/// Label each segment independently with the proposal's highest-scoring
/// instruction; ties go to the lowest inventory index.
pub fn label_segments(
    d: &Demonstration,
    a: &Alignment,
    q: &ProposalModel,
) -> Result<Vec<Instruction>, LabelError> {
    if q.inventory.is_empty() {
        return Err(LabelError::EmptyInventory);
    }
    let seg = segments(d, a)?;
    let acts: Vec<Vec<Action>> = seg.spans.iter().map(|s| span_actions(d, s)).collect();
    let empty = Vec::new();
    Ok((0..acts.len())
        .map(|j| {
            let next = acts.get(j + 1).unwrap_or(&empty);
            let lp = q.log_probs(&acts[j], next, &d.goal);
            q.inventory.get(argmax(&lp)).clone()
        })
        .collect())
}

/// Executor score of every segment under every inventory instruction,
/// STOP included: `table[j][u]`.
pub fn segment_score_table(
    d: &Demonstration,
    seg: &Segmentation,
    ex: &ExecutorModel,
    inventory: &Inventory,
) -> Vec<Vec<f64>> {
    let sc = SegmentScorer::new(ex, d, inventory.items());
    seg.spans
        .iter()
        .map(|s| (0..inventory.len()).map(|u| sc.segment(s.start, s.end, u)).collect())
        .collect()
}

/// Controller plus executor score of a labeled segmentation.
pub fn labeled_score(
    d: &Demonstration,
    seg: &Segmentation,
    labels: &[usize],
    table: &[Vec<f64>],
    ctrl: &ControllerModel,
) -> f64 {
    let view = d.goal.view();
    let inv = &ctrl.inventory;
    let mut total = 0.0;
    for pos in 0..=labels.len() {
        let prev = pos.checked_sub(1).map(|p| inv.get(labels[p]));
        let c = labels.get(pos).copied().unwrap_or(ctrl.end());
        total += ctrl.log_probs(&view, pos, prev)[c];
    }
    debug_assert_eq!(seg.spans.len(), labels.len());
    total + labels.iter().enumerate().map(|(j, &u)| table[j][u]).sum::<f64>()
}

/// Joint argmax of controller and executor scores over label sequences, by
/// dynamic programming over (segment, previous label). `beam_per_segment`
/// keeps only the best-B labels per segment by executor score.
pub fn exact_label(
    d: &Demonstration,
    a: &Alignment,
    ctrl: &ControllerModel,
    ex: &ExecutorModel,
    beam_per_segment: Option<usize>,
) -> Result<(Vec<Instruction>, f64), LabelError> {
    let inv = &ctrl.inventory;
    if inv.is_empty() {
        return Err(LabelError::EmptyInventory);
    }
    let seg = segments(d, a)?;
    let table = segment_score_table(d, &seg, ex, inv);
    let m = seg.spans.len();
    let cands: Vec<Vec<usize>> = table
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            if let Some(b) = beam_per_segment {
                // stable: equal scores keep inventory order
                idx.sort_by(|&x, &y| row[y].partial_cmp(&row[x]).unwrap_or(std::cmp::Ordering::Equal));
                idx.truncate(b.max(1));
                idx.sort_unstable();
            }
            idx
        })
        .collect();
    let view = d.goal.view();
    let first = ctrl.log_probs(&view, 0, None);
    let mut best: Vec<f64> = cands[0].iter().map(|&u| first[u] + table[0][u]).collect();
    let mut back: Vec<Vec<usize>> = vec![Vec::new()];
    for j in 1..m {
        let mut next = vec![f64::NEG_INFINITY; cands[j].len()];
        let mut bp = vec![0usize; cands[j].len()];
        for (pi, &v) in cands[j - 1].iter().enumerate() {
            let lp = ctrl.log_probs(&view, j, Some(inv.get(v)));
            for (ci, &u) in cands[j].iter().enumerate() {
                let s = best[pi] + lp[u] + table[j][u];
                if s > next[ci] {
                    next[ci] = s;
                    bp[ci] = pi;
                }
            }
        }
        best = next;
        back.push(bp);
    }
    let mut arg = 0;
    let mut total = f64::NEG_INFINITY;
    for (pi, &v) in cands[m - 1].iter().enumerate() {
        let s = best[pi] + ctrl.log_probs(&view, m, Some(inv.get(v)))[ctrl.end()];
        if s > total {
            total = s;
            arg = pi;
        }
    }
    let mut picks = vec![0usize; m];
    for j in (0..m).rev() {
        picks[j] = cands[j][arg];
        if j > 0 {
            arg = back[j][arg];
        }
    }
    Ok((picks.iter().map(|&u| inv.get(u).clone()).collect(), total))
}

/// Exhaustive oracle for `exact_label`: scores every label sequence.
pub fn enumerate_label(
    d: &Demonstration,
    a: &Alignment,
    ctrl: &ControllerModel,
    ex: &ExecutorModel,
) -> Result<(Vec<Instruction>, f64), LabelError> {
    let inv = &ctrl.inventory;
    if inv.is_empty() {
        return Err(LabelError::EmptyInventory);
    }
    let seg = segments(d, a)?;
    let m = seg.spans.len();
    let count = (inv.len() as f64).powi(m as i32);
    if count > ENUMERATION_LIMIT {
        return Err(LabelError::TooMany {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let table = segment_score_table(d, &seg, ex, inv);
    let mut labels = vec![0usize; m];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let s = labeled_score(d, &seg, &labels, &table, ctrl);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((labels.clone(), s));
        }
        // odometer over label indices, last position fastest
        let mut j = m;
        loop {
            if j == 0 {
                let (l, s) = best.unwrap();
                return Ok((l.iter().map(|&u| inv.get(u).clone()).collect(), s));
            }
            j -= 1;
            labels[j] += 1;
            if labels[j] < inv.len() {
                break;
            }
            labels[j] = 0;
        }
    }
}

/// Score of a given label sequence under the same objective `exact_label` maximizes.
pub fn label_objective(
    d: &Demonstration,
    a: &Alignment,
    labels: &[Instruction],
    ctrl: &ControllerModel,
    ex: &ExecutorModel,
) -> Result<f64, LabelError> {
    let seg = segments(d, a)?;
    let idx = labels
        .iter()
        .map(|l| {
            ctrl.inventory.index_of(l).map_err(|e| LabelError::InvalidAlignment {
                id: d.id.clone(),
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if idx.len() != seg.spans.len() {
        return Err(LabelError::InvalidAlignment {
            id: d.id.clone(),
            reason: format!("{} labels for {} segments", idx.len(), seg.spans.len()),
        });
    }
    let table = segment_score_table(d, &seg, ex, &ctrl.inventory);
    Ok(labeled_score(d, &seg, &idx, &table, ctrl))
}
