//! Highest-scoring monotone alignment of a demonstration to an instruction
//! sequence, and an exhaustive oracle.

use super::scorer::SegmentScorer;
use crate::corpus::{
    count_alignments, enumerate_alignments, Alignment, Demonstration, Instruction,
};
use crate::models::{exec_sequence_log_prob, ExecutorModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentError {
    #[error("cannot align {n} actions to {m} instructions")]
    Infeasible { n: usize, m: usize },
    #[error("{count} candidate alignments exceed the limit of {limit}")]
    TooMany { count: f64, limit: f64 },
}

/// Largest candidate count the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Whether two scores are equal up to rounding.
pub fn scores_tie(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= 1e-10 * scale
}

/// DP table: `values[i][j]` is the best log-probability of actions `1..=i+1`
/// with action `i + 1` closing segment `j + 1`; `back[i][j]` is the number
/// of actions before that segment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    pub values: Vec<Vec<f64>>,
    pub back: Vec<Vec<usize>>,
}

impl ScoreMatrix {
    /// Alignment of the first `i` actions into `j` segments, read from back-pointers.
    pub fn trace(&self, i: usize, j: usize) -> Vec<usize> {
        let mut out = vec![0; i];
        let (mut i, mut j) = (i, j);
        while j > 0 {
            let k = self.back[i - 1][j - 1];
            for x in &mut out[k..i] {
                *x = j;
            }
            i = k;
            j -= 1;
        }
        out
    }
}

/// Fill the DP table from a scorer.
pub fn score_matrix(sc: &SegmentScorer, m: usize) -> Result<ScoreMatrix, SegmentError> {
    let n = sc.len();
    if m == 0 || m > n {
        return Err(SegmentError::Infeasible { n, m });
    }
    let mut t = ScoreMatrix {
        values: vec![vec![f64::NEG_INFINITY; m]; n],
        back: vec![vec![0; m]; n],
    };
    for i in 1..=n {
        t.values[i - 1][0] = sc.segment(0, i, 0);
        for j in 2..=m.min(i) {
            let mut best = f64::NEG_INFINITY;
            let mut best_k = usize::MAX;
            for k in (j - 1)..i {
                let v = t.values[k - 1][j - 2] + sc.segment(k, i, j - 1);
                if best_k == usize::MAX || (v > best && !scores_tie(v, best)) {
                    best = v;
                    best_k = k;
                } else if scores_tie(v, best) {
                    // equal up to rounding: keep the lexicographically smaller alignment
                    t.back[i - 1][j - 1] = k;
                    let cand = t.trace(i, j);
                    t.back[i - 1][j - 1] = best_k;
                    let cur = t.trace(i, j);
                    if cand < cur {
                        best = v;
                        best_k = k;
                    }
                }
                t.back[i - 1][j - 1] = best_k;
            }
            t.values[i - 1][j - 1] = best;
        }
    }
    Ok(t)
}

/// Best alignment and its executor log-probability (STOP factors included).
pub fn segment_viterbi(
    d: &Demonstration,
    instrs: &[Instruction],
    ex: &ExecutorModel,
) -> Result<(Alignment, f64), SegmentError> {
    let sc = SegmentScorer::new(ex, d, instrs);
    let (a, lp, _) = segment_with_scorer(&sc, instrs.len())?;
    Ok((a, lp))
}

pub fn segment_with_scorer(
    sc: &SegmentScorer,
    m: usize,
) -> Result<(Alignment, f64, ScoreMatrix), SegmentError> {
    let t = score_matrix(sc, m)?;
    let n = sc.len();
    let a = Alignment(t.trace(n, m));
    let lp = t.values[n - 1][m - 1];
    Ok((a, lp, t))
}

/// Score of a fixed alignment, computed step by step.
pub fn alignment_log_prob(
    d: &Demonstration,
    instrs: &[Instruction],
    a: &Alignment,
    ex: &ExecutorModel,
) -> f64 {
    let seg = a.segmentation().expect("valid alignment");
    let mut total = 0.0;
    for (span, ins) in seg.spans.iter().zip(instrs) {
        let steps: Vec<_> = span
            .clone()
            .map(|i| (d.steps[i].obs.clone(), d.steps[i].act))
            .collect();
        total += exec_sequence_log_prob(ex, &steps, d.obs_at(span.end), ins, true);
    }
    total
}

/// Exhaustive search over all alignments in lexicographic order; the first
/// best one wins ties.
pub fn brute_force_segment(
    d: &Demonstration,
    instrs: &[Instruction],
    ex: &ExecutorModel,
) -> Result<(Alignment, f64), SegmentError> {
    let (n, m) = (d.len(), instrs.len());
    if m == 0 || m > n {
        return Err(SegmentError::Infeasible { n, m });
    }
    let count = count_alignments(n, m);
    if count > BRUTE_FORCE_LIMIT {
        return Err(SegmentError::TooMany {
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best: Option<(Alignment, f64)> = None;
    for a in enumerate_alignments(n, m).alignments {
        let lp = alignment_log_prob(d, instrs, &a, ex);
        match &best {
            Some((_, b)) if !(lp > *b && !scores_tie(lp, *b)) => {}
            _ => best = Some((a, lp)),
        }
    }
    Ok(best.expect("at least one alignment"))
}
