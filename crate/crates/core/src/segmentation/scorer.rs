//! Per-step executor scores for one demonstration against an instruction
//! sequence, with prefix sums for O(1) segment scores.

use std::collections::HashMap;

use crate::corpus::{Demonstration, Instruction};
use crate::models::{featurize_summary, target_class, ExecContext, ExecutorModel, ObsSummary};

/// Scores of every action (and STOP) under each distinct instruction.
pub struct SegmentScorer {
    n: usize,
    /// distinct instruction index for each position in the sequence
    which: Vec<usize>,
    /// per distinct instruction: score of action i with no previous action
    start: Vec<Vec<f64>>,
    /// prefix sums of continuation scores: cont_prefix[u][i] = Σ_{1 ≤ i' < i} cont(i')
    cont_prefix: Vec<Vec<f64>>,
    /// STOP after action i, scored at observation i + 1 with previous action i
    stop: Vec<Vec<f64>>,
}

impl SegmentScorer {
    pub fn new(ex: &ExecutorModel, d: &Demonstration, instrs: &[Instruction]) -> Self {
        let n = d.len();
        let summaries: Vec<ObsSummary> = (0..=n).map(|i| ObsSummary::new(d.obs_at(i))).collect();
        let mut distinct: HashMap<&Instruction, usize> = HashMap::new();
        let mut uniq: Vec<&Instruction> = Vec::new();
        let which = instrs
            .iter()
            .map(|ins| {
                *distinct.entry(ins).or_insert_with(|| {
                    uniq.push(ins);
                    uniq.len() - 1
                })
            })
            .collect();
        let mut start = Vec::with_capacity(uniq.len());
        let mut cont_prefix = Vec::with_capacity(uniq.len());
        let mut stop = Vec::with_capacity(uniq.len());
        for ins in uniq {
            let ctx = ExecContext::from_instruction(ins);
            let mut st = Vec::with_capacity(n);
            let mut cp = vec![0.0; n + 1];
            let mut sp = Vec::with_capacity(n);
            for i in 0..n {
                let a = &d.steps[i].act;
                let prev = i.checked_sub(1).map(|p| &d.steps[p].act);
                let lp0 = ex.params.log_probs(&featurize_summary(&summaries[i], None, &ctx));
                st.push(lp0[target_class(Some(a), &ctx)]);
                let c = if i == 0 {
                    0.0
                } else {
                    let lp = ex.params.log_probs(&featurize_summary(&summaries[i], prev, &ctx));
                    lp[target_class(Some(a), &ctx)]
                };
                cp[i + 1] = cp[i] + c;
                let lps = ex.params.log_probs(&featurize_summary(&summaries[i + 1], Some(a), &ctx));
                sp.push(lps[target_class(None, &ctx)]);
            }
            start.push(st);
            cont_prefix.push(cp);
            stop.push(sp);
        }
        SegmentScorer {
            n,
            which,
            start,
            cont_prefix,
            stop,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_instructions(&self) -> usize {
        self.which.len()
    }

    /// Log-probability of actions `s..e` (0-based, half-open) executed under
    /// instruction `j` (0-based), STOP included.
    pub fn segment(&self, s: usize, e: usize, j: usize) -> f64 {
        debug_assert!(s < e && e <= self.n);
        let u = self.which[j];
        let cp = &self.cont_prefix[u];
        self.start[u][s] + (cp[e] - cp[s + 1]) + self.stop[u][e - 1]
    }
}
