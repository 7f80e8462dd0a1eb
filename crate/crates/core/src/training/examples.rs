//! Supervised examples for each model from labeled segmentations.

use crate::corpus::{Action, Demonstration, Instruction, Segmentation};
use crate::models::{
    featurize_proposal, featurize_summary, target_class, ControllerModel, ExecContext,
    FeatureVector, ModelError, ObsSummary, ProposalModel,
};

pub type Weighted = (FeatureVector, usize, f64);

/// Executor examples: every action under its segment's instruction, plus one
/// STOP after each segment.
pub fn executor_examples(d: &Demonstration, seg: &Segmentation, labels: &[Instruction]) -> Vec<Weighted> {
    let sums: Vec<ObsSummary> = (0..=d.len()).map(|i| ObsSummary::new(d.obs_at(i))).collect();
    let mut out = Vec::with_capacity(d.len() + seg.spans.len());
    for (span, ins) in seg.spans.iter().zip(labels) {
        let ctx = ExecContext::from_instruction(ins);
        let mut prev: Option<&Action> = None;
        for i in span.clone() {
            let a = &d.steps[i].act;
            out.push((featurize_summary(&sums[i], prev, &ctx), target_class(Some(a), &ctx), 1.0));
            prev = Some(a);
        }
        out.push((featurize_summary(&sums[span.end], prev, &ctx), target_class(None, &ctx), 1.0));
    }
    out
}

pub fn controller_examples(
    ctrl: &ControllerModel,
    d: &Demonstration,
    labels: &[Instruction],
) -> Result<Vec<Weighted>, ModelError> {
    Ok(ctrl
        .examples(&d.goal, labels)?
        .into_iter()
        .map(|(f, c)| (f, c, 1.0))
        .collect())
}

/// Proposal examples: (segment actions, next segment actions, goal) → label.
pub fn proposal_examples(
    q: &ProposalModel,
    d: &Demonstration,
    seg: &Segmentation,
    labels: &[Instruction],
) -> Result<Vec<Weighted>, ModelError> {
    let acts: Vec<Vec<Action>> = seg
        .spans
        .iter()
        .map(|s| d.steps[s.clone()].iter().map(|st| st.act).collect())
        .collect();
    let empty = Vec::new();
    let mut out = Vec::with_capacity(acts.len());
    for (j, ins) in labels.iter().enumerate() {
        let next = acts.get(j + 1).unwrap_or(&empty);
        out.push((featurize_proposal(&acts[j], next, &d.goal), q.inventory.index_of(ins)?, 1.0));
    }
    Ok(out)
}
