//! Amortized labeling proposal over the instruction inventory, conditioned on
//! a segment's actions, the following segment's actions and the goal.

use std::collections::BTreeSet;

use super::controller::Inventory;
use super::params::{FeatureVector, ModelError, ModelParams};
use crate::corpus::{Action, Goal, Instruction};

fn length_bucket(n: usize) -> &'static str {
    match n {
        0 => "0",
        1 => "1",
        2 => "2",
        3..=4 => "3-4",
        5..=8 => "5-8",
        _ => "9+",
    }
}

fn bag(prefix: &str, actions: &[Action], out: &mut BTreeSet<String>) {
    for a in actions {
        let k = a.kind.name();
        out.insert(format!("{prefix}:{k}"));
        if a.kind.is_move() {
            out.insert(format!("{prefix}:move"));
        }
        for e in a.entities() {
            out.insert(format!("{prefix}:{k}:{}", e.name()));
        }
    }
}

/// Presence features; invariant to the order of actions within each segment.
pub fn featurize_proposal(seg: &[Action], next: &[Action], g: &Goal) -> FeatureVector {
    let mut set = BTreeSet::new();
    bag("cur", seg, &mut set);
    if next.is_empty() {
        set.insert("next:none".to_string());
    } else {
        bag("next", next, &mut set);
    }
    for t in &g.tokens {
        set.insert(format!("g:{t}"));
    }
    set.insert(format!("len={}", length_bucket(seg.len())));
    let mut fv = FeatureVector::with_capacity(set.len() + 1);
    fv.on("b");
    for n in set {
        fv.on(n);
    }
    fv
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProposalModel {
    pub params: ModelParams,
    pub inventory: Inventory,
}

impl ProposalModel {
    pub fn new(inventory: Inventory, l2: f64) -> Self {
        ProposalModel {
            params: ModelParams::new(inventory.len(), l2),
            inventory,
        }
    }

    pub fn log_probs(&self, seg: &[Action], next: &[Action], g: &Goal) -> Vec<f64> {
        self.params.log_probs(&featurize_proposal(seg, next, g))
    }

    pub fn log_prob(
        &self,
        seg: &[Action],
        next: &[Action],
        g: &Goal,
        ins: &Instruction,
    ) -> Result<f64, ModelError> {
        let c = self.inventory.index_of(ins)?;
        Ok(self.log_probs(seg, next, g)[c])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ActionKind, Object, Receptacle, SubtaskCategory};

    #[test]
    fn normalized_and_order_free() {
        let inv = Inventory::new(vec![
            Instruction::goto(Object::Apple),
            Instruction::goto(Receptacle::Sink),
            Instruction::on_object(SubtaskCategory::Pick, Object::Apple),
        ]);
        let mut q = ProposalModel::new(inv, 0.0);
        q.params.set_weight("cur:move", 1, 0.5);
        q.params.set_weight("next:pick:apple", 0, 1.5);
        let g = Goal::from_text("put the apple in the sink");
        let seg = [Action::bare(ActionKind::Up), Action::bare(ActionKind::Left)];
        let rev = [Action::bare(ActionKind::Left), Action::bare(ActionKind::Up)];
        let next = [Action::on_object(ActionKind::Pick, Object::Apple)];
        let lp = q.log_probs(&seg, &next, &g);
        let total: f64 = lp.iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(lp, q.log_probs(&rev, &next, &g));
        assert!(featurize_proposal(&seg, &[], &g)
            .entries
            .iter()
            .any(|(n, _)| n == "next:none"));
    }
}
