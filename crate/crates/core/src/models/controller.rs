//! Controller policy over the instruction inventory, conditioned on the goal,
//! the plan position and the previous instruction.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{argmax, FeatureVector, ModelError, ModelParams};
use crate::corpus::{Goal, GoalView, Instruction};

/// A fixed, ordered instruction set with reverse lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct Inventory {
    items: Vec<Instruction>,
    index: HashMap<Instruction, usize>,
}

impl Inventory {
    pub fn new(items: Vec<Instruction>) -> Self {
        let mut seen = HashMap::new();
        let mut uniq = Vec::with_capacity(items.len());
        for ins in items {
            if !seen.contains_key(&ins) {
                seen.insert(ins.clone(), uniq.len());
                uniq.push(ins);
            }
        }
        Inventory {
            items: uniq,
            index: seen,
        }
    }

    pub fn items(&self) -> &[Instruction] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Instruction {
        &self.items[i]
    }

    pub fn index_of(&self, ins: &Instruction) -> Result<usize, ModelError> {
        self.index
            .get(ins)
            .copied()
            .ok_or_else(|| ModelError::UnknownLabel(ins.text()))
    }
}

pub fn featurize_controller(view: &GoalView, pos: usize, prev: Option<&Instruction>) -> FeatureVector {
    let g = &view.signature;
    let mut fv = FeatureVector::with_capacity(4 + view.entities.len());
    fv.on("b");
    fv.on(format!("g={g}"));
    fv.on(format!("g={g}|pos={pos}"));
    for (k, e) in view.entities.iter().enumerate() {
        fv.on(format!("g={g}|pos={pos}|a{k}={}", e.name()));
    }
    let p = prev.map_or_else(|| "none".to_string(), |i| i.text());
    fv.on(format!("g={g}|prev={p}"));
    fv
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub plan: Vec<Instruction>,
    /// Set when `max_len` was reached without END.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerModel {
    pub params: ModelParams,
    pub inventory: Inventory,
}

impl ControllerModel {
    pub fn new(inventory: Inventory, l2: f64) -> Self {
        ControllerModel {
            params: ModelParams::new(inventory.len() + 1, l2),
            inventory,
        }
    }

    pub fn end(&self) -> usize {
        self.inventory.len()
    }

    pub fn class_of(&self, ins: Option<&Instruction>) -> Result<usize, ModelError> {
        match ins {
            Some(i) => self.inventory.index_of(i),
            None => Ok(self.end()),
        }
    }

    pub fn log_probs(&self, view: &GoalView, pos: usize, prev: Option<&Instruction>) -> Vec<f64> {
        self.params.log_probs(&featurize_controller(view, pos, prev))
    }

    /// Training examples `(features, class)` for one plan, END included.
    pub fn examples(&self, g: &Goal, plan: &[Instruction]) -> Result<Vec<(FeatureVector, usize)>, ModelError> {
        let view = g.view();
        let mut out = Vec::with_capacity(plan.len() + 1);
        for pos in 0..=plan.len() {
            let prev = pos.checked_sub(1).map(|p| &plan[p]);
            out.push((
                featurize_controller(&view, pos, prev),
                self.class_of(plan.get(pos))?,
            ));
        }
        Ok(out)
    }

    pub fn sequence_log_prob(&self, instrs: &[Instruction], g: &Goal) -> Result<f64, ModelError> {
        let view = g.view();
        let mut total = 0.0;
        for pos in 0..=instrs.len() {
            let prev = pos.checked_sub(1).map(|p| &instrs[p]);
            let c = self.class_of(instrs.get(pos))?;
            total += self.log_probs(&view, pos, prev)[c];
        }
        Ok(total)
    }

    /// Greedy plan; the lowest class index wins ties.
    pub fn decode(&self, g: &Goal, max_len: usize) -> Decoded {
        self.decode_with(g, max_len, argmax)
    }

    /// Ancestral sampling with a seeded generator.
    pub fn sample(&self, g: &Goal, max_len: usize, seed: u64) -> Decoded {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.decode_with(g, max_len, |lp| {
            let w: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            WeightedIndex::new(&w).map_or_else(|_| argmax(lp), |d| d.sample(&mut rng))
        })
    }

    fn decode_with(&self, g: &Goal, max_len: usize, mut pick: impl FnMut(&[f64]) -> usize) -> Decoded {
        let view = g.view();
        let mut plan: Vec<Instruction> = Vec::new();
        while plan.len() < max_len {
            let lp = self.log_probs(&view, plan.len(), plan.last());
            let c = pick(&lp);
            if c == self.end() {
                return Decoded {
                    plan,
                    truncated: false,
                };
            }
            plan.push(self.inventory.get(c).clone());
        }
        // one more look: END right at the limit is not a truncation
        let lp = self.log_probs(&view, plan.len(), plan.last());
        let truncated = argmax(&lp) != self.end();
        Decoded { plan, truncated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Object, Receptacle, SubtaskCategory};
    use crate::models::fit::{fit_examples, FitConfig};

    fn inv() -> Inventory {
        Inventory::new(vec![
            Instruction::goto(Object::Apple),
            Instruction::on_object(SubtaskCategory::Pick, Object::Apple),
            Instruction::goto(Receptacle::Fridge),
            Instruction::put(Object::Apple, Receptacle::Fridge),
        ])
    }

    #[test]
    fn empty_plan_is_end() {
        let c = ControllerModel::new(inv(), 0.0);
        let g = Goal::from_text("put the apple in the fridge");
        let lp = c.sequence_log_prob(&[], &g).unwrap();
        assert!((lp - (1.0f64 / 5.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn memorizes_plan() {
        let c = ControllerModel::new(inv(), 0.0);
        let g = Goal::from_text("put the apple in the fridge");
        let plan = inv().items().to_vec();
        let ex = c.examples(&g, &plan).unwrap();
        let (params, _) = fit_examples(&c.params, &ex, &FitConfig::default()).unwrap();
        let c = ControllerModel { params, ..c };
        let d = c.decode(&g, 10);
        assert_eq!(d.plan, plan);
        assert!(!d.truncated);
        assert_eq!(c.decode(&g, 10), d);
        let short = c.decode(&g, 2);
        assert!(short.truncated);
        assert_eq!(short.plan.len(), 2);
    }
}
