//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skillparse::corpus::{Demonstration, Instruction, Step};
use skillparse::gridworld::{expert_demo, EnvConfig};
use skillparse::models::{featurize_summary, ExecContext, ExecutorModel, ObsSummary};

/// First `n` steps of a demonstration; the observation after step `n`
/// becomes the final observation.
pub fn truncate(d: &Demonstration, n: usize) -> Demonstration {
    let n = n.min(d.len());
    let steps: Vec<Step> = d.steps[..n].to_vec();
    Demonstration::new(d.id.clone(), d.goal.clone(), steps, d.obs_at(n).clone())
}

pub fn expert(seed: u64) -> Demonstration {
    expert_demo(&EnvConfig::default(), seed).expect("expert demo")
}

/// Executor whose weights are Gaussian-ish noise on every feature the given
/// demos can produce under the given instructions.
pub fn random_executor(
    demos: &[&Demonstration],
    instrs: &[Instruction],
    scale: f64,
    seed: u64,
) -> ExecutorModel {
    let mut ex = ExecutorModel::new(0.0);
    for d in demos {
        let sums: Vec<ObsSummary> = (0..=d.len()).map(|i| ObsSummary::new(d.obs_at(i))).collect();
        for ins in instrs {
            let ctx = ExecContext::from_instruction(ins);
            for (i, s) in sums.iter().enumerate() {
                ex.params.compile_mut(&featurize_summary(s, None, &ctx));
                if i > 0 {
                    let prev = &d.steps[i - 1].act;
                    ex.params.compile_mut(&featurize_summary(s, Some(prev), &ctx));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in ex.params.weights_mut() {
        *w = scale * (rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>() - 1.5);
    }
    ex
}

/// Random instruction sequence of length `m` drawn from the demo's own plan
/// and generic alternatives.
pub fn random_instructions(d: &Demonstration, m: usize, rng: &mut ChaCha8Rng) -> Vec<Instruction> {
    let mut pool: Vec<Instruction> = d.annotation.clone().unwrap_or_default();
    pool.push(Instruction::toggle_lamp());
    (0..m).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()
}

/// Controller with noisy weights on every feature reachable for plans of up
/// to `max_len` instructions over its inventory.
pub fn random_controller(
    inventory: skillparse::models::Inventory,
    goals: &[&skillparse::corpus::Goal],
    max_len: usize,
    scale: f64,
    seed: u64,
) -> skillparse::models::ControllerModel {
    use skillparse::models::{featurize_controller, ControllerModel};
    let mut c = ControllerModel::new(inventory, 0.0);
    let items = c.inventory.items().to_vec();
    for g in goals {
        let view = g.view();
        for pos in 0..=max_len {
            c.params.compile_mut(&featurize_controller(&view, pos, None));
            for p in &items {
                c.params.compile_mut(&featurize_controller(&view, pos, Some(p)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in c.params.weights_mut() {
        *w = scale * (rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>() - 1.5);
    }
    c
}

/// Random valid alignment of `n` actions into `m` segments.
pub fn random_alignment(n: usize, m: usize, rng: &mut ChaCha8Rng) -> skillparse::corpus::Alignment {
    let mut cuts: Vec<usize> = (1..n).collect();
    let mut chosen = Vec::new();
    for _ in 0..m - 1 {
        let k = rng.gen_range(0..cuts.len());
        chosen.push(cuts.remove(k));
    }
    chosen.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut j = 1;
    for i in 0..n {
        if chosen.contains(&i) {
            j += 1;
        }
        out.push(j);
    }
    skillparse::corpus::Alignment(out)
}
