//! Closed-loop rollouts in freshly sampled gridworld episodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{CategoryRates, EvalError, Rate};
use super::policy::{context_for, flat_context, greedy_step, Policy, StepCaps};
use crate::corpus::{Action, Instruction};
use crate::gridworld::{expert_act, subtask_success, EnvConfig, Episode, SubtaskSpec};
use crate::models::{ControllerModel, ExecutorModel};

/// Where the plan comes from.
#[derive(Clone, Copy, Debug)]
pub enum Planner<'a> {
    Controller(&'a ControllerModel),
    /// The episode's ground-truth subtask list.
    Oracle,
}

/// What executes each planned instruction.
#[derive(Clone, Copy, Debug)]
pub enum Actor<'a> {
    Executor(&'a ExecutorModel),
    /// The scripted expert acting on the true world state.
    Expert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineReport {
    pub subtask: CategoryRates,
    pub end_to_end: Rate,
    /// Episodes whose plan or step budget ran out.
    pub truncated: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    pub episodes: usize,
    pub seed: u64,
    pub max_plan_len: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            episodes: 200,
            seed: 2_000_000,
            max_plan_len: 20,
        }
    }
}

fn episode_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

struct EpisodeOutcome {
    subtask: CategoryRates,
    success: bool,
    truncated: bool,
}

/// In-order greedy matching of executed instructions against the goal's
/// subtasks: an executed instruction equal to the next unmatched subtask
/// consumes it and scores whether that subtask holds right after execution.
struct Matcher<'a> {
    goal: &'a [SubtaskSpec],
    next: usize,
    rates: CategoryRates,
}

impl<'a> Matcher<'a> {
    fn new(goal: &'a [SubtaskSpec]) -> Self {
        Matcher {
            goal,
            next: 0,
            rates: CategoryRates::default(),
        }
    }

    fn executed(&mut self, ins: &Instruction, ok: bool) {
        if self.goal.get(self.next) == Some(ins) {
            self.rates.add(ins.category(), ok);
            self.next += 1;
        }
    }

    fn finish(mut self) -> CategoryRates {
        for t in &self.goal[self.next..] {
            self.rates.add(t.category(), false);
        }
        self.rates
    }
}

fn run_hierarchical(
    env: &EnvConfig,
    seed: u64,
    planner: Planner<'_>,
    actor: Actor<'_>,
    caps: &StepCaps,
    max_plan_len: usize,
) -> Result<EpisodeOutcome, EvalError> {
    let mut ep = Episode::reset(env, seed).map_err(|e| EvalError::Invalid(e.to_string()))?;
    let (plan, mut truncated) = match planner {
        Planner::Oracle => (ep.goal.subtasks.clone(), false),
        Planner::Controller(c) => {
            let d = c.decode(&ep.goal.surface, max_plan_len);
            (d.plan, d.truncated)
        }
    };
    let goal_subtasks = ep.goal.subtasks.clone();
    let mut matcher = Matcher::new(&goal_subtasks);
    for ins in &plan {
        let before = ep.state.clone();
        let cap = caps.get(ins.category());
        let ctx = context_for(ins);
        let mut prev: Option<Action> = None;
        let mut taken = 0;
        loop {
            if taken >= cap {
                truncated = true;
                break;
            }
            let decision = match actor {
                Actor::Expert => Ok(expert_act(&ep.state, ins, taken, env.teleport_navigation)),
                Actor::Executor(ex) => greedy_step(ex, &ep.observe(), prev.as_ref(), &ctx),
            };
            taken += 1;
            match decision {
                Ok(None) => break,
                Ok(Some(a)) => {
                    ep.step(&a);
                    prev = Some(a);
                }
                // a class the instruction cannot ground: the step is wasted
                Err(()) => {}
            }
        }
        matcher.executed(ins, subtask_success(&before, &ep.state, ins));
    }
    Ok(EpisodeOutcome {
        subtask: matcher.finish(),
        success: ep.goal_success(),
        truncated,
    })
}

/// The flat executor has no plan; subtask progress is tracked by checking the
/// next pending goal subtask after every step.
fn run_flat(env: &EnvConfig, seed: u64, ex: &ExecutorModel) -> Result<EpisodeOutcome, EvalError> {
    let mut ep = Episode::reset(env, seed).map_err(|e| EvalError::Invalid(e.to_string()))?;
    let ctx = flat_context(&ep.goal.surface);
    let goal = ep.goal.subtasks.clone();
    let mut rates = CategoryRates::default();
    let mut next = 0;
    let mut before = ep.state.clone();
    let mut prev: Option<Action> = None;
    let mut truncated = true;
    for _ in 0..env.max_episode_len {
        match greedy_step(ex, &ep.observe(), prev.as_ref(), &ctx) {
            Ok(None) => {
                truncated = false;
                break;
            }
            Ok(Some(a)) => {
                ep.step(&a);
                prev = Some(a);
            }
            Err(()) => {}
        }
        while next < goal.len() && subtask_success(&before, &ep.state, &goal[next]) {
            rates.add(goal[next].category(), true);
            next += 1;
            before = ep.state.clone();
        }
    }
    for t in &goal[next..] {
        rates.add(t.category(), false);
    }
    Ok(EpisodeOutcome {
        subtask: rates,
        success: ep.goal_success(),
        truncated,
    })
}

fn aggregate(outcomes: Vec<EpisodeOutcome>) -> OnlineReport {
    let mut r = OnlineReport {
        subtask: CategoryRates::default(),
        end_to_end: Rate::default(),
        truncated: 0,
    };
    for o in outcomes {
        r.subtask.merge(&o.subtask);
        r.end_to_end.add(o.success);
        r.truncated += u64::from(o.truncated);
    }
    r
}

/// Roll out a planner/actor pair on `cfg.episodes` episodes seeded
/// `cfg.seed, cfg.seed + 1, ...`. Aggregation follows episode order.
pub fn online_eval(
    planner: Planner<'_>,
    actor: Actor<'_>,
    env: &EnvConfig,
    caps: &StepCaps,
    cfg: &OnlineConfig,
) -> Result<OnlineReport, EvalError> {
    let outcomes = (0..cfg.episodes)
        .into_par_iter()
        .map(|i| run_hierarchical(env, episode_seed(cfg.seed, i), planner, actor, caps, cfg.max_plan_len))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(outcomes))
}

pub fn online_eval_flat(ex: &ExecutorModel, env: &EnvConfig, cfg: &OnlineConfig) -> Result<OnlineReport, EvalError> {
    let outcomes = (0..cfg.episodes)
        .into_par_iter()
        .map(|i| run_flat(env, episode_seed(cfg.seed, i), ex))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(outcomes))
}

/// Online evaluation of a trained policy with its own planner.
pub fn online_eval_policy(
    policy: &Policy,
    env: &EnvConfig,
    caps: &StepCaps,
    cfg: &OnlineConfig,
) -> Result<OnlineReport, EvalError> {
    match policy {
        Policy::Hierarchical { controller, executor } => {
            online_eval(Planner::Controller(controller), Actor::Executor(executor), env, caps, cfg)
        }
        Policy::Flat { executor } => online_eval_flat(executor, env, cfg),
    }
}
