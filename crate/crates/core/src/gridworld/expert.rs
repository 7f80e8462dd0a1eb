//! Breadth-first navigation, the scripted expert, episode reset and corpus generation.

use std::collections::VecDeque;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::EnvConfig;
use super::goal::{subtask_success, GoalSpec, GoalTemplate, SubtaskSpec};
use super::state::{
    add, adjacent, Location, ObjectState, Pos, ReceptacleState, WorldState, NEIGHBOURS,
};
use crate::corpus::{
    Action, ActionKind, Alignment, Dataset, Demonstration, Entity, Object, Observation,
    Receptacle, Step, SubtaskCategory,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no goal template is satisfiable with the configured objects and receptacles")]
    NoFeasibleGoal,
    #[error("no valid layout for seed {seed} after {retries} attempts")]
    Exhausted { seed: u64, retries: usize },
    #[error("expert failed subtask `{subtask}`: {reason}")]
    ExpertFailed { subtask: String, reason: String },
}

/// BFS distance (in moves) from every cell to the nearest free cell adjacent
/// to `target`. Row-major, `None` for unreachable or blocked cells.
pub fn distance_field(s: &WorldState, target: Pos) -> Vec<Option<u32>> {
    let (w, h) = (s.width, s.height);
    let idx = |p: Pos| p.1 as usize * w + p.0 as usize;
    let mut dist = vec![None; w * h];
    let mut queue = VecDeque::new();
    for d in NEIGHBOURS {
        let p = add(target, d);
        if s.in_bounds(p) && !s.is_blocked(p) && dist[idx(p)].is_none() {
            dist[idx(p)] = Some(0);
            queue.push_back(p);
        }
    }
    while let Some(p) = queue.pop_front() {
        let dp = dist[idx(p)].unwrap();
        for d in NEIGHBOURS {
            let q = add(p, d);
            if s.in_bounds(q) && !s.is_blocked(q) && dist[idx(q)].is_none() {
                dist[idx(q)] = Some(dp + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// Shortest move sequence ending next to `target`, preferring up, down, left,
/// right at every step. Empty if already adjacent; `None` if unreachable.
pub fn navigation_path(s: &WorldState, target: Entity) -> Option<Vec<ActionKind>> {
    let tp = s.entity_pos(target)?;
    if adjacent(tp, s.agent) {
        return Some(Vec::new());
    }
    let field = distance_field(s, tp);
    let w = s.width;
    let at = |p: Pos| field[p.1 as usize * w + p.0 as usize];
    let mut d = at(s.agent)?;
    let mut p = s.agent;
    let mut path = Vec::with_capacity(d as usize);
    while d > 0 {
        let (k, q) = ActionKind::MOVES
            .iter()
            .map(|&k| (k, add(p, k.delta().unwrap())))
            .find(|&(_, q)| s.in_bounds(q) && at(q) == Some(d - 1))?;
        path.push(k);
        p = q;
        d -= 1;
    }
    Some(path)
}

/// Actions the expert takes to complete one subtask from `s`.
pub fn expert_segment(
    s: &WorldState,
    t: &SubtaskSpec,
    teleport: bool,
) -> Result<Vec<Action>, GenerationError> {
    let fail = |reason: &str| GenerationError::ExpertFailed {
        subtask: t.text(),
        reason: reason.to_string(),
    };
    let obj = || t.object().ok_or_else(|| fail("missing object"));
    Ok(match t.template {
        SubtaskCategory::GoTo => {
            let target = *t.args.first().ok_or_else(|| fail("missing target"))?;
            let path = navigation_path(s, target).ok_or_else(|| fail("unreachable"))?;
            if path.is_empty() {
                return Err(fail("already adjacent"));
            }
            if teleport {
                vec![Action::teleport(target)]
            } else {
                path.into_iter().map(Action::bare).collect()
            }
        }
        SubtaskCategory::Pick => vec![Action::on_object(ActionKind::Pick, obj()?)],
        SubtaskCategory::Put => vec![Action::put(
            obj()?,
            t.receptacle().ok_or_else(|| fail("missing receptacle"))?,
        )],
        SubtaskCategory::Slice => vec![Action::on_object(ActionKind::Slice, obj()?)],
        SubtaskCategory::Heat => vec![Action::on_object(ActionKind::Heat, obj()?)],
        SubtaskCategory::Cool => vec![Action::on_object(ActionKind::Cool, obj()?)],
        SubtaskCategory::Clean => vec![Action::on_object(ActionKind::Clean, obj()?)],
        SubtaskCategory::Toggle => vec![Action::toggle(
            t.receptacle().ok_or_else(|| fail("missing receptacle"))?,
        )],
    })
}

/// One expert decision for an online rollout: the next action, or `None` (STOP).
/// `taken` is the number of actions already executed for this subtask.
pub fn expert_act(s: &WorldState, t: &SubtaskSpec, taken: usize, teleport: bool) -> Option<Action> {
    if t.template == SubtaskCategory::GoTo {
        if teleport {
            return (taken == 0).then(|| Action::teleport(t.args[0]));
        }
        return navigation_path(s, t.args[0])
            .and_then(|p| p.first().copied())
            .map(Action::bare);
    }
    if taken > 0 {
        return None;
    }
    expert_segment(s, t, false).ok().and_then(|v| v.first().copied())
}

/// Expert rollout of a whole plan.
pub struct ExpertRun {
    pub steps: Vec<Step>,
    pub final_obs: Observation,
    pub segment_lengths: Vec<usize>,
    pub final_state: WorldState,
}

fn run_expert(
    cfg: &EnvConfig,
    start: &WorldState,
    goal: &GoalSpec,
    record: bool,
) -> Result<ExpertRun, GenerationError> {
    let mut s = start.clone();
    let mut steps = Vec::new();
    let mut lens = Vec::with_capacity(goal.subtasks.len());
    for t in &goal.subtasks {
        let before = s.clone();
        let acts = expert_segment(&s, t, cfg.teleport_navigation)?;
        for a in &acts {
            if record {
                steps.push(Step {
                    obs: s.observe(cfg.radius),
                    act: *a,
                });
            }
            s = s.step(a).0;
        }
        if !subtask_success(&before, &s, t) {
            return Err(GenerationError::ExpertFailed {
                subtask: t.text(),
                reason: "end condition not reached".into(),
            });
        }
        lens.push(acts.len());
    }
    Ok(ExpertRun {
        final_obs: s.observe(cfg.radius),
        steps,
        segment_lengths: lens,
        final_state: s,
    })
}

fn sample_goal(cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> Result<GoalSpec, GenerationError> {
    let objs = &Object::ALL[..cfg.num_objects];
    let recs = &Receptacle::ALL[..cfg.num_receptacles];
    let targets: Vec<Object> = objs.iter().copied().filter(|&o| o != Object::Knife).collect();
    let feasible = |t: GoalTemplate| {
        let (need, knife) = t.requirements();
        !targets.is_empty()
            && need.iter().all(|r| recs.contains(r))
            && (!knife || objs.contains(&Object::Knife))
            && (!t.has_destination() || t.destinations().iter().any(|r| recs.contains(r)))
    };
    let weights: Vec<f64> = GoalTemplate::ALL
        .iter()
        .map(|&t| {
            if feasible(t) {
                cfg.template_weights.get(t)
            } else {
                0.0
            }
        })
        .collect();
    let dist = WeightedIndex::new(&weights).map_err(|_| GenerationError::NoFeasibleGoal)?;
    let template = GoalTemplate::ALL[dist.sample(rng)];
    let object = *targets.choose(rng).unwrap();
    let destination = if template.has_destination() {
        let allowed: Vec<Receptacle> = template
            .destinations()
            .into_iter()
            .filter(|r| recs.contains(r))
            .collect();
        Some(*allowed.choose(rng).unwrap())
    } else {
        None
    };
    GoalSpec::new(template, object, destination)
        .map_err(|e| GenerationError::Config(e.to_string()))
}

fn sample_layout(cfg: &EnvConfig, seed: u64, rng: &mut ChaCha8Rng) -> WorldState {
    let mut cells: Vec<Pos> = (0..cfg.height as i32)
        .flat_map(|y| (0..cfg.width as i32).map(move |x| (x, y)))
        .collect();
    let k = cfg.num_receptacles + cfg.num_objects + 1;
    let (chosen, _) = cells.partial_shuffle(rng, k);
    let chosen = chosen.to_vec();
    let receptacles = Receptacle::ALL[..cfg.num_receptacles]
        .iter()
        .zip(&chosen)
        .map(|(&r, &pos)| ReceptacleState {
            receptacle: r,
            pos,
            status: 0,
        })
        .collect();
    let objects = Object::ALL[..cfg.num_objects]
        .iter()
        .zip(&chosen[cfg.num_receptacles..])
        .map(|(&o, &p)| ObjectState {
            object: o,
            loc: Location::Floor(p),
            status: 0,
        })
        .collect();
    WorldState {
        width: cfg.width,
        height: cfg.height,
        agent: chosen[k - 1],
        objects,
        receptacles,
        rng_seed: seed,
    }
}

/// Sample an initial state and a goal the expert can achieve within the
/// episode budget. Deterministic in `(cfg, seed)`.
pub fn reset(cfg: &EnvConfig, seed: u64) -> Result<(WorldState, GoalSpec), GenerationError> {
    cfg.validate()
        .map_err(|e| GenerationError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let goal = sample_goal(cfg, &mut rng)?;
    for _ in 0..cfg.max_retries {
        let s = sample_layout(cfg, seed, &mut rng);
        // the layout draw must not depend on whether earlier attempts failed
        let _ = rng.gen::<u32>();
        match run_expert(cfg, &s, &goal, false) {
            Ok(run) if run.segment_lengths.iter().sum::<usize>() <= cfg.max_episode_len => {
                return Ok((s, goal))
            }
            _ => continue,
        }
    }
    Err(GenerationError::Exhausted {
        seed,
        retries: cfg.max_retries,
    })
}

pub fn demo_id(seed: u64) -> String {
    format!("demo-{seed:06}")
}

/// Expert demonstration for `(cfg, seed)` with its annotation and ground-truth alignment.
pub fn expert_demo(cfg: &EnvConfig, seed: u64) -> Result<Demonstration, GenerationError> {
    let (s, goal) = reset(cfg, seed)?;
    let run = run_expert(cfg, &s, &goal, true)?;
    let mut align = Vec::with_capacity(run.steps.len());
    for (j, &len) in run.segment_lengths.iter().enumerate() {
        align.extend(std::iter::repeat_n(j + 1, len));
    }
    Ok(
        Demonstration::new(demo_id(seed), goal.surface.clone(), run.steps, run.final_obs)
            .with_annotation(goal.subtasks.clone())
            .with_gt_alignment(Alignment(align)),
    )
}

/// `n` expert demonstrations for seeds `first_seed..first_seed + n`, in seed order.
pub fn generate_corpus(cfg: &EnvConfig, n: usize, first_seed: u64) -> Result<Dataset, GenerationError> {
    let demos = (0..n as u64)
        .into_par_iter()
        .map(|i| expert_demo(cfg, first_seed + i))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = serde_json::to_value(cfg).ok();
    Ok(Dataset::new(demos, grid))
}
