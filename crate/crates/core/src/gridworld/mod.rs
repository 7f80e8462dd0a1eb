//! Partially observed household gridworld and its scripted expert.

pub mod config;
pub mod expert;
pub mod goal;
pub mod state;

pub use config::{ConfigError, EnvConfig, TemplateWeights};
pub use expert::{
    distance_field, expert_act, expert_demo, expert_segment, generate_corpus, navigation_path,
    reset, GenerationError,
};
pub use goal::{goal_success, subtask_success, GoalSpec, GoalTemplate, SubtaskSpec};
pub use state::{Location, Pos, StepInfo, WorldState};

use crate::corpus::{Action, Observation};

/// A running episode: configuration, current state and goal.
#[derive(Clone, Debug)]
pub struct Episode {
    pub cfg: EnvConfig,
    pub state: WorldState,
    pub goal: GoalSpec,
    pub steps: usize,
}

impl Episode {
    pub fn reset(cfg: &EnvConfig, seed: u64) -> Result<Self, GenerationError> {
        let (state, goal) = reset(cfg, seed)?;
        Ok(Episode {
            cfg: cfg.clone(),
            state,
            goal,
            steps: 0,
        })
    }

    pub fn step(&mut self, a: &Action) -> StepInfo {
        let (next, info) = self.state.step(a);
        self.state = next;
        self.steps += 1;
        info
    }

    pub fn observe(&self) -> Observation {
        self.state.observe(self.cfg.radius)
    }

    pub fn goal_success(&self) -> bool {
        goal_success(&self.state, &self.goal)
    }
}
