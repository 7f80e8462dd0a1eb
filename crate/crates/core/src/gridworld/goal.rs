//! Goal templates, their subtask plans and success predicates.

use serde::{Deserialize, Serialize};

use super::state::{adjacent, Location, WorldState};
use crate::corpus::{flags, Entity, Goal, Instruction, Object, Receptacle, SubtaskCategory};

/// A subtask of a goal plan: a category with entity arguments. Shares its
/// representation with [`Instruction`].
pub type SubtaskSpec = Instruction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalTemplate {
    PickPlace,
    Slice,
    HeatPlace,
    CoolPlace,
    CleanPlace,
    Examine,
    SlicePlace,
}

impl GoalTemplate {
    pub const ALL: [GoalTemplate; 7] = [
        GoalTemplate::PickPlace,
        GoalTemplate::Slice,
        GoalTemplate::HeatPlace,
        GoalTemplate::CoolPlace,
        GoalTemplate::CleanPlace,
        GoalTemplate::Examine,
        GoalTemplate::SlicePlace,
    ];

    /// Whether the template names a destination receptacle.
    pub fn has_destination(self) -> bool {
        !matches!(self, GoalTemplate::Slice | GoalTemplate::Examine)
    }

    /// Receptacles the template needs besides its destination, and the knife requirement.
    pub fn requirements(self) -> (Vec<Receptacle>, bool) {
        match self {
            GoalTemplate::PickPlace => (vec![], false),
            GoalTemplate::Slice => (vec![], true),
            GoalTemplate::HeatPlace => (vec![Receptacle::Stove], false),
            GoalTemplate::CoolPlace => (vec![Receptacle::Fridge], false),
            GoalTemplate::CleanPlace => (vec![Receptacle::Sink], false),
            GoalTemplate::Examine => (vec![Receptacle::Lamp], false),
            GoalTemplate::SlicePlace => (vec![Receptacle::Table], true),
        }
    }

    /// Destinations allowed for this template.
    pub fn destinations(self) -> Vec<Receptacle> {
        let excluded = match self {
            GoalTemplate::HeatPlace => Some(Receptacle::Stove),
            GoalTemplate::CoolPlace => Some(Receptacle::Fridge),
            GoalTemplate::CleanPlace => Some(Receptacle::Sink),
            GoalTemplate::SlicePlace => Some(Receptacle::Table),
            _ => None,
        };
        Receptacle::ALL
            .iter()
            .copied()
            .filter(|r| r.accepts_objects() && Some(*r) != excluded)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoalSpec {
    pub template: GoalTemplate,
    pub object: Object,
    pub destination: Option<Receptacle>,
    pub subtasks: Vec<SubtaskSpec>,
    pub surface: Goal,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("goal template {template:?} cannot take object {object:?} and destination {destination:?}")]
pub struct BadGoal {
    pub template: GoalTemplate,
    pub object: Object,
    pub destination: Option<Receptacle>,
}

impl GoalSpec {
    pub fn new(
        template: GoalTemplate,
        object: Object,
        destination: Option<Receptacle>,
    ) -> Result<Self, BadGoal> {
        use SubtaskCategory as C;
        let err = BadGoal {
            template,
            object,
            destination,
        };
        if object == Object::Knife || destination.is_some() != template.has_destination() {
            return Err(err);
        }
        if let Some(r) = destination {
            if !template.destinations().contains(&r) {
                return Err(err);
            }
        }
        let x = object;
        let o = x.name();
        let on = Instruction::on_object;
        let (surface, subtasks) = match (template, destination) {
            (GoalTemplate::PickPlace, Some(r)) => (
                format!("put the {o} in the {}", r.name()),
                vec![Instruction::goto(x), on(C::Pick, x), Instruction::goto(r), Instruction::put(x, r)],
            ),
            (GoalTemplate::Slice, None) => (
                format!("slice the {o}"),
                vec![
                    Instruction::goto(Object::Knife),
                    on(C::Pick, Object::Knife),
                    Instruction::goto(x),
                    on(C::Slice, x),
                ],
            ),
            (GoalTemplate::HeatPlace | GoalTemplate::CoolPlace | GoalTemplate::CleanPlace, Some(r)) => {
                let (adj, via, cat) = match template {
                    GoalTemplate::HeatPlace => ("heated", Receptacle::Stove, C::Heat),
                    GoalTemplate::CoolPlace => ("cooled", Receptacle::Fridge, C::Cool),
                    _ => ("clean", Receptacle::Sink, C::Clean),
                };
                (
                    format!("put a {adj} {o} in the {}", r.name()),
                    vec![
                        Instruction::goto(x),
                        on(C::Pick, x),
                        Instruction::goto(via),
                        on(cat, x),
                        Instruction::goto(r),
                        Instruction::put(x, r),
                    ],
                )
            }
            (GoalTemplate::Examine, None) => (
                format!("examine the {o} under the lamp"),
                vec![
                    Instruction::goto(x),
                    on(C::Pick, x),
                    Instruction::goto(Receptacle::Lamp),
                    Instruction::toggle_lamp(),
                ],
            ),
            (GoalTemplate::SlicePlace, Some(r)) => (
                format!("put a sliced {o} in the {}", r.name()),
                vec![
                    Instruction::goto(Object::Knife),
                    on(C::Pick, Object::Knife),
                    Instruction::goto(x),
                    on(C::Slice, x),
                    Instruction::goto(Receptacle::Table),
                    Instruction::put(Object::Knife, Receptacle::Table),
                    Instruction::goto(x),
                    on(C::Pick, x),
                    Instruction::goto(r),
                    Instruction::put(x, r),
                ],
            ),
            _ => return Err(err),
        };
        Ok(GoalSpec {
            template,
            object,
            destination,
            subtasks,
            surface: Goal::from_text(&surface),
        })
    }

    /// Subtasks whose end condition must still hold when the episode ends.
    pub fn persistent_subtasks(&self) -> Vec<&SubtaskSpec> {
        self.subtasks
            .iter()
            .enumerate()
            .filter(|(i, t)| match t.template {
                SubtaskCategory::GoTo => false,
                SubtaskCategory::Pick => {
                    let o = t.object();
                    !self.subtasks[i + 1..]
                        .iter()
                        .any(|u| u.template == SubtaskCategory::Put && u.object() == o)
                }
                _ => true,
            })
            .map(|(_, t)| t)
            .collect()
    }
}

/// Terminal condition of a non-navigation subtask.
fn holds(s: &WorldState, t: &SubtaskSpec) -> bool {
    let flag = |o: Option<Object>, f: u8| {
        o.and_then(|o| s.object(o))
            .is_some_and(|st| st.status & f != 0)
    };
    match t.template {
        SubtaskCategory::GoTo => t.args.first().is_some_and(|&e| near(s, e)),
        SubtaskCategory::Pick => s.held().is_some() && s.held() == t.object(),
        SubtaskCategory::Put => match (t.object(), t.receptacle()) {
            (Some(o), Some(r)) => s.object(o).is_some_and(|st| st.loc == Location::In(r)),
            _ => false,
        },
        SubtaskCategory::Slice => flag(t.object(), flags::SLICED),
        SubtaskCategory::Heat => flag(t.object(), flags::HEATED),
        SubtaskCategory::Cool => flag(t.object(), flags::COOLED),
        SubtaskCategory::Clean => flag(t.object(), flags::CLEANED),
        SubtaskCategory::Toggle => t
            .receptacle()
            .and_then(|r| s.receptacle(r))
            .is_some_and(|st| st.status & flags::TOGGLED != 0),
    }
}

fn near(s: &WorldState, e: Entity) -> bool {
    s.entity_pos(e).is_some_and(|p| adjacent(p, s.agent))
}

pub fn goal_success(s: &WorldState, g: &GoalSpec) -> bool {
    g.persistent_subtasks().into_iter().all(|t| holds(s, t))
}

/// Whether executing a subtask from `before` reached its end condition in `after`.
pub fn subtask_success(_before: &WorldState, after: &WorldState, t: &SubtaskSpec) -> bool {
    holds(after, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_plan() {
        let g = GoalSpec::new(GoalTemplate::Slice, Object::Apple, None).unwrap();
        assert_eq!(g.surface.text(), "slice the apple");
        let texts: Vec<_> = g.subtasks.iter().map(|t| t.text()).collect();
        assert_eq!(
            texts,
            ["find the knife", "pick up the knife", "find the apple", "slice the apple"]
        );
    }

    #[test]
    fn persistent_conditions() {
        let g = GoalSpec::new(GoalTemplate::SlicePlace, Object::Egg, Some(Receptacle::Fridge))
            .unwrap();
        assert_eq!(g.subtasks.len(), 10);
        let p: Vec<_> = g.persistent_subtasks().iter().map(|t| t.text()).collect();
        assert_eq!(
            p,
            [
                "slice the egg",
                "put the knife in the table",
                "put the egg in the fridge"
            ]
        );
        let g = GoalSpec::new(GoalTemplate::Examine, Object::Egg, None).unwrap();
        let p: Vec<_> = g.persistent_subtasks().iter().map(|t| t.text()).collect();
        assert_eq!(p, ["pick up the egg", "turn on the lamp"]);
    }

    #[test]
    fn rejects_bad_args() {
        assert!(GoalSpec::new(GoalTemplate::HeatPlace, Object::Egg, Some(Receptacle::Stove)).is_err());
        assert!(GoalSpec::new(GoalTemplate::Slice, Object::Knife, None).is_err());
        assert!(GoalSpec::new(GoalTemplate::PickPlace, Object::Egg, None).is_err());
    }
}
