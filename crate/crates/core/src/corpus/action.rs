use std::fmt;

use serde::{Deserialize, Serialize};

use super::entity::{Entity, Object, Receptacle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Up,
    Down,
    Left,
    Right,
    Pick,
    Put,
    Slice,
    Heat,
    Cool,
    Clean,
    Toggle,
    Teleport,
    Stop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 13] = [
        ActionKind::Up,
        ActionKind::Down,
        ActionKind::Left,
        ActionKind::Right,
        ActionKind::Pick,
        ActionKind::Put,
        ActionKind::Slice,
        ActionKind::Heat,
        ActionKind::Cool,
        ActionKind::Clean,
        ActionKind::Toggle,
        ActionKind::Teleport,
        ActionKind::Stop,
    ];

    pub const MOVES: [ActionKind; 4] = [
        ActionKind::Up,
        ActionKind::Down,
        ActionKind::Left,
        ActionKind::Right,
    ];

    pub fn is_move(self) -> bool {
        matches!(
            self,
            ActionKind::Up | ActionKind::Down | ActionKind::Left | ActionKind::Right
        )
    }

    /// Kinds that act on a single object.
    pub fn is_object_verb(self) -> bool {
        matches!(
            self,
            ActionKind::Pick
                | ActionKind::Slice
                | ActionKind::Heat
                | ActionKind::Cool
                | ActionKind::Clean
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Up => "up",
            ActionKind::Down => "down",
            ActionKind::Left => "left",
            ActionKind::Right => "right",
            ActionKind::Pick => "pick",
            ActionKind::Put => "put",
            ActionKind::Slice => "slice",
            ActionKind::Heat => "heat",
            ActionKind::Cool => "cool",
            ActionKind::Clean => "clean",
            ActionKind::Toggle => "toggle",
            ActionKind::Teleport => "teleport",
            ActionKind::Stop => "stop",
        }
    }

    /// Unit displacement `(dx, dy)` for movement kinds; `y` grows downward.
    pub fn delta(self) -> Option<(i32, i32)> {
        match self {
            ActionKind::Up => Some((0, -1)),
            ActionKind::Down => Some((0, 1)),
            ActionKind::Left => Some((-1, 0)),
            ActionKind::Right => Some((1, 0)),
            _ => None,
        }
    }
}

/// A low-level action with its optional arguments.
///
/// Argument conventions: object verbs and `put` carry `obj`; `put` and `toggle`
/// carry `recep`; `teleport` carries exactly one of the two (its destination).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj: Option<Object>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recep: Option<Receptacle>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed action {action}: {reason}")]
pub struct MalformedAction {
    pub action: String,
    pub reason: &'static str,
}

impl Action {
    pub fn new(kind: ActionKind, obj: Option<Object>, recep: Option<Receptacle>) -> Self {
        Action { kind, obj, recep }
    }

    pub fn bare(kind: ActionKind) -> Self {
        Action::new(kind, None, None)
    }

    pub fn on_object(kind: ActionKind, obj: Object) -> Self {
        Action::new(kind, Some(obj), None)
    }

    pub fn put(obj: Object, recep: Receptacle) -> Self {
        Action::new(ActionKind::Put, Some(obj), Some(recep))
    }

    pub fn toggle(recep: Receptacle) -> Self {
        Action::new(ActionKind::Toggle, None, Some(recep))
    }

    pub fn teleport(target: Entity) -> Self {
        match target {
            Entity::Object(o) => Action::new(ActionKind::Teleport, Some(o), None),
            Entity::Receptacle(r) => Action::new(ActionKind::Teleport, None, Some(r)),
        }
    }

    pub fn stop() -> Self {
        Action::bare(ActionKind::Stop)
    }

    /// The entity arguments in canonical order (object first).
    pub fn entities(&self) -> Vec<Entity> {
        let mut out = Vec::with_capacity(2);
        if let Some(o) = self.obj {
            out.push(Entity::Object(o));
        }
        if let Some(r) = self.recep {
            out.push(Entity::Receptacle(r));
        }
        out
    }

    pub fn validate(&self) -> Result<(), MalformedAction> {
        let bad = |reason| {
            Err(MalformedAction {
                action: self.to_string(),
                reason,
            })
        };
        match self.kind {
            k if k.is_move() || k == ActionKind::Stop => {
                if self.obj.is_some() || self.recep.is_some() {
                    return bad("movement and stop take no arguments");
                }
            }
            k if k.is_object_verb() => {
                if self.obj.is_none() || self.recep.is_some() {
                    return bad("object verbs take exactly one object");
                }
            }
            ActionKind::Put => {
                if self.obj.is_none() || self.recep.is_none() {
                    return bad("put takes an object and a receptacle");
                }
            }
            ActionKind::Toggle => {
                if self.obj.is_some() || self.recep.is_none() {
                    return bad("toggle takes a receptacle");
                }
            }
            ActionKind::Teleport => {
                if self.obj.is_some() == self.recep.is_some() {
                    return bad("teleport takes exactly one destination");
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self.entities();
        if args.is_empty() {
            f.write_str(self.kind.name())
        } else {
            let names: Vec<_> = args.iter().map(|e| e.name()).collect();
            write!(f, "{}({})", self.kind.name(), names.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Action::bare(ActionKind::Up).validate().is_ok());
        assert!(Action::on_object(ActionKind::Pick, Object::Apple)
            .validate()
            .is_ok());
        assert!(Action::put(Object::Apple, Receptacle::Fridge).validate().is_ok());
        assert!(Action::bare(ActionKind::Pick).validate().is_err());
        assert!(Action::new(ActionKind::Up, Some(Object::Egg), None)
            .validate()
            .is_err());
        assert!(Action::new(
            ActionKind::Teleport,
            Some(Object::Egg),
            Some(Receptacle::Sink)
        )
        .validate()
        .is_err());
    }

    #[test]
    fn display() {
        assert_eq!(
            Action::put(Object::Apple, Receptacle::Fridge).to_string(),
            "put(apple,fridge)"
        );
        assert_eq!(Action::bare(ActionKind::Left).to_string(), "left");
    }

    #[test]
    fn json_shape() {
        let a = Action::on_object(ActionKind::Slice, Object::Tomato);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"kind":"slice","obj":"tomato"}"#);
        let back: Action = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }
}
