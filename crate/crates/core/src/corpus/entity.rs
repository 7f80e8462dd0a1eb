//! Closed catalogs of movable objects and fixed receptacles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Movable object. The knife is the only tool; every other object can be a goal target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Object {
    Apple,
    Bread,
    Egg,
    Lettuce,
    Potato,
    Tomato,
    Knife,
}

impl Object {
    pub const ALL: [Object; 7] = [
        Object::Apple,
        Object::Bread,
        Object::Egg,
        Object::Lettuce,
        Object::Potato,
        Object::Tomato,
        Object::Knife,
    ];

    /// Objects that can appear as a goal target (everything but the knife).
    pub const TARGETS: [Object; 6] = [
        Object::Apple,
        Object::Bread,
        Object::Egg,
        Object::Lettuce,
        Object::Potato,
        Object::Tomato,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Object> {
        Object::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Object::Apple => "apple",
            Object::Bread => "bread",
            Object::Egg => "egg",
            Object::Lettuce => "lettuce",
            Object::Potato => "potato",
            Object::Tomato => "tomato",
            Object::Knife => "knife",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receptacle {
    Table,
    Fridge,
    Stove,
    Sink,
    Lamp,
}

impl Receptacle {
    pub const ALL: [Receptacle; 5] = [
        Receptacle::Table,
        Receptacle::Fridge,
        Receptacle::Stove,
        Receptacle::Sink,
        Receptacle::Lamp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Receptacle> {
        Receptacle::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Receptacle::Table => "table",
            Receptacle::Fridge => "fridge",
            Receptacle::Stove => "stove",
            Receptacle::Sink => "sink",
            Receptacle::Lamp => "lamp",
        }
    }

    /// Whether objects can be put into this receptacle. Lamps only toggle.
    pub fn accepts_objects(self) -> bool {
        self != Receptacle::Lamp
    }
}

/// Anything an instruction or action can refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Object(Object),
    Receptacle(Receptacle),
}

impl Entity {
    pub fn name(self) -> &'static str {
        match self {
            Entity::Object(o) => o.name(),
            Entity::Receptacle(r) => r.name(),
        }
    }

    pub fn as_object(self) -> Option<Object> {
        match self {
            Entity::Object(o) => Some(o),
            Entity::Receptacle(_) => None,
        }
    }

    pub fn as_receptacle(self) -> Option<Receptacle> {
        match self {
            Entity::Receptacle(r) => Some(r),
            Entity::Object(_) => None,
        }
    }

    /// Every catalog entity, objects first.
    pub fn all() -> impl Iterator<Item = Entity> {
        Object::ALL
            .iter()
            .map(|&o| Entity::Object(o))
            .chain(Receptacle::ALL.iter().map(|&r| Entity::Receptacle(r)))
    }
}

impl From<Object> for Entity {
    fn from(o: Object) -> Self {
        Entity::Object(o)
    }
}

impl From<Receptacle> for Entity {
    fn from(r: Receptacle) -> Self {
        Entity::Receptacle(r)
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown entity `{0}`")]
pub struct UnknownEntity(pub String);

impl FromStr for Entity {
    type Err = UnknownEntity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Entity::all()
            .find(|e| e.name() == s)
            .ok_or_else(|| UnknownEntity(s.to_string()))
    }
}

impl Serialize for Entity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Entity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Entity::all() {
            assert_eq!(e.name().parse::<Entity>().unwrap(), e);
        }
        assert!("spoon".parse::<Entity>().is_err());
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = Entity::all().map(|e| e.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), Object::ALL.len() + Receptacle::ALL.len());
    }
}
