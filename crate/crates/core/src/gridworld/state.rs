//! World state, dynamics and the egocentric observation function.

use serde::{Deserialize, Serialize};

use crate::corpus::{flags, Action, ActionKind, CellCode, Entity, Object, Observation, Receptacle};

pub type Pos = (i32, i32);

/// Up, down, left, right.
pub const NEIGHBOURS: [Pos; 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Floor(Pos),
    In(Receptacle),
    Held,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectState {
    pub object: Object,
    pub loc: Location,
    pub status: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReceptacleState {
    pub receptacle: Receptacle,
    pub pos: Pos,
    pub status: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub width: usize,
    pub height: usize,
    pub agent: Pos,
    pub objects: Vec<ObjectState>,
    pub receptacles: Vec<ReceptacleState>,
    pub rng_seed: u64,
}

/// Outcome flag of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepInfo {
    Ok,
    NoOp,
}

pub fn add(p: Pos, d: Pos) -> Pos {
    (p.0 + d.0, p.1 + d.1)
}

pub fn adjacent(a: Pos, b: Pos) -> bool {
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

impl WorldState {
    pub fn in_bounds(&self, p: Pos) -> bool {
        p.0 >= 0 && p.1 >= 0 && (p.0 as usize) < self.width && (p.1 as usize) < self.height
    }

    pub fn object(&self, o: Object) -> Option<&ObjectState> {
        self.objects.iter().find(|s| s.object == o)
    }

    fn object_mut(&mut self, o: Object) -> Option<&mut ObjectState> {
        self.objects.iter_mut().find(|s| s.object == o)
    }

    pub fn receptacle(&self, r: Receptacle) -> Option<&ReceptacleState> {
        self.receptacles.iter().find(|s| s.receptacle == r)
    }

    pub fn held(&self) -> Option<Object> {
        self.objects
            .iter()
            .find(|s| s.loc == Location::Held)
            .map(|s| s.object)
    }

    /// Grid cell an entity occupies; `None` if absent or held.
    pub fn entity_pos(&self, e: Entity) -> Option<Pos> {
        match e {
            Entity::Receptacle(r) => self.receptacle(r).map(|s| s.pos),
            Entity::Object(o) => match self.object(o)?.loc {
                Location::Floor(p) => Some(p),
                Location::In(r) => self.receptacle(r).map(|s| s.pos),
                Location::Held => None,
            },
        }
    }

    pub fn is_blocked(&self, p: Pos) -> bool {
        !self.in_bounds(p)
            || self.receptacles.iter().any(|r| r.pos == p)
            || self
                .objects
                .iter()
                .any(|o| o.loc == Location::Floor(p))
    }

    fn near(&self, e: Entity) -> bool {
        self.entity_pos(e).is_some_and(|p| adjacent(p, self.agent))
    }

    pub fn cell_code(&self, p: Pos) -> CellCode {
        if !self.in_bounds(p) {
            return CellCode::WALL;
        }
        if let Some(r) = self.receptacles.iter().find(|r| r.pos == p) {
            // a receptacle shows the first contained object in catalog order
            let inside = Object::ALL.iter().find_map(|&o| {
                self.object(o)
                    .filter(|s| s.loc == Location::In(r.receptacle))
                    .copied()
            });
            return match inside {
                Some(s) => CellCode::new(Some(r.receptacle), Some(s.object), s.status | r.status),
                None => CellCode::new(Some(r.receptacle), None, r.status),
            };
        }
        if let Some(s) = self.objects.iter().find(|o| o.loc == Location::Floor(p)) {
            return CellCode::new(None, Some(s.object), s.status);
        }
        CellCode::EMPTY
    }

    pub fn observe(&self, radius: usize) -> Observation {
        let r = radius as i32;
        let mut window = Vec::with_capacity((2 * radius + 1).pow(2));
        for dy in -r..=r {
            for dx in -r..=r {
                window.push(self.cell_code(add(self.agent, (dx, dy))).0);
            }
        }
        let held = self
            .objects
            .iter()
            .find(|s| s.loc == Location::Held)
            .map(|s| CellCode::new(None, Some(s.object), s.status).0);
        Observation { window, held }
    }

    /// Pure transition: returns the successor and whether anything changed.
    pub fn step(&self, a: &Action) -> (WorldState, StepInfo) {
        let mut s = self.clone();
        let ok = s.apply(a);
        (s, if ok { StepInfo::Ok } else { StepInfo::NoOp })
    }

    fn apply(&mut self, a: &Action) -> bool {
        if a.validate().is_err() {
            return false;
        }
        let held = self.held();
        match a.kind {
            k if k.is_move() => {
                let next = add(self.agent, k.delta().unwrap());
                if self.is_blocked(next) {
                    return false;
                }
                self.agent = next;
                true
            }
            ActionKind::Pick => {
                let o = a.obj.unwrap();
                if held.is_some() || !self.near(o.into()) {
                    return false;
                }
                self.object_mut(o).unwrap().loc = Location::Held;
                true
            }
            ActionKind::Put => {
                let (o, r) = (a.obj.unwrap(), a.recep.unwrap());
                if held != Some(o) || !r.accepts_objects() || !self.near(r.into()) {
                    return false;
                }
                self.object_mut(o).unwrap().loc = Location::In(r);
                true
            }
            ActionKind::Slice => {
                let o = a.obj.unwrap();
                if held != Some(Object::Knife) || o == Object::Knife || !self.near(o.into()) {
                    return false;
                }
                self.object_mut(o).unwrap().status |= flags::SLICED;
                true
            }
            ActionKind::Heat | ActionKind::Cool | ActionKind::Clean => {
                let o = a.obj.unwrap();
                let (r, f) = match a.kind {
                    ActionKind::Heat => (Receptacle::Stove, flags::HEATED),
                    ActionKind::Cool => (Receptacle::Fridge, flags::COOLED),
                    _ => (Receptacle::Sink, flags::CLEANED),
                };
                if held != Some(o) || !self.near(r.into()) {
                    return false;
                }
                self.object_mut(o).unwrap().status |= f;
                true
            }
            ActionKind::Toggle => {
                let r = a.recep.unwrap();
                if r != Receptacle::Lamp || !self.near(r.into()) {
                    return false;
                }
                self.receptacles
                    .iter_mut()
                    .find(|x| x.receptacle == r)
                    .unwrap()
                    .status |= flags::TOGGLED;
                true
            }
            ActionKind::Teleport => {
                let target = a.entities()[0];
                match super::expert::navigation_path(self, target) {
                    Some(path) => {
                        for m in path {
                            self.agent = add(self.agent, m.delta().unwrap());
                        }
                        true
                    }
                    None => false,
                }
            }
            ActionKind::Stop => false,
            _ => unreachable!(),
        }
    }
}
