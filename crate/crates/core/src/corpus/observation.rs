//! Egocentric observations and the integer cell-descriptor code.
//!
//! A cell descriptor packs into a `u16`:
//!
//! | bits  | meaning                                   |
//! |-------|-------------------------------------------|
//! | 0     | wall / out of bounds                      |
//! | 1..=3 | receptacle (catalog index + 1, 0 = none)  |
//! | 4..=6 | object (catalog index + 1, 0 = none)      |
//! | 7..=11| status flags, see [`flags`]               |

use serde::{Deserialize, Serialize};

use super::entity::{Entity, Object, Receptacle};

pub mod flags {
    pub const SLICED: u8 = 1;
    pub const HEATED: u8 = 1 << 1;
    pub const COOLED: u8 = 1 << 2;
    pub const CLEANED: u8 = 1 << 3;
    pub const TOGGLED: u8 = 1 << 4;
    pub const MASK: u8 = 0x1f;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct CellCode(pub u16);

impl CellCode {
    pub const EMPTY: CellCode = CellCode(0);
    pub const WALL: CellCode = CellCode(1);

    pub fn new(recep: Option<Receptacle>, obj: Option<Object>, status: u8) -> Self {
        let r = recep.map_or(0, |r| r.index() as u16 + 1);
        let o = obj.map_or(0, |o| o.index() as u16 + 1);
        CellCode((r << 1) | (o << 4) | (((status & flags::MASK) as u16) << 7))
    }

    pub fn is_wall(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn receptacle(self) -> Option<Receptacle> {
        let r = ((self.0 >> 1) & 0x7) as usize;
        if r == 0 {
            None
        } else {
            Receptacle::from_index(r - 1)
        }
    }

    pub fn object(self) -> Option<Object> {
        let o = ((self.0 >> 4) & 0x7) as usize;
        if o == 0 {
            None
        } else {
            Object::from_index(o - 1)
        }
    }

    pub fn status(self) -> u8 {
        ((self.0 >> 7) as u8) & flags::MASK
    }

    /// Cells the agent cannot enter.
    pub fn is_blocked(self) -> bool {
        self.is_wall() || self.receptacle().is_some() || self.object().is_some()
    }

    pub fn contains(self, e: Entity) -> bool {
        match e {
            Entity::Object(o) => self.object() == Some(o),
            Entity::Receptacle(r) => self.receptacle() == Some(r),
        }
    }

    pub fn is_valid(self) -> bool {
        if self.0 >> 12 != 0 {
            return false;
        }
        let r = (self.0 >> 1) & 0x7;
        let o = (self.0 >> 4) & 0x7;
        if self.is_wall() && self.0 != 1 {
            return false;
        }
        (r as usize) <= Receptacle::ALL.len() && (o as usize) <= Object::ALL.len()
    }
}

/// What the agent sees before acting: a `(2r+1)²` row-major window centred on
/// the agent plus the descriptor of whatever it is holding.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub window: Vec<u16>,
    #[serde(default)]
    pub held: Option<u16>,
}

impl Observation {
    /// Window side length, `2r + 1`. Returns `None` if the window is not a square of odd side.
    pub fn side(&self) -> Option<usize> {
        let n = self.window.len();
        let s = (n as f64).sqrt().round() as usize;
        (s * s == n && s % 2 == 1).then_some(s)
    }

    pub fn radius(&self) -> Option<usize> {
        self.side().map(|s| s / 2)
    }

    /// Cell at offset `(dx, dy)` from the agent; out-of-window offsets read as walls.
    pub fn cell(&self, dx: i32, dy: i32) -> CellCode {
        let Some(side) = self.side() else {
            return CellCode::WALL;
        };
        let r = (side / 2) as i32;
        if dx.abs() > r || dy.abs() > r {
            return CellCode::WALL;
        }
        let idx = ((dy + r) as usize) * side + (dx + r) as usize;
        CellCode(self.window[idx])
    }

    pub fn held_code(&self) -> Option<CellCode> {
        self.held.map(CellCode)
    }

    pub fn held_object(&self) -> Option<Object> {
        self.held_code().and_then(|c| c.object())
    }

    /// Offset of the nearest window cell containing `e` (Manhattan distance,
    /// ties broken in row-major order).
    pub fn locate(&self, e: Entity) -> Option<(i32, i32)> {
        let side = self.side()?;
        let r = (side / 2) as i32;
        let mut best: Option<(i32, (i32, i32))> = None;
        for (i, &code) in self.window.iter().enumerate() {
            if !CellCode(code).contains(e) {
                continue;
            }
            let dy = (i / side) as i32 - r;
            let dx = (i % side) as i32 - r;
            let d = dx.abs() + dy.abs();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, (dx, dy)));
            }
        }
        best.map(|(_, off)| off)
    }

    /// Blocked status of the four neighbours in up, down, left, right order.
    pub fn blocked_mask(&self) -> u8 {
        let mut m = 0;
        for (bit, (dx, dy)) in [(0, -1), (0, 1), (-1, 0), (1, 0)].into_iter().enumerate() {
            if self.cell(dx, dy).is_blocked() {
                m |= 1 << bit;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_packing() {
        let c = CellCode::new(
            Some(Receptacle::Fridge),
            Some(Object::Egg),
            flags::COOLED | flags::SLICED,
        );
        assert_eq!(c.receptacle(), Some(Receptacle::Fridge));
        assert_eq!(c.object(), Some(Object::Egg));
        assert_eq!(c.status(), flags::COOLED | flags::SLICED);
        assert!(!c.is_wall());
        assert!(c.is_valid());
        assert!(CellCode::WALL.is_blocked());
        assert!(!CellCode::EMPTY.is_blocked());
    }

    #[test]
    fn locate_nearest() {
        // 3x3 window, apple at top-left and right.
        let apple = CellCode::new(None, Some(Object::Apple), 0).0;
        let obs = Observation {
            window: vec![apple, 0, 0, 0, 0, apple, 0, 0, 0],
            held: None,
        };
        assert_eq!(obs.radius(), Some(1));
        assert_eq!(obs.locate(Entity::Object(Object::Apple)), Some((1, 0)));
        assert_eq!(obs.locate(Entity::Object(Object::Egg)), None);
        assert_eq!(obs.blocked_mask(), 0b1000);
    }
}
