//! Templated subtask descriptions and the goal surface.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::entity::{Entity, Object, Receptacle};

/// The eight subtask categories used for per-category reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubtaskCategory {
    Clean,
    Cool,
    Heat,
    Pick,
    Put,
    Slice,
    Toggle,
    GoTo,
}

impl SubtaskCategory {
    pub const ALL: [SubtaskCategory; 8] = [
        SubtaskCategory::Clean,
        SubtaskCategory::Cool,
        SubtaskCategory::Heat,
        SubtaskCategory::Pick,
        SubtaskCategory::Put,
        SubtaskCategory::Slice,
        SubtaskCategory::Toggle,
        SubtaskCategory::GoTo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubtaskCategory::Clean => "Clean",
            SubtaskCategory::Cool => "Cool",
            SubtaskCategory::Heat => "Heat",
            SubtaskCategory::Pick => "Pick",
            SubtaskCategory::Put => "Put",
            SubtaskCategory::Slice => "Slice",
            SubtaskCategory::Toggle => "Toggle",
            SubtaskCategory::GoTo => "GoTo",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SubtaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstructionError {
    #[error("template {template} does not accept arguments [{args}]")]
    BadArgs { template: SubtaskCategory, args: String },
    #[error("tokens `{found}` do not match rendering `{expected}`")]
    TokenMismatch { expected: String, found: String },
}

/// A subtask description: a template plus entity arguments. The token
/// sequence is always the rendering of `(template, args)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInstruction")]
pub struct Instruction {
    pub template: SubtaskCategory,
    pub args: Vec<Entity>,
    pub tokens: Vec<String>,
}

#[derive(Deserialize)]
struct RawInstruction {
    template: SubtaskCategory,
    args: Vec<Entity>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
}

impl TryFrom<RawInstruction> for Instruction {
    type Error = InstructionError;

    fn try_from(raw: RawInstruction) -> Result<Self, Self::Error> {
        let ins = Instruction::new(raw.template, raw.args)?;
        if let Some(tokens) = raw.tokens {
            if tokens != ins.tokens {
                return Err(InstructionError::TokenMismatch {
                    expected: ins.tokens.join(" "),
                    found: tokens.join(" "),
                });
            }
        }
        Ok(ins)
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

impl Instruction {
    pub fn new(template: SubtaskCategory, args: Vec<Entity>) -> Result<Self, InstructionError> {
        use SubtaskCategory::*;
        let bad = || InstructionError::BadArgs {
            template,
            args: args.iter().map(|e| e.name()).collect::<Vec<_>>().join(","),
        };
        let text = match (template, args.as_slice()) {
            (GoTo, [Entity::Object(o)]) => format!("find the {}", o.name()),
            (GoTo, [Entity::Receptacle(r)]) => format!("go to the {}", r.name()),
            (Pick, [Entity::Object(o)]) => format!("pick up the {}", o.name()),
            (Put, [Entity::Object(o), Entity::Receptacle(r)]) if r.accepts_objects() => {
                format!("put the {} in the {}", o.name(), r.name())
            }
            (Slice, [Entity::Object(o)]) => format!("slice the {}", o.name()),
            (Heat, [Entity::Object(o)]) => format!("heat the {}", o.name()),
            (Cool, [Entity::Object(o)]) => format!("cool the {}", o.name()),
            (Clean, [Entity::Object(o)]) => format!("clean the {}", o.name()),
            (Toggle, [Entity::Receptacle(Receptacle::Lamp)]) => "turn on the lamp".to_string(),
            _ => return Err(bad()),
        };
        Ok(Instruction {
            template,
            args,
            tokens: words(&text),
        })
    }

    pub fn goto(e: impl Into<Entity>) -> Self {
        Instruction::new(SubtaskCategory::GoTo, vec![e.into()]).expect("goto takes any entity")
    }

    pub fn on_object(template: SubtaskCategory, o: Object) -> Self {
        Instruction::new(template, vec![Entity::Object(o)]).expect("single-object template")
    }

    pub fn put(o: Object, r: Receptacle) -> Self {
        Instruction::new(SubtaskCategory::Put, vec![o.into(), r.into()])
            .expect("put into a receptacle that accepts objects")
    }

    pub fn toggle_lamp() -> Self {
        Instruction::new(SubtaskCategory::Toggle, vec![Receptacle::Lamp.into()]).unwrap()
    }

    pub fn category(&self) -> SubtaskCategory {
        self.template
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn object(&self) -> Option<Object> {
        self.args.iter().find_map(|e| e.as_object())
    }

    pub fn receptacle(&self) -> Option<Receptacle> {
        self.args.iter().find_map(|e| e.as_receptacle())
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Every instruction the template grammar produces over the given entities,
/// in a stable order (category, then argument order).
pub fn grammar_instantiations(objects: &[Object], receptacles: &[Receptacle]) -> Vec<Instruction> {
    let mut objs = objects.to_vec();
    objs.sort();
    objs.dedup();
    let mut recs = receptacles.to_vec();
    recs.sort();
    recs.dedup();
    let mut out = Vec::new();
    for cat in SubtaskCategory::ALL {
        match cat {
            SubtaskCategory::GoTo => {
                out.extend(objs.iter().map(|&o| Instruction::goto(o)));
                out.extend(recs.iter().map(|&r| Instruction::goto(r)));
            }
            SubtaskCategory::Put => {
                for &o in &objs {
                    for &r in recs.iter().filter(|r| r.accepts_objects()) {
                        out.push(Instruction::put(o, r));
                    }
                }
            }
            SubtaskCategory::Toggle => {
                if recs.contains(&Receptacle::Lamp) {
                    out.push(Instruction::toggle_lamp());
                }
            }
            _ => out.extend(objs.iter().map(|&o| Instruction::on_object(cat, o))),
        }
    }
    out
}

/// Goal surface tokens.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Goal {
    pub tokens: Vec<String>,
}

/// A goal with its entity mentions abstracted into numbered slots,
/// e.g. `put a sliced <0> in the <1>` with entities `[apple, fridge]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GoalView {
    pub signature: String,
    pub entities: Vec<Entity>,
}

impl Goal {
    pub fn from_text(s: &str) -> Self {
        Goal { tokens: words(s) }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn view(&self) -> GoalView {
        let mut entities: Vec<Entity> = Vec::new();
        let mut sig = Vec::with_capacity(self.tokens.len());
        for t in &self.tokens {
            match t.parse::<Entity>() {
                Ok(e) => {
                    let k = match entities.iter().position(|&x| x == e) {
                        Some(k) => k,
                        None => {
                            entities.push(e);
                            entities.len() - 1
                        }
                    };
                    sig.push(format!("<{k}>"));
                }
                Err(_) => sig.push(t.clone()),
            }
        }
        GoalView {
            signature: sig.join(" "),
            entities,
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}
