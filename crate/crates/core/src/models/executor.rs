//! Executor policy: actions conditioned on the current observation, the
//! previous action and a context (an instruction, or a goal for flat policies).

use std::collections::HashMap;
use std::sync::OnceLock;

use super::params::{argmax, FeatureVector, ModelError, ModelParams};
use crate::corpus::{
    Action, ActionKind, CellCode, Entity, Goal, Instruction, Object, Observation, Receptacle,
};

/// How a class refers to an entity: through a context slot or by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArgRef {
    Slot(u8),
    Named(Entity),
}

impl ArgRef {
    pub fn name(self) -> String {
        match self {
            ArgRef::Slot(k) => format!("s{k}"),
            ArgRef::Named(e) => e.name().to_string(),
        }
    }

    fn resolve(self, ctx: &ExecContext) -> Option<Entity> {
        match self {
            ArgRef::Slot(k) => ctx.args.get(k as usize).copied(),
            ArgRef::Named(e) => Some(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExecClass {
    Move(ActionKind),
    Obj(ActionKind, ArgRef),
    Put(ArgRef, ArgRef),
    Toggle(ArgRef),
    Teleport(ArgRef),
    Stop,
}

impl ExecClass {
    pub fn name(&self) -> String {
        match self {
            ExecClass::Move(k) => k.name().to_string(),
            ExecClass::Obj(k, r) => format!("{}:{}", k.name(), r.name()),
            ExecClass::Put(o, r) => format!("put:{}:{}", o.name(), r.name()),
            ExecClass::Toggle(r) => format!("toggle:{}", r.name()),
            ExecClass::Teleport(r) => format!("teleport:{}", r.name()),
            ExecClass::Stop => "stop".to_string(),
        }
    }
}

/// The fixed, context-relative executor class set.
pub struct ExecClassSpace {
    pub classes: Vec<ExecClass>,
    index: HashMap<ExecClass, usize>,
}

fn slots_and(named: impl Iterator<Item = Entity>) -> Vec<ArgRef> {
    let mut v = vec![ArgRef::Slot(0), ArgRef::Slot(1)];
    v.extend(named.map(ArgRef::Named));
    v
}

impl ExecClassSpace {
    fn build() -> Self {
        let obj_refs = slots_and(Object::ALL.iter().map(|&o| Entity::Object(o)));
        let rec_refs = slots_and(Receptacle::ALL.iter().map(|&r| Entity::Receptacle(r)));
        let mut classes: Vec<ExecClass> = ActionKind::MOVES.iter().map(|&k| ExecClass::Move(k)).collect();
        for k in [
            ActionKind::Pick,
            ActionKind::Slice,
            ActionKind::Heat,
            ActionKind::Cool,
            ActionKind::Clean,
        ] {
            classes.extend(obj_refs.iter().map(|&r| ExecClass::Obj(k, r)));
        }
        for &o in &obj_refs {
            classes.extend(rec_refs.iter().map(|&r| ExecClass::Put(o, r)));
        }
        classes.extend(
            slots_and(std::iter::once(Entity::Receptacle(Receptacle::Lamp)))
                .into_iter()
                .map(ExecClass::Toggle),
        );
        classes.extend(slots_and(Entity::all()).into_iter().map(ExecClass::Teleport));
        classes.push(ExecClass::Stop);
        let index = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        ExecClassSpace { classes, index }
    }

    pub fn get() -> &'static ExecClassSpace {
        static SPACE: OnceLock<ExecClassSpace> = OnceLock::new();
        SPACE.get_or_init(ExecClassSpace::build)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn stop(&self) -> usize {
        self.index[&ExecClass::Stop]
    }

    pub fn index_of(&self, c: &ExecClass) -> usize {
        self.index[c]
    }

    pub fn names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name()).collect()
    }

    /// Canonical class of an action: slots are preferred over names.
    pub fn class_of(&self, a: &Action, ctx: &ExecContext) -> usize {
        let r = |e: Entity| ctx.ref_of(e);
        let c = match a.kind {
            k if k.is_move() => ExecClass::Move(k),
            ActionKind::Stop => ExecClass::Stop,
            ActionKind::Put => ExecClass::Put(r(a.obj.unwrap().into()), r(a.recep.unwrap().into())),
            ActionKind::Toggle => ExecClass::Toggle(r(a.recep.unwrap().into())),
            ActionKind::Teleport => ExecClass::Teleport(r(a.entities()[0])),
            k => ExecClass::Obj(k, r(a.obj.unwrap().into())),
        };
        self.index[&c]
    }

    /// Concrete action of a class in a context. `Ok(None)` is STOP; `Err` means
    /// the class names a slot the context does not fill with a suitable entity.
    pub fn action_of(&self, class: usize, ctx: &ExecContext) -> Result<Option<Action>, ()> {
        let obj = |r: ArgRef| r.resolve(ctx).and_then(|e| e.as_object()).ok_or(());
        let rec = |r: ArgRef| r.resolve(ctx).and_then(|e| e.as_receptacle()).ok_or(());
        let a = match self.classes[class] {
            ExecClass::Stop => return Ok(None),
            ExecClass::Move(k) => Action::bare(k),
            ExecClass::Obj(k, r) => Action::on_object(k, obj(r)?),
            ExecClass::Put(o, r) => Action::put(obj(o)?, rec(r)?),
            ExecClass::Toggle(r) => Action::toggle(rec(r)?),
            ExecClass::Teleport(r) => Action::teleport(r.resolve(ctx).ok_or(())?),
        };
        a.validate().map_err(|_| ())?;
        Ok(Some(a))
    }
}

/// Conditioning context: a signature with entity mentions replaced by slots,
/// and the entities filling those slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExecContext {
    pub signature: String,
    pub args: Vec<Entity>,
}

impl ExecContext {
    pub fn from_instruction(ins: &Instruction) -> Self {
        let v = Goal {
            tokens: ins.tokens.clone(),
        }
        .view();
        ExecContext {
            signature: v.signature,
            args: v.entities,
        }
    }

    pub fn from_goal(g: &Goal) -> Self {
        let v = g.view();
        ExecContext {
            signature: v.signature,
            args: v.entities,
        }
    }

    pub fn ref_of(&self, e: Entity) -> ArgRef {
        match self.args.iter().take(2).position(|&x| x == e) {
            Some(k) => ArgRef::Slot(k as u8),
            None => ArgRef::Named(e),
        }
    }
}

const NUM_ENTITIES: usize = Object::ALL.len() + Receptacle::ALL.len();

fn entity_slot(e: Entity) -> usize {
    match e {
        Entity::Object(o) => o.index(),
        Entity::Receptacle(r) => Object::ALL.len() + r.index(),
    }
}

/// Everything the executor features read from an observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsSummary {
    nearest: [Option<(i32, i32)>; NUM_ENTITIES],
    pub blocked: u8,
    pub held: Option<(Object, u8)>,
}

impl ObsSummary {
    pub fn new(obs: &Observation) -> Self {
        let mut nearest: [Option<(i32, i32, i32)>; NUM_ENTITIES] = [None; NUM_ENTITIES];
        if let Some(side) = obs.side() {
            let r = (side / 2) as i32;
            for (i, &code) in obs.window.iter().enumerate() {
                if code == 0 {
                    continue;
                }
                let c = CellCode(code);
                let dy = (i / side) as i32 - r;
                let dx = (i % side) as i32 - r;
                let d = dx.abs() + dy.abs();
                let ents = [c.object().map(Entity::Object), c.receptacle().map(Entity::Receptacle)];
                for e in ents.into_iter().flatten() {
                    let slot = &mut nearest[entity_slot(e)];
                    if slot.is_none_or(|(bd, _, _)| d < bd) {
                        *slot = Some((d, dx, dy));
                    }
                }
            }
        }
        ObsSummary {
            nearest: nearest.map(|x| x.map(|(_, dx, dy)| (dx, dy))),
            blocked: obs.blocked_mask(),
            held: obs.held_code().and_then(|c| c.object().map(|o| (o, c.status()))),
        }
    }

    pub fn nearest(&self, e: Entity) -> Option<(i32, i32)> {
        self.nearest[entity_slot(e)]
    }
}

fn bucket(d: i32) -> &'static str {
    match d {
        i32::MIN..=-2 => "-2",
        -1 => "-1",
        0 => "0",
        1 => "1",
        _ => "2",
    }
}

/// Previous-action token relative to the context.
pub fn prev_token(prev: Option<&Action>, ctx: &ExecContext) -> String {
    match prev {
        None => "none".to_string(),
        Some(a) => {
            let space = ExecClassSpace::get();
            space.classes[space.class_of(a, ctx)].name()
        }
    }
}

pub fn featurize_summary(s: &ObsSummary, prev: Option<&Action>, ctx: &ExecContext) -> FeatureVector {
    let t = &ctx.signature;
    let p = prev_token(prev, ctx);
    let held_ref = s.held.map(|(o, _)| ctx.ref_of(o.into()).name());
    let held_ref = held_ref.as_deref().unwrap_or("none");
    let held = match s.held {
        Some((_, f)) => format!("{held_ref}/{f}"),
        None => "none".to_string(),
    };
    let mut fv = FeatureVector::with_capacity(6 + 3 * ctx.args.len());
    fv.on("b");
    fv.on(format!("t={t}"));
    fv.on(format!("t={t}|p={p}"));
    fv.on(format!("t={t}|h={held}"));
    fv.on(format!("t={t}|h={held}|p={p}"));
    for (k, &e) in ctx.args.iter().take(2).enumerate() {
        match s.nearest(e) {
            Some((dx, dy)) => {
                let d = format!("{},{}", bucket(dx), bucket(dy));
                fv.on(format!("t={t}|s{k}:d={d}"));
                fv.on(format!("t={t}|s{k}:d={d}|blk={}", s.blocked));
                fv.on(format!("t={t}|s{k}:d={d}|h={held_ref}"));
            }
            None => {
                fv.on(format!("t={t}|s{k}:absent"));
                fv.on(format!("t={t}|s{k}:absent|p={p}"));
            }
        }
    }
    fv
}

pub fn featurize_exec(obs: &Observation, prev: Option<&Action>, ctx: &ExecContext) -> FeatureVector {
    featurize_summary(&ObsSummary::new(obs), prev, ctx)
}

/// Class of a decision: an action or STOP.
pub fn target_class(a: Option<&Action>, ctx: &ExecContext) -> usize {
    let space = ExecClassSpace::get();
    match a {
        Some(a) => space.class_of(a, ctx),
        None => space.stop(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutorModel {
    pub params: ModelParams,
}

impl ExecutorModel {
    pub fn new(l2: f64) -> Self {
        ExecutorModel {
            params: ModelParams::new(ExecClassSpace::get().len(), l2),
        }
    }

    pub fn log_probs(&self, s: &ObsSummary, prev: Option<&Action>, ctx: &ExecContext) -> Vec<f64> {
        self.params.log_probs(&featurize_summary(s, prev, ctx))
    }

    /// `log π(a | obs, prev, ctx)`; `a = None` scores STOP.
    pub fn step_log_prob(
        &self,
        s: &ObsSummary,
        prev: Option<&Action>,
        ctx: &ExecContext,
        a: Option<&Action>,
    ) -> f64 {
        self.log_probs(s, prev, ctx)[target_class(a, ctx)]
    }

    /// Greedy decision; `Ok(None)` is STOP, `Err(class)` an unresolvable class.
    pub fn act(
        &self,
        s: &ObsSummary,
        prev: Option<&Action>,
        ctx: &ExecContext,
    ) -> Result<Option<Action>, usize> {
        let c = argmax(&self.log_probs(s, prev, ctx));
        ExecClassSpace::get().action_of(c, ctx).map_err(|_| c)
    }

    pub fn log_prob(&self, fv: &FeatureVector, class: usize) -> Result<f64, ModelError> {
        self.params.log_prob(fv, class)
    }
}

/// Sum of per-step log-probabilities of a segment executed under `ins`, plus
/// STOP scored at `post_obs` when `include_stop` is set. The previous action
/// is empty at the first step.
pub fn exec_sequence_log_prob(
    ex: &ExecutorModel,
    steps: &[(Observation, Action)],
    post_obs: &Observation,
    ins: &Instruction,
    include_stop: bool,
) -> f64 {
    let ctx = ExecContext::from_instruction(ins);
    let mut total = 0.0;
    let mut prev: Option<&Action> = None;
    for (o, a) in steps {
        total += ex.step_log_prob(&ObsSummary::new(o), prev, &ctx, Some(a));
        prev = Some(a);
    }
    if include_stop {
        total += ex.step_log_prob(&ObsSummary::new(post_obs), prev, &ctx, None);
    }
    total
}
