//! Block coordinate ascent over segmentations, labels and parameters.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LabelingMode, TrainConfig, TrainMode};
use super::examples::{controller_examples, executor_examples, proposal_examples, Weighted};
use super::objective::{total_log_prob, ObjectiveError};
use crate::corpus::{build_inventory, Alignment, Dataset, Demonstration, Instruction};
use crate::labeling::{exact_label, label_segments};
use crate::models::{fit, ControllerModel, ExecutorModel, FitConfig, Inventory, ModelParams, ProposalModel};
use crate::segmentation::{demo_symbols, hmm_em_restarts, init_boundaries, segment_viterbi, HmmModel, SYMBOLS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Annotated-only fit before the first iteration.
    Init,
    Segmentation,
    Labeling,
    Update,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Segmentation => "segmentation",
            Phase::Labeling => "labeling",
            Phase::Update => "update",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodEntry {
    pub iteration: usize,
    pub phase: Phase,
    /// Unannotated term; absent while some unannotated demo has no labels yet.
    pub l: Option<f64>,
    pub l_ann: f64,
}

impl LikelihoodEntry {
    pub fn total(&self) -> Option<f64> {
        self.l.map(|l| l + self.l_ann)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub iteration: usize,
    pub phase: Phase,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub controller: ControllerModel,
    pub executor: ExecutorModel,
    pub proposal: ProposalModel,
    /// Every participating demo, annotated or not.
    pub imputed_alignments: BTreeMap<String, Alignment>,
    /// Unannotated demos only.
    pub imputed_labels: BTreeMap<String, Vec<Instruction>>,
    pub iteration: usize,
    pub likelihood_log: Vec<LikelihoodEntry>,
    /// Imputed labels after each iteration's labeling phase.
    pub label_history: Vec<(usize, BTreeMap<String, Vec<Instruction>>)>,
    pub hmm: Option<HmmModel>,
    /// Wall-clock seconds per phase; the only nondeterministic field.
    pub timings: Vec<PhaseTiming>,
}

impl TrainState {
    /// Equality on everything except timings.
    pub fn same_result(&self, other: &TrainState) -> bool {
        let strip = |s: &TrainState| TrainState {
            timings: Vec::new(),
            ..s.clone()
        };
        strip(self) == strip(other)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{phase} phase failed at iteration {iteration}: {message}")]
pub struct TrainError {
    pub phase: String,
    pub iteration: usize,
    pub message: String,
    /// State at the start of the failing phase.
    pub snapshot: Option<Box<TrainState>>,
}

fn fail(phase: Phase, iteration: usize, message: impl ToString, snapshot: Option<&TrainState>) -> TrainError {
    TrainError {
        phase: phase.name().to_string(),
        iteration,
        message: message.to_string(),
        snapshot: snapshot.map(|s| Box::new(s.clone())),
    }
}

struct Run<'a> {
    cfg: &'a TrainConfig,
    ann: &'a [Demonstration],
    unann: &'a [Demonstration],
}

impl Run<'_> {
    fn annotation(d: &Demonstration) -> &[Instruction] {
        d.annotation.as_deref().unwrap_or(&[])
    }

    fn labels_of<'s>(&self, st: &'s TrainState, d: &'s Demonstration) -> Option<&'s [Instruction]> {
        if d.is_annotated() {
            Some(Self::annotation(d))
        } else {
            st.imputed_labels.get(&d.id).map(Vec::as_slice)
        }
    }

    fn objective(&self, st: &TrainState) -> Result<(Option<f64>, f64), ObjectiveError> {
        let mut ann = Vec::with_capacity(self.ann.len());
        for d in self.ann {
            let a = st
                .imputed_alignments
                .get(&d.id)
                .ok_or_else(|| ObjectiveError::MissingAlignment(d.id.clone()))?;
            ann.push((d, Self::annotation(d), a));
        }
        let l_ann = total_log_prob(&st.controller, &st.executor, &ann)?;
        let mut un = Vec::with_capacity(self.unann.len());
        for d in self.unann {
            let (Some(a), Some(l)) = (st.imputed_alignments.get(&d.id), st.imputed_labels.get(&d.id)) else {
                return Ok((None, l_ann));
            };
            un.push((d, l.as_slice(), a));
        }
        Ok((Some(total_log_prob(&st.controller, &st.executor, &un)?), l_ann))
    }

    fn log(&self, st: &mut TrainState, iteration: usize, phase: Phase, started: Instant) -> Result<(), TrainError> {
        let (l, l_ann) = self.objective(st).map_err(|e| fail(phase, iteration, e, None))?;
        log::info!(
            "iteration {iteration} {}: L={} L_ann={l_ann:.6}",
            phase.name(),
            l.map_or("-".to_string(), |v| format!("{v:.6}"))
        );
        st.likelihood_log.push(LikelihoodEntry {
            iteration,
            phase,
            l,
            l_ann,
        });
        st.timings.push(PhaseTiming {
            iteration,
            phase,
            seconds: started.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    fn all(&self) -> impl Iterator<Item = &Demonstration> {
        self.ann.iter().chain(self.unann)
    }

    /// Refit all three models on the current labeled segmentations, warm-started.
    fn update(&self, st: &mut TrainState) -> Result<(), String> {
        let items: Vec<(&Demonstration, &[Instruction], &Alignment)> = self
            .all()
            .filter_map(|d| {
                let l = self.labels_of(st, d)?;
                Some((d, l, st.imputed_alignments.get(&d.id)?))
            })
            .collect();
        let per_demo = items
            .par_iter()
            .map(|(d, l, a)| {
                let seg = a.segmentation().map_err(|e| e.to_string())?;
                Ok((
                    controller_examples(&st.controller, d, l).map_err(|e| e.to_string())?,
                    executor_examples(d, &seg, l),
                    proposal_examples(&st.proposal, d, &seg, l).map_err(|e| e.to_string())?,
                ))
            })
            .collect::<Result<Vec<_>, String>>()?;
        let mut c_data: Vec<Weighted> = Vec::new();
        let mut e_data: Vec<Weighted> = Vec::new();
        let mut q_data: Vec<Weighted> = Vec::new();
        for (c, e, q) in per_demo {
            c_data.extend(c);
            e_data.extend(e);
            q_data.extend(q);
        }
        let run = |p: &ModelParams, data: &[Weighted], cfg: &FitConfig, name: &str| {
            let (p, rep) = fit(p, data, cfg).map_err(|e| format!("{name} fit: {e}"))?;
            log::debug!(
                "{name}: {} examples, {} epochs, objective {:.4} -> {:.4}",
                data.len(),
                rep.epochs_run,
                rep.initial_objective,
                rep.final_objective
            );
            Ok::<_, String>(p)
        };
        st.controller.params = run(&st.controller.params, &c_data, &self.cfg.controller, "controller")?;
        st.executor.params = run(&st.executor.params, &e_data, &self.cfg.executor, "executor")?;
        st.proposal.params = run(&st.proposal.params, &q_data, &self.cfg.proposal, "proposal")?;
        Ok(())
    }
}

fn check_inputs(ann: &[Demonstration], unann: &[Demonstration]) -> Result<(), String> {
    if ann.is_empty() {
        return Err("no annotated demonstrations".into());
    }
    let mut ids = HashSet::new();
    for d in ann.iter().chain(unann) {
        if !ids.insert(d.id.as_str()) {
            return Err(format!("duplicate demonstration id {}", d.id));
        }
        if d.is_empty() {
            return Err(format!("demonstration {} has no actions", d.id));
        }
    }
    for d in ann {
        let m = d.annotation.as_ref().map_or(0, Vec::len);
        if m == 0 || m > d.len() {
            return Err(format!("demonstration {} has {m} instructions for {} actions", d.id, d.len()));
        }
    }
    if let Some(d) = unann.iter().find(|d| d.is_annotated()) {
        return Err(format!("demonstration {} in the unannotated set carries an annotation", d.id));
    }
    Ok(())
}

/// Train controller, executor and proposal from annotated and unannotated
/// demonstrations. Deterministic in the inputs and `cfg.seed`.
pub fn sl3_train(unannotated: &Dataset, annotated: &Dataset, cfg: &TrainConfig) -> Result<TrainState, TrainError> {
    cfg.validate().map_err(|e| fail(Phase::Init, 0, e, None))?;
    let unann: &[Demonstration] = match cfg.mode {
        TrainMode::Sl3 => &unannotated.demos,
        TrainMode::NoLatent => &[],
    };
    let ann = &annotated.demos[..];
    check_inputs(ann, unann).map_err(|e| fail(Phase::Init, 0, e, None))?;
    let run = Run { cfg, ann, unann };

    // iteration 0: HMM boundaries for annotated demos, annotated-only fit
    let started = Instant::now();
    let all: Vec<Demonstration> = run.all().cloned().collect();
    let inventory = Inventory::new(build_inventory(&all));
    drop(all);
    let seqs: Vec<Vec<usize>> = run.all().map(demo_symbols).collect();
    let hmm = hmm_em_restarts(&seqs, SYMBOLS.len(), &cfg.hmm, cfg.seed)
        .map_err(|e| fail(Phase::Init, 0, e, None))?
        .model;
    let mut st = TrainState {
        controller: ControllerModel::new(inventory.clone(), cfg.controller.l2),
        executor: ExecutorModel::new(cfg.executor.l2),
        proposal: ProposalModel::new(inventory, cfg.proposal.l2),
        imputed_alignments: BTreeMap::new(),
        imputed_labels: BTreeMap::new(),
        iteration: 0,
        likelihood_log: Vec::new(),
        label_history: Vec::new(),
        hmm: Some(hmm.clone()),
        timings: Vec::new(),
    };
    let ann_init = ann
        .par_iter()
        .map(|d| {
            let m = Run::annotation(d).len();
            init_boundaries(d, &hmm, Some(m)).map(|s| (d.id.clone(), s.to_alignment()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| fail(Phase::Init, 0, e, Some(&st)))?;
    st.imputed_alignments.extend(ann_init.iter().cloned());
    run.update(&mut st).map_err(|e| fail(Phase::Init, 0, e, None))?;
    run.log(&mut st, 0, Phase::Init, started)?;

    for t in 1..=cfg.iterations {
        st.iteration = t;
        let prev_alignments = st.imputed_alignments.clone();
        let prev_labels = st.imputed_labels.clone();

        // segmentation
        let started = Instant::now();
        let snapshot = st.clone();
        let new: Vec<(String, Alignment)> = if t == 1 {
            let unann_init = unann
                .par_iter()
                .map(|d| {
                    let target = cfg.unannotated_init_budget.then(|| {
                        let plan = st.controller.decode(&d.goal, d.len());
                        plan.plan.len().clamp(1, d.len())
                    });
                    init_boundaries(d, &hmm, target).map(|s| (d.id.clone(), s.to_alignment()))
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(Phase::Segmentation, t, e, Some(&snapshot)))?;
            ann_init.iter().cloned().chain(unann_init).collect()
        } else {
            let demos: Vec<&Demonstration> = run.all().collect();
            demos
                .par_iter()
                .map(|d| {
                    let labels = run.labels_of(&st, d).unwrap_or(&[]);
                    segment_viterbi(d, labels, &st.executor).map(|(a, _)| (d.id.clone(), a))
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(Phase::Segmentation, t, e, Some(&snapshot)))?
        };
        st.imputed_alignments.extend(new);
        run.log(&mut st, t, Phase::Segmentation, started)?;

        // labeling
        if !unann.is_empty() {
            let started = Instant::now();
            let snapshot = st.clone();
            let labels = unann
                .par_iter()
                .map(|d| {
                    let a = &st.imputed_alignments[&d.id];
                    let l = match cfg.labeling {
                        LabelingMode::Amortized => label_segments(d, a, &st.proposal)?,
                        LabelingMode::Exact => {
                            exact_label(d, a, &st.controller, &st.executor, cfg.beam_per_segment)?.0
                        }
                    };
                    Ok((d.id.clone(), l))
                })
                .collect::<Result<Vec<_>, crate::labeling::LabelError>>()
                .map_err(|e| fail(Phase::Labeling, t, e, Some(&snapshot)))?;
            st.imputed_labels.extend(labels);
            st.label_history.push((t, st.imputed_labels.clone()));
            run.log(&mut st, t, Phase::Labeling, started)?;
        }

        // parameter update
        let started = Instant::now();
        let snapshot = st.clone();
        run.update(&mut st)
            .map_err(|e| fail(Phase::Update, t, e, Some(&snapshot)))?;
        run.log(&mut st, t, Phase::Update, started)?;

        if cfg.early_stop && t > 1 && st.imputed_alignments == prev_alignments && st.imputed_labels == prev_labels {
            log::info!("imputations unchanged at iteration {t}; stopping");
            break;
        }
    }
    Ok(st)
}

/// L and L_ann for a trained state; L is `None` while labels are missing.
pub fn objective(
    st: &TrainState,
    unannotated: &[Demonstration],
    annotated: &[Demonstration],
) -> Result<(Option<f64>, f64), ObjectiveError> {
    let cfg = TrainConfig::default();
    Run {
        cfg: &cfg,
        ann: annotated,
        unann: unannotated,
    }
    .objective(st)
}
