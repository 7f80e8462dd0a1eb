//! End-to-end experiments: corpora, training arms, reports, sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::baselines::{run_baseline, BaselineError, BaselineKind, Trained};
use super::metrics::{segmentation_accuracy, CategoryRates, EvalError, Rate};
use super::offline::{offline_subtask_accuracy, OfflinePolicy};
use super::online::{online_eval_policy, OnlineConfig};
use super::policy::StepCaps;
use crate::corpus::{split_annotated, Dataset, EvalAccess};
use crate::gridworld::{generate_corpus, EnvConfig, GenerationError};
use crate::training::TrainConfig;

pub const OFFLINE_NOTE: &str =
    "offline accuracy is exact match of the decoded action sequence, object and receptacle arguments included";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub train_size: usize,
    pub test_size: usize,
    /// First generator seed of the training corpus.
    pub train_seed: u64,
    /// First generator seed of the held-out offline test corpus.
    pub test_seed: u64,
    pub fraction: f64,
    pub train: TrainConfig,
    pub online: OnlineConfig,
    /// Skip closed-loop rollouts.
    pub offline_only: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvConfig::default(),
            train_size: 1000,
            test_size: 200,
            train_seed: 0,
            test_seed: 1_000_000,
            fraction: 0.1,
            train: TrainConfig::default(),
            online: OnlineConfig::default(),
            offline_only: false,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn from_toml_str(s: &str) -> Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub arm: String,
    /// Annotation fraction the arm was trained with, when known.
    pub fraction: Option<f64>,
    pub note: String,
    pub offline_subtask_acc: CategoryRates,
    pub online_subtask_sr: Option<CategoryRates>,
    pub end_to_end_sr: Option<Rate>,
    /// Imputed training alignments against ground truth (hierarchical arms).
    pub seg_acc: Option<Rate>,
    pub config_digest: String,
    pub seed: u64,
}

impl MetricsReport {
    pub fn offline_average(&self) -> f64 {
        self.offline_subtask_acc.average.or_zero()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Config(String),
}

/// Training and test corpora plus rollout caps for one environment.
#[derive(Clone, Debug)]
pub struct Corpora {
    pub train: Dataset,
    pub test: Dataset,
    pub caps: StepCaps,
}

impl Corpora {
    pub fn generate(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let train = generate_corpus(&cfg.env, cfg.train_size, cfg.train_seed)?;
        let test = generate_corpus(&cfg.env, cfg.test_size, cfg.test_seed)?;
        let caps = StepCaps::from_dataset(&train, &EvalAccess::grant());
        Ok(Corpora { train, test, caps })
    }

    /// Annotated and unannotated training subsets for a fraction.
    pub fn split(&self, fraction: f64, seed: u64) -> (Dataset, Dataset) {
        split_annotated(&self.train, fraction, seed)
    }
}

/// Agreement of a trained state's imputed alignments with ground truth,
/// pooled over every demo it aligned.
pub fn imputed_segmentation_accuracy(trained: &Trained, train: &Dataset) -> Result<Option<Rate>, EvalError> {
    let Some(st) = &trained.state else {
        return Ok(None);
    };
    let access = EvalAccess::grant();
    let mut total = Rate::default();
    for d in &train.demos {
        let (Some(a), Some(gt)) = (st.imputed_alignments.get(&d.id), d.gt_alignment(&access)) else {
            continue;
        };
        total.merge(segmentation_accuracy(a, gt)?);
    }
    Ok(Some(total))
}

pub fn evaluate(
    trained: &Trained,
    corpora: &Corpora,
    cfg: &ExperimentConfig,
    fraction: f64,
) -> Result<MetricsReport, ExperimentError> {
    let access = EvalAccess::grant();
    let offline = offline_subtask_accuracy(OfflinePolicy::Learned(&trained.policy), &corpora.test, &access)?;
    let online = if cfg.offline_only {
        None
    } else {
        Some(online_eval_policy(&trained.policy, &cfg.env, &corpora.caps, &cfg.online)?)
    };
    Ok(MetricsReport {
        arm: trained.kind.name().to_string(),
        fraction: Some(fraction),
        note: OFFLINE_NOTE.to_string(),
        offline_subtask_acc: offline,
        online_subtask_sr: online.as_ref().map(|o| o.subtask.clone()),
        end_to_end_sr: online.map(|o| o.end_to_end),
        seg_acc: imputed_segmentation_accuracy(trained, &corpora.train)?,
        config_digest: cfg.digest(),
        seed: cfg.seed,
    })
}

/// Train one arm at one annotation fraction and evaluate it.
pub fn run_arm(
    kind: BaselineKind,
    corpora: &Corpora,
    cfg: &ExperimentConfig,
    fraction: f64,
) -> Result<(Trained, MetricsReport), ExperimentError> {
    let (ann, unann) = corpora.split(fraction, cfg.seed);
    let train_cfg = TrainConfig {
        seed: cfg.seed,
        ..cfg.train.clone()
    };
    let trained = run_baseline(kind, &unann, &ann, &train_cfg)?;
    let report = evaluate(&trained, corpora, cfg, fraction)?;
    Ok((trained, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub report: MetricsReport,
}

/// sl3 and no_latent at every fraction with shared seeds.
pub fn supervision_sweep(
    fractions: &[f64],
    corpora: &Corpora,
    cfg: &ExperimentConfig,
) -> Result<Vec<SweepRow>, ExperimentError> {
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(ExperimentError::Config(format!("fraction {f} outside (0, 1]")));
    }
    let mut rows = Vec::new();
    for &f in fractions {
        for kind in [BaselineKind::Sl3, BaselineKind::NoLatent] {
            let (_, report) = run_arm(kind, corpora, cfg, f)?;
            rows.push(SweepRow { fraction: f, report });
        }
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

pub const CSV_HEADER: &str = "fraction,arm,offline_acc,online_subtask_sr,end_to_end_sr,seg_acc";

pub fn report_csv_row(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.fraction.map_or(String::new(), |f| f.to_string()),
        r.arm,
        opt(r.offline_subtask_acc.average.value()),
        opt(r.online_subtask_sr.as_ref().and_then(|o| o.average.value())),
        opt(r.end_to_end_sr.and_then(|x| x.value())),
        opt(r.seg_acc.and_then(|x| x.value())),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&report_csv_row(&r.report));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub corpus: String,
    pub mean_demo_length: f64,
    pub sl3: MetricsReport,
    pub seq2seq: MetricsReport,
    /// Offline accuracy of sl3 minus seq2seq.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportAblation {
    pub default: AblationArm,
    pub teleport: AblationArm,
    pub length_ratio: f64,
}

pub fn mean_demo_length(d: &Dataset) -> f64 {
    if d.demos.is_empty() {
        return 0.0;
    }
    d.demos.iter().map(|x| x.len()).sum::<usize>() as f64 / d.demos.len() as f64
}

/// Train sl3 and seq2seq on the walking corpus and on its teleport
/// counterpart (same seeds), and compare the hierarchy gaps.
pub fn teleport_ablation(cfg: &ExperimentConfig) -> Result<TeleportAblation, ExperimentError> {
    let arms = [("default", cfg.clone()), ("teleport", ExperimentConfig {
        env: cfg.env.teleport(),
        ..cfg.clone()
    })];
    let mut out = Vec::new();
    for (name, c) in arms {
        let corpora = Corpora::generate(&c)?;
        let pair: Vec<MetricsReport> = [BaselineKind::Sl3, BaselineKind::Seq2seq]
            .par_iter()
            .map(|&k| run_arm(k, &corpora, &c, c.fraction).map(|x| x.1))
            .collect::<Result<_, _>>()?;
        let [sl3, seq2seq]: [MetricsReport; 2] = pair.try_into().expect("two arms");
        out.push(AblationArm {
            corpus: name.to_string(),
            mean_demo_length: mean_demo_length(&corpora.train),
            gap: sl3.offline_average() - seq2seq.offline_average(),
            sl3,
            seq2seq,
        });
    }
    let teleport = out.pop().unwrap();
    let default = out.pop().unwrap();
    Ok(TeleportAblation {
        length_ratio: default.mean_demo_length / teleport.mean_demo_length.max(f64::MIN_POSITIVE),
        default,
        teleport,
    })
}
