mod common;

use std::path::Path;

use serde_json::Value;

use skillparse::corpus::{split_annotated, Dataset, EvalAccess};
use skillparse::evaluation::{
    evaluate, offline_subtask_accuracy, online_eval, online_eval_policy, run_arm, run_baseline, segmentation_accuracy,
    Actor, BaselineKind, Corpora, EvalError, ExperimentConfig, MetricsReport, OfflinePolicy, OnlineConfig, Planner,
    Policy, StepCaps,
};
use skillparse::gridworld::{generate_corpus, EnvConfig};
use skillparse::models::checkpoint::executor_checkpoint;
use skillparse::models::{ControllerModel, ExecutorModel, FitConfig, Inventory};
use skillparse::corpus::{build_inventory, Alignment};
use skillparse::training::TrainConfig;

fn test_corpus(n: usize) -> Dataset {
    generate_corpus(&EnvConfig::default(), n, 1_000_000).unwrap()
}

fn uniform_policy(d: &Dataset) -> Policy {
    Policy::Hierarchical {
        controller: ControllerModel::new(Inventory::new(build_inventory(&d.demos)), 0.0),
        executor: ExecutorModel::new(0.0),
    }
}

#[test]
fn expert_replay_is_perfect_offline() {
    let test = test_corpus(40);
    let r = offline_subtask_accuracy(OfflinePolicy::ExpertReplay, &test, &EvalAccess::grant()).unwrap();
    for (c, rate) in &r.per_category {
        if rate.den > 0 {
            assert_eq!(rate.num, rate.den, "{c}");
        }
    }
    assert_eq!(r.average.value(), Some(1.0));
}

#[test]
fn oracle_plan_with_expert_reaches_every_goal() {
    let train = test_corpus(40);
    let caps = StepCaps::from_dataset(&train, &EvalAccess::grant());
    let cfg = OnlineConfig {
        episodes: 40,
        ..OnlineConfig::default()
    };
    let r = online_eval(Planner::Oracle, Actor::Expert, &EnvConfig::default(), &caps, &cfg).unwrap();
    assert_eq!(r.end_to_end.value(), Some(1.0));
    assert_eq!(r.subtask.average.value(), Some(1.0));
    assert_eq!(r.truncated, 0);
}

#[test]
fn uniform_policy_scores_near_zero() {
    let test = test_corpus(40);
    let p = uniform_policy(&test);
    let off = offline_subtask_accuracy(OfflinePolicy::Learned(&p), &test, &EvalAccess::grant()).unwrap();
    assert!(off.average.or_zero() < 0.05, "{:?}", off.average);
    let caps = StepCaps::from_dataset(&test, &EvalAccess::grant());
    let cfg = OnlineConfig {
        episodes: 20,
        ..OnlineConfig::default()
    };
    let on = online_eval_policy(&p, &EnvConfig::default(), &caps, &cfg).unwrap();
    assert!(on.end_to_end.or_zero() < 0.05);
}

#[test]
fn online_eval_is_deterministic() {
    let d = test_corpus(20);
    let (ann, unann) = split_annotated(&d, 1.0, 0);
    let cfg = TrainConfig {
        iterations: 1,
        ..TrainConfig::default()
    };
    let t = run_baseline(BaselineKind::Sl3, &unann, &ann, &cfg).unwrap();
    let caps = StepCaps::from_dataset(&d, &EvalAccess::grant());
    let oc = OnlineConfig {
        episodes: 12,
        ..OnlineConfig::default()
    };
    let env = EnvConfig::default();
    let a = online_eval_policy(&t.policy, &env, &caps, &oc).unwrap();
    let b = online_eval_policy(&t.policy, &env, &caps, &oc).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| online_eval_policy(&t.policy, &env, &caps, &oc).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn flat_baseline_ignores_annotations() {
    let d = test_corpus(16);
    let cfg = TrainConfig {
        executor: FitConfig {
            epochs: 40,
            ..FitConfig::default()
        },
        ..TrainConfig::default()
    };
    let (ann, unann) = split_annotated(&d, 0.5, 0);
    let a = run_baseline(BaselineKind::Seq2seq, &unann, &ann, &cfg).unwrap();
    let (ann, unann) = split_annotated(&d, 1.0, 0);
    let b = run_baseline(BaselineKind::Seq2seq, &unann, &ann, &cfg).unwrap();
    assert!(a.policy.is_flat());
    assert_eq!(
        executor_checkpoint(a.policy.executor()),
        executor_checkpoint(b.policy.executor())
    );
}

#[test]
fn offline_requires_ground_truth() {
    let d = common::truncate(&common::expert(3), 8);
    let test = Dataset::new(vec![d], None);
    let err = offline_subtask_accuracy(OfflinePolicy::ExpertReplay, &test, &EvalAccess::grant()).unwrap_err();
    assert!(matches!(err, EvalError::MissingGroundTruth(_)), "{err:?}");
}

#[test]
fn segmentation_accuracy_cases() {
    let a = Alignment::new(vec![1, 1, 2, 2, 3]).unwrap();
    assert_eq!(segmentation_accuracy(&a, &a).unwrap().value(), Some(1.0));
    let b = Alignment::new(vec![1, 1, 1, 2, 3]).unwrap();
    let r = segmentation_accuracy(&a, &b).unwrap();
    assert_eq!((r.num, r.den), (4, 5));
    let c = Alignment::new(vec![1, 1, 2]).unwrap();
    assert!(matches!(segmentation_accuracy(&a, &c), Err(EvalError::LengthMismatch { .. })));
}

fn tiny_config() -> ExperimentConfig {
    let fit = FitConfig {
        epochs: 30,
        ..FitConfig::default()
    };
    ExperimentConfig {
        train_size: 16,
        test_size: 6,
        train: TrainConfig {
            iterations: 1,
            controller: fit.clone(),
            executor: fit.clone(),
            proposal: fit,
            ..TrainConfig::default()
        },
        online: OnlineConfig {
            episodes: 4,
            ..OnlineConfig::default()
        },
        fraction: 0.5,
        ..ExperimentConfig::default()
    }
}

/// Replace every leaf with its JSON type so the shape can be compared
/// without pinning floating-point values.
fn shape(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
        Value::Array(a) => Value::Array(a.iter().map(shape).collect()),
        Value::Null => Value::String("null".into()),
        Value::Bool(_) => Value::String("bool".into()),
        Value::Number(n) if n.is_u64() => Value::String("integer".into()),
        Value::Number(_) => Value::String("number".into()),
        Value::String(_) => Value::String("string".into()),
    }
}

#[test]
fn report_schema_matches_golden_file() {
    let cfg = tiny_config();
    let corpora = Corpora::generate(&cfg).unwrap();
    let (trained, report) = run_arm(BaselineKind::Sl3, &corpora, &cfg, cfg.fraction).unwrap();
    let again = evaluate(&trained, &corpora, &cfg, cfg.fraction).unwrap();
    assert_eq!(report, again);

    let json = serde_json::to_value(&report).unwrap();
    let back: MetricsReport = serde_json::from_value(json.clone()).unwrap();
    assert_eq!(back, report);

    let got = serde_json::to_string_pretty(&shape(&json)).unwrap() + "\n";
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_schema.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden file; run with UPDATE_GOLDEN=1 to create");
    assert_eq!(got, want);
}
