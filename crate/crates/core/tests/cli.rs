use std::path::Path;
use std::process::Command;

use skillparse::cli::main_with_args;

const TINY: &str = r#"
train_size = 12
test_size = 4
offline_only = true

[train]
iterations = 1

[train.controller]
epochs = 30

[train.executor]
epochs = 30

[train.proposal]
epochs = 30

[online]
episodes = 3
"#;

fn cli(args: &[&str]) -> i32 {
    let mut v = vec!["skillparse"];
    v.extend_from_slice(args);
    main_with_args(v)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_train_eval_segment_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let data = dir.join("data");
    assert_eq!(cli(&["gen", "--n", "16", "--out", s(&data)]), 0);
    assert_eq!(cli(&["gen", "--n", "4", "--first-seed", "500", "--name", "test", "--out", s(&data)]), 0);
    let corpus = data.join("corpus.jsonl");
    let test = data.join("test.jsonl");
    assert!(corpus.exists() && test.exists());

    let run = dir.join("run");
    let code = cli(&[
        "train", "--data", s(&corpus), "--fraction", "0.5", "--config", s(&cfg), "--seed", "3", "--out", s(&run),
    ]);
    assert_eq!(code, 0);
    for f in ["policy.json", "controller.json", "executor.json", "proposal.json", "likelihood.csv", "labels.jsonl"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(run.join("likelihood.csv")).unwrap();
    assert!(csv.starts_with("iteration,phase,L,L_ann,wall_time\n"));

    let ev = dir.join("eval");
    let code = cli(&[
        "eval", "--model", s(&run), "--test", s(&test), "--episodes", "2", "--caps-from", s(&corpus), "--out", s(&ev),
    ]);
    assert_eq!(code, 0);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ev.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["arm"], "sl3");
    assert_eq!(m["end_to_end_sr"]["den"], 2);
    assert_eq!(m["offline_subtask_acc"]["per_category"].as_object().unwrap().len(), 8);

    let seg = dir.join("seg");
    assert_eq!(cli(&["segment", "--data", s(&test), "--out", s(&seg)]), 0);
    assert_eq!(std::fs::read_to_string(seg.join("alignments.jsonl")).unwrap().lines().count(), 4);
    assert_eq!(cli(&["segment", "--data", s(&test), "--model", s(&run), "--out", s(&seg)]), 0);

    assert_eq!(cli(&["inspect", "--run", s(&run)]), 0);
    assert_eq!(cli(&["inspect", "--run", s(&dir.join("missing"))]), 1);
}

#[test]
fn flat_arm_and_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    assert_eq!(cli(&["gen", "--n", "10", "--teleport", "--out", s(dir)]), 0);
    let run = dir.join("flat");
    let code = cli(&[
        "train", "--data", s(&dir.join("corpus.jsonl")), "--arm", "seq2seq", "--config", s(&cfg), "--out", s(&run),
    ]);
    assert_eq!(code, 0);
    assert!(!run.join("controller.json").exists());
    // flat models cannot segment
    let code = cli(&["segment", "--data", s(&dir.join("corpus.jsonl")), "--model", s(&run), "--out", s(dir)]);
    assert_eq!(code, 1);

    let sw = dir.join("sweep");
    let code = cli(&["sweep", "--fractions", "0.5,1.0", "--config", s(&cfg), "--threads", "2", "--out", s(&sw)]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(sw.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");
}

#[test]
fn contract_violations_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(cli(&["frobnicate"]), 2);
    assert_eq!(cli(&["train", "--data", s(&dir.join("none.jsonl")), "--out", s(dir)]), 1);
    assert_eq!(cli(&["gen", "--n", "3", "--out", s(dir)]), 0);
    let data = dir.join("corpus.jsonl");
    assert_eq!(cli(&["train", "--data", s(&data), "--fraction", "1.5", "--out", s(dir)]), 1);
    assert_eq!(cli(&["train", "--data", s(&data), "--arm", "bogus", "--out", s(dir)]), 2);
    assert_eq!(cli(&["train", "--data", s(&data), "--labeling", "fuzzy", "--out", s(dir)]), 2);
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(cli(&["gen", "--n", "1", "--config", s(&bad), "--out", s(dir)]), 1);
    std::fs::write(&data, "{not json\n").unwrap();
    assert_eq!(cli(&["segment", "--data", s(&data), "--out", s(dir)]), 1);
}

#[test]
fn binary_reports_errors_on_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_skillparse"))
        .args(["inspect", "--run", "/nonexistent/run"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("labels.jsonl"));
    let out = Command::new(env!("CARGO_BIN_EXE_skillparse")).arg("--version").output().unwrap();
    assert!(out.status.success());
}
