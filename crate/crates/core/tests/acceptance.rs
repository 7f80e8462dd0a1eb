//! Acceptance suite. Every criterion runs in sequence inside one test so the
//! timings are not inflated by sibling tests; each prints one PASS/FAIL line
//! on stderr (uncaptured) and the test fails if any criterion does.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skillparse::corpus::{binomial, build_inventory, enumerate_alignments, EvalAccess};
use skillparse::evaluation::{
    boundary_agreement, mean_demo_length, offline_subtask_accuracy, online_eval, run_arm, segmentation_accuracy,
    teleport_ablation, Actor, BaselineKind, Corpora, ExperimentConfig, MetricsReport, OfflinePolicy, OnlineConfig,
    Planner, Policy, Rate, Trained,
};
use skillparse::gridworld::{generate_corpus, EnvConfig};
use skillparse::models::{
    featurize_controller, featurize_exec, featurize_proposal, ControllerModel, ExecClassSpace, ExecContext,
    ExecutorModel, FeatureVector, Inventory, ModelParams,
};
use skillparse::segmentation::{
    brute_force_segment, demo_symbols, hmm_em, hmm_em_restarts, init_boundaries, segment_viterbi, HmmConfig, SYMBOLS,
};
use skillparse::store::checkpoint_files;
use skillparse::training::{sl3_train, LabelingMode, TrainConfig};

type Check = Result<String, String>;

struct Outcome {
    pass: bool,
}

fn report(line: &str) {
    // bypass the test harness's capture so the lines always show
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn criterion(id: u32, name: &str, limit_secs: f64, f: impl FnOnce() -> Check) -> Outcome {
    let t = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = t.elapsed().as_secs_f64();
    let (pass, detail) = match res {
        Ok(d) if secs <= limit_secs => (true, d),
        Ok(d) => (false, format!("{d}; over the {limit_secs:.0} s budget")),
        Err(e) => (false, e),
    };
    report(&format!(
        "C{id:<2} {} {name} [{secs:.1} s] {detail}",
        if pass { "PASS" } else { "FAIL" }
    ));
    Outcome { pass }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_segmentation_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let full = common::expert(case);
        let n = rng.gen_range(1..=10).min(full.len());
        let d = common::truncate(&full, n);
        let m = rng.gen_range(1..=4.min(n));
        let instrs = common::random_instructions(&full, m, &mut rng);
        let ex = common::random_executor(&[&d], &instrs, 1.5, case);
        let (a, lp) = segment_viterbi(&d, &instrs, &ex).map_err(|e| e.to_string())?;
        let (b, lq) = brute_force_segment(&d, &instrs, &ex).map_err(|e| e.to_string())?;
        worst = worst.max((lp - lq).abs());
        ensure(a == b, || format!("case {case}: alignments differ: {a:?} vs {b:?}"))?;
        ensure((lp - lq).abs() <= 1e-9, || format!("case {case}: |dlogp| = {:e}", (lp - lq).abs()))?;
    }
    Ok(format!("200 instances, max |dlogp| = {worst:.1e}"))
}

fn c2_alignment_counts() -> Check {
    let mut total = 0usize;
    for n in 1..=12 {
        for m in 1..=n {
            let e = enumerate_alignments(n, m);
            let want = binomial(n - 1, m - 1) as usize;
            ensure(e.alignments.len() == want, || format!("n={n} m={m}: {} != {want}", e.alignments.len()))?;
            for a in &e.alignments {
                a.validate_for(n, m).map_err(|x| format!("n={n} m={m}: {x}"))?;
            }
            total += want;
        }
    }
    Ok(format!("78 (n, m) pairs, {total} alignments"))
}

fn grad_rel_error(p: &ModelParams, fv: &FeatureVector, class: usize) -> Result<f64, String> {
    let g = p.grad_log_prob(fv, class).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let (mut diff, mut na, mut nn) = (0.0f64, 0.0f64, 0.0f64);
    for (name, k, ga) in g {
        let w = p.weight(&name, k);
        let mut q = p.clone();
        q.set_weight(&name, k, w + h);
        let up = q.log_prob(fv, class).unwrap();
        q.set_weight(&name, k, w - h);
        let down = q.log_prob(fv, class).unwrap();
        let gn = (up - down) / (2.0 * h);
        diff += (ga - gn).powi(2);
        na += ga * ga;
        nn += gn * gn;
    }
    let scale = na.sqrt().max(nn.sqrt());
    Ok(if scale == 0.0 { 0.0 } else { diff.sqrt() / scale })
}

fn randomized(classes: usize, fvs: &[FeatureVector], rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::new(classes, 0.0);
    for fv in fvs {
        p.compile_mut(fv);
    }
    for w in p.weights_mut() {
        *w = rng.gen_range(-2.0..2.0);
    }
    p
}

fn c3_gradients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let demos: Vec<_> = (0..10).map(common::expert).collect();
    let inv = Inventory::new(build_inventory(&demos));
    let mut worst = [0.0f64; 3];
    for t in 0..50 {
        let d = &demos[t % demos.len()];
        let plan = d.annotation.as_ref().unwrap();
        let i = rng.gen_range(0..d.len());

        // controller
        let pos = rng.gen_range(0..=plan.len());
        let prev = pos.checked_sub(1).map(|p| &plan[p]);
        let fv = featurize_controller(&d.goal.view(), pos, prev);
        let p = randomized(inv.len() + 1, std::slice::from_ref(&fv), &mut rng);
        worst[0] = worst[0].max(grad_rel_error(&p, &fv, rng.gen_range(0..inv.len() + 1))?);

        // executor
        let ctx = ExecContext::from_instruction(&plan[rng.gen_range(0..plan.len())]);
        let prev = i.checked_sub(1).map(|j| &d.steps[j].act);
        let fv = featurize_exec(d.obs_at(i), prev, &ctx);
        let c = ExecClassSpace::get().len();
        let p = randomized(c, std::slice::from_ref(&fv), &mut rng);
        worst[1] = worst[1].max(grad_rel_error(&p, &fv, rng.gen_range(0..c))?);

        // proposal
        let acts: Vec<_> = d.actions().copied().collect();
        let cut = rng.gen_range(1..=acts.len());
        let fv = featurize_proposal(&acts[..cut], &acts[cut..], &d.goal);
        let p = randomized(inv.len(), std::slice::from_ref(&fv), &mut rng);
        worst[2] = worst[2].max(grad_rel_error(&p, &fv, rng.gen_range(0..inv.len()))?);
    }
    ensure(worst.iter().all(|&w| w <= 1e-4), || format!("relative errors {worst:?}"))?;
    Ok(format!(
        "50 triples per family; max relative error controller {:.1e}, executor {:.1e}, proposal {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn c4_em_monotone() -> Check {
    let mut worst_drop = 0.0f64;
    let mut iters = 0;
    for s in 0..50u64 {
        let seqs: Vec<Vec<usize>> = (0..8).map(|i| demo_symbols(&common::expert(50_000 + s * 8 + i))).collect();
        let k = 2 + (s as usize % 4);
        let fit = hmm_em(&seqs, SYMBOLS.len(), k, 1e-6, 200, s).map_err(|e| e.to_string())?;
        iters += fit.iterations;
        for w in fit.log_likelihoods.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
            ensure(w[1] >= w[0] - 1e-9, || format!("dataset {s}: {} -> {}", w[0], w[1]))?;
        }
    }
    Ok(format!("50 datasets, {iters} EM iterations, largest drop {worst_drop:.1e}"))
}

fn c5_coordinate_ascent(cfg: &ExperimentConfig) -> Check {
    let d = generate_corpus(&cfg.env, 100, 0).map_err(|e| e.to_string())?;
    let (ann, unann) = skillparse::corpus::split_annotated(&d, 0.1, 0);
    let tc = TrainConfig {
        labeling: LabelingMode::Exact,
        ..TrainConfig::default()
    }
    .with_l2(0.0);
    let st = sl3_train(&unann, &ann, &tc).map_err(|e| e.to_string())?;
    let log = &st.likelihood_log;
    let mut checked = 0;
    for w in log.windows(2) {
        let (a, b) = match (w[0].total(), w[1].total()) {
            (Some(a), Some(b)) => (a, b),
            (None, None) => (w[0].l_ann, w[1].l_ann),
            _ => continue,
        };
        checked += 1;
        ensure(b >= a - 1e-6, || {
            format!(
                "iteration {} {} -> iteration {} {}: {a} -> {b}",
                w[0].iteration,
                w[0].phase.name(),
                w[1].iteration,
                w[1].phase.name()
            )
        })?;
    }
    let last = log.last().and_then(|e| e.total()).unwrap_or(f64::NAN);
    Ok(format!("{checked} phase transitions over {} iterations, final L + L_ann {last:.3}", st.iteration))
}

fn c6_no_leakage(cfg: &ExperimentConfig) -> Check {
    let d = generate_corpus(&cfg.env, 100, 0).map_err(|e| e.to_string())?;
    let (ann, unann) = skillparse::corpus::split_annotated(&d, 0.1, 0);
    let access = EvalAccess::grant();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut scrambled = unann.clone();
    for x in &mut scrambled.demos {
        let n = x.len();
        let a = common::random_alignment(n, rng.gen_range(1..=n.min(6)), &mut rng);
        x.set_ground_truth(&access, Some(a), None);
    }
    let tc = TrainConfig::default();
    let wrap = |st| Trained {
        kind: BaselineKind::Sl3,
        policy: Policy::Hierarchical {
            controller: ControllerModel::new(Inventory::new(Vec::new()), 0.0),
            executor: ExecutorModel::new(0.0),
        },
        state: Some(st),
    };
    let a = sl3_train(&unann, &ann, &tc).map_err(|e| e.to_string())?;
    let b = sl3_train(&scrambled, &ann, &tc).map_err(|e| e.to_string())?;
    ensure(a.same_result(&b), || "training state differs".into())?;
    let (fa, fb) = (checkpoint_files(&wrap(a)), checkpoint_files(&wrap(b)));
    ensure(fa == fb, || "checkpoint bytes differ".into())?;
    Ok(format!("{} unannotated demos scrambled; checkpoints bit-identical", unann.len()))
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_skillparse"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })
}

fn c7_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    run_bin(&["gen", "--n", "200", "--out", &s(dir)])?;
    run_bin(&["gen", "--n", "50", "--first-seed", "1000000", "--name", "test", "--out", &s(dir)])?;
    let corpus = s(&dir.join("corpus.jsonl"));
    let test = s(&dir.join("test.jsonl"));
    let runs = [("a", "4"), ("b", "4"), ("c", "1")];
    for (name, threads) in runs {
        let model = s(&dir.join(name));
        run_bin(&["train", "--data", &corpus, "--fraction", "0.1", "--seed", "7", "--threads", threads, "--out", &model])?;
        run_bin(&[
            "eval", "--model", &model, "--test", &test, "--caps-from", &corpus, "--episodes", "50", "--seed", "7",
            "--threads", threads, "--out", &model,
        ])?;
    }
    let files = ["policy.json", "controller.json", "executor.json", "proposal.json", "labels.jsonl", "metrics.json"];
    let read = |run: &str, f: &str| std::fs::read(dir.join(run).join(f)).map_err(|e| format!("{run}/{f}: {e}"));
    // likelihoods without the wall-clock column
    let lik = |run: &str| -> Result<Vec<String>, String> {
        let t = String::from_utf8(read(run, "likelihood.csv")?).map_err(|e| e.to_string())?;
        Ok(t.lines().map(|l| l.rsplit_once(',').map_or(l, |x| x.0).to_string()).collect())
    };
    for f in files {
        let a = read("a", f)?;
        ensure(a == read("b", f)?, || format!("{f}: repeated run differs"))?;
        ensure(a == read("c", f)?, || format!("{f}: --threads 4 differs from --threads 1"))?;
    }
    ensure(lik("a")? == lik("b")? && lik("a")? == lik("c")?, || "likelihood logs differ".into())?;
    Ok("3 CLI train+eval runs (threads 4, 4, 1): checkpoints, labels, likelihoods and metrics byte-identical".into())
}

struct Arms {
    sl3_10: MetricsReport,
    sl3_100: (Trained, MetricsReport),
}

fn c8_sparse_annotation(corpora: &Corpora, cfg: &ExperimentConfig, arms: &mut Option<Arms>) -> Check {
    let horizon = mean_demo_length(&corpora.train);
    ensure(corpora.train.len() == 1000 && horizon >= 30.0, || {
        format!("corpus of {} demos with mean length {horizon:.1}", corpora.train.len())
    })?;
    let arm = |k, f| run_arm(k, corpora, cfg, f).map_err(|e| e.to_string());
    let sl3_10 = arm(BaselineKind::Sl3, 0.1)?.1;
    let sl3_100 = arm(BaselineKind::Sl3, 1.0)?;
    let seq2seq = arm(BaselineKind::Seq2seq, 0.1)?.1;
    let (a, b, s) = (sl3_10.offline_average(), sl3_100.1.offline_average(), seq2seq.offline_average());
    *arms = Some(Arms { sl3_10, sl3_100 });
    let detail = format!(
        "mean length {horizon:.1}; offline avg sl3@10% {:.1}, sl3@100% {:.1}, seq2seq {:.1}",
        100.0 * a,
        100.0 * b,
        100.0 * s
    );
    ensure(b - a <= 0.07, || format!("{detail}: 10% trails 100% by {:.1} points", 100.0 * (b - a)))?;
    ensure(a - s >= 0.10 && b - s >= 0.10, || format!("{detail}: margin over seq2seq below 10 points"))?;
    Ok(detail)
}

fn c9_latent_benefit(corpora: &Corpora, cfg: &ExperimentConfig, arms: &Option<Arms>) -> Check {
    let arms = arms.as_ref().ok_or("needs the criterion 8 runs")?;
    let nl_10 = run_arm(BaselineKind::NoLatent, corpora, cfg, 0.1).map_err(|e| e.to_string())?.1;
    let (nl_100, _) = run_arm(BaselineKind::NoLatent, corpora, cfg, 1.0).map_err(|e| e.to_string())?;
    let margin = arms.sl3_10.offline_average() - nl_10.offline_average();
    let detail = format!(
        "sl3@10% {:.2} vs no_latent@10% {:.2}, margin {:+.2} points",
        100.0 * arms.sl3_10.offline_average(),
        100.0 * nl_10.offline_average(),
        100.0 * margin
    );
    ensure(margin >= 0.0, || detail.clone())?;
    let (sl3, nl) = (arms.sl3_100.0.state.as_ref().unwrap(), nl_100.state.as_ref().unwrap());
    ensure(sl3.same_result(nl), || format!("{detail}; 100% runs differ"))?;
    let strip = |t: &Trained| {
        checkpoint_files(t)
            .into_iter()
            .filter(|(f, _)| *f != "policy.json")
            .collect::<Vec<_>>()
    };
    ensure(strip(&arms.sl3_100.0) == strip(&nl_100), || format!("{detail}; 100% checkpoints differ"))?;
    Ok(format!("{detail}; identical checkpoints at 100%"))
}

fn c10_init_quality(cfg: &ExperimentConfig) -> Check {
    let d = generate_corpus(&cfg.env, 100, 0).map_err(|e| e.to_string())?;
    let seqs: Vec<Vec<usize>> = d.demos.iter().map(demo_symbols).collect();
    let h = hmm_em_restarts(&seqs, SYMBOLS.len(), &HmmConfig::default(), 0)
        .map_err(|e| e.to_string())?
        .model;
    let access = EvalAccess::grant();
    let (mut boundary, mut ordinal) = (Rate::default(), Rate::default());
    for x in &d.demos {
        let gt = x.gt_alignment(&access).ok_or("missing ground truth")?;
        let m = x.annotation.as_ref().map(Vec::len);
        let a = init_boundaries(x, &h, m).map_err(|e| e.to_string())?.to_alignment();
        boundary.merge(boundary_agreement(&a, gt).map_err(|e| e.to_string())?);
        ordinal.merge(segmentation_accuracy(&a, gt).map_err(|e| e.to_string())?);
    }
    let detail = format!(
        "boundary agreement {:.4} ({}/{}), action-level accuracy {:.4}",
        boundary.or_zero(),
        boundary.num,
        boundary.den,
        ordinal.or_zero()
    );
    ensure(boundary.or_zero() >= 0.80, || detail.clone())?;
    Ok(detail)
}

fn c11_horizon(cfg: &ExperimentConfig) -> Check {
    let r = teleport_ablation(cfg).map_err(|e| e.to_string())?;
    let detail = format!(
        "mean length {:.1} -> {:.1} ({:.2}x); gap default {:+.1} points, teleport {:+.1} points",
        r.default.mean_demo_length,
        r.teleport.mean_demo_length,
        r.length_ratio,
        100.0 * r.default.gap,
        100.0 * r.teleport.gap
    );
    ensure(r.teleport.gap < r.default.gap, || detail.clone())?;
    Ok(detail)
}

fn c12_oracles(corpora: &Corpora, cfg: &ExperimentConfig) -> Check {
    let access = EvalAccess::grant();
    let replay = offline_subtask_accuracy(OfflinePolicy::ExpertReplay, &corpora.test, &access).map_err(|e| e.to_string())?;
    ensure(replay.average.value() == Some(1.0), || format!("expert replay {:?}", replay.average))?;
    let on = online_eval(Planner::Oracle, Actor::Expert, &cfg.env, &corpora.caps, &OnlineConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(on.end_to_end.value() == Some(1.0), || format!("oracle end-to-end {:?}", on.end_to_end))?;
    let uniform = Policy::Hierarchical {
        controller: ControllerModel::new(Inventory::new(build_inventory(&corpora.train.demos)), 0.0),
        executor: ExecutorModel::new(0.0),
    };
    let u = offline_subtask_accuracy(OfflinePolicy::Learned(&uniform), &corpora.test, &access).map_err(|e| e.to_string())?;
    ensure(u.average.or_zero() < 0.05, || format!("uniform offline {:.4}", u.average.or_zero()))?;
    Ok(format!(
        "replay {}/{}, oracle end-to-end {}/{}, uniform offline {:.4}",
        replay.average.num,
        replay.average.den,
        on.end_to_end.num,
        on.end_to_end.den,
        u.average.or_zero()
    ))
}

#[test]
fn acceptance_criteria() {
    let cfg = ExperimentConfig {
        offline_only: true,
        ..ExperimentConfig::default()
    };
    assert_eq!(cfg.env, EnvConfig::default());
    let mut results = vec![
        criterion(1, "segmentation exactness", 10.0, c1_segmentation_exactness),
        criterion(2, "alignment combinatorics", 5.0, c2_alignment_counts),
        criterion(3, "gradient correctness", 10.0, c3_gradients),
        criterion(4, "EM monotonicity", 30.0, c4_em_monotone),
        criterion(5, "coordinate-ascent monotonicity", 300.0, || c5_coordinate_ascent(&cfg)),
        criterion(6, "no leakage", 300.0, || c6_no_leakage(&cfg)),
        criterion(7, "determinism", 600.0, c7_determinism),
    ];
    let t = Instant::now();
    let corpora = Corpora::generate(&cfg).expect("default corpora");
    let setup = t.elapsed().as_secs_f64();
    let mut arms = None;
    results.push(criterion(8, "sparse-annotation replication", 900.0 - setup, || {
        c8_sparse_annotation(&corpora, &cfg, &mut arms)
    }));
    results.push(criterion(9, "latent-inference benefit", f64::INFINITY, || {
        c9_latent_benefit(&corpora, &cfg, &arms)
    }));
    results.push(criterion(10, "initialization quality", 60.0, || c10_init_quality(&cfg)));
    results.push(criterion(11, "horizon effect", 1200.0, || c11_horizon(&cfg)));
    results.push(criterion(12, "oracle sanity", 120.0, || c12_oracles(&corpora, &cfg)));
    let passed = results.iter().filter(|o| o.pass).count();
    report(&format!("acceptance: {passed}/{} criteria passed", results.len()));
    assert_eq!(passed, results.len(), "some acceptance criteria failed");
}
