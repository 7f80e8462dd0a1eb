//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{Alignment, Dataset, EvalAccess};
use crate::evaluation::{
    online_eval_policy, run_baseline, segmentation_accuracy, supervision_sweep, sweep_csv,
    teleport_ablation, BaselineKind, Corpora, ExperimentConfig, MetricsReport, OfflinePolicy, Policy,
    Rate, StepCaps, OFFLINE_NOTE,
};
use crate::gridworld::generate_corpus;
use crate::segmentation::{demo_symbols, hmm_em_restarts, init_boundaries, segment_viterbi, SYMBOLS};
use crate::store::{load_policy, save_trained, to_json_pretty, write_file, LabelRecord};
use crate::training::LabelingMode;

#[derive(Parser, Debug)]
#[command(name = "skillparse", version, about = "Learn hierarchical policies from sparsely annotated demonstrations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for splits, initialization and evaluation episodes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Experiment configuration (TOML): env, train, online and corpus sizes.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an expert corpus.
    Gen {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        /// Collapse navigation into single teleport actions.
        #[arg(long)]
        teleport: bool,
        #[arg(long, default_value = "corpus")]
        name: String,
    },
    /// Train one arm on a corpus with a fraction of annotations kept.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        #[arg(long, default_value = "sl3")]
        arm: BaselineKind,
        #[arg(long, value_parser = parse_labeling)]
        labeling: Option<LabelingMode>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Evaluate a trained model offline on a test corpus and online in fresh episodes.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Corpus the rollout step caps are measured on (defaults to the test corpus).
        #[arg(long)]
        caps_from: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        offline_only: bool,
    },
    /// Annotation-fraction sweep of sl3 against no_latent, or the teleport ablation.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25,0.5,1.0")]
        fractions: Vec<f64>,
        #[arg(long)]
        teleport_ablation: bool,
    },
    /// Segment a corpus with the HMM initializer or a trained executor.
    Segment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print imputed labels per iteration from a training run.
    Inspect {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        id: Option<String>,
    },
}

fn parse_labeling(s: &str) -> Result<LabelingMode, String> {
    match s {
        "amortized" => Ok(LabelingMode::Amortized),
        "exact" => Ok(LabelingMode::Exact),
        _ => Err(format!("unknown labeling mode `{s}` (expected amortized or exact)")),
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(pub String);

fn err<E: std::fmt::Display>(e: E) -> CliError {
    CliError(e.to_string())
}

fn load_config(g: &Global) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &g.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml_str(&text).map_err(|e| CliError(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
        cfg.train.seed = s;
    }
    cfg.env.validate().map_err(err)?;
    cfg.train.validate().map_err(CliError)?;
    Ok(cfg)
}

fn load_dataset(p: &Path) -> Result<Dataset, CliError> {
    let d = Dataset::load(p).map_err(err)?;
    d.validate().map_err(err)?;
    Ok(d)
}

#[derive(Serialize)]
struct SegmentRecord<'a> {
    id: &'a str,
    alignment: &'a Alignment,
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement: Option<Rate>,
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.global.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(err)?
            .install(|| run_command(cli)),
        None => run_command(cli),
    }
}

fn run_command(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.global)?;
    let out = &cli.global.out;
    match cli.command {
        Command::Gen {
            n,
            first_seed,
            teleport,
            name,
        } => {
            let env = if teleport { cfg.env.teleport() } else { cfg.env.clone() };
            let d = generate_corpus(&env, n, first_seed).map_err(err)?;
            let path = out.join(format!("{name}.jsonl"));
            std::fs::create_dir_all(out).map_err(err)?;
            d.save(&path).map_err(err)?;
            println!("wrote {} demonstrations to {}", d.len(), path.display());
        }
        Command::Train {
            data,
            fraction,
            arm,
            labeling,
            iterations,
        } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(CliError(format!("fraction {fraction} outside [0, 1]")));
            }
            let d = load_dataset(&data)?;
            let mut tc = cfg.train.clone();
            tc.seed = cfg.seed;
            if let Some(l) = labeling {
                tc.labeling = l;
            }
            if let Some(t) = iterations {
                tc.iterations = t;
            }
            tc.validate().map_err(CliError)?;
            let (ann, unann) = crate::corpus::split_annotated(&d, fraction, cfg.seed);
            let trained = run_baseline(arm, &unann, &ann, &tc).map_err(err)?;
            save_trained(out, &trained).map_err(err)?;
            println!(
                "trained {} on {} annotated + {} unannotated demonstrations; wrote {}",
                arm.name(),
                ann.len(),
                unann.len(),
                out.display()
            );
        }
        Command::Eval {
            model,
            test,
            caps_from,
            episodes,
            offline_only,
        } => {
            let (meta, policy) = load_policy(&model).map_err(err)?;
            let test = load_dataset(&test)?;
            let caps_data = match caps_from {
                Some(p) => load_dataset(&p)?,
                None => test.clone(),
            };
            let mut cfg = cfg;
            if let Some(e) = episodes {
                cfg.online.episodes = e;
            }
            cfg.offline_only |= offline_only;
            let access = EvalAccess::grant();
            let caps = StepCaps::from_dataset(&caps_data, &access);
            let offline =
                crate::evaluation::offline_subtask_accuracy(OfflinePolicy::Learned(&policy), &test, &access)
                    .map_err(err)?;
            let online = if cfg.offline_only {
                None
            } else {
                Some(online_eval_policy(&policy, &cfg.env, &caps, &cfg.online).map_err(err)?)
            };
            let report = MetricsReport {
                arm: meta.arm.name().to_string(),
                fraction: None,
                note: OFFLINE_NOTE.to_string(),
                offline_subtask_acc: offline,
                online_subtask_sr: online.as_ref().map(|o| o.subtask.clone()),
                end_to_end_sr: online.map(|o| o.end_to_end),
                seg_acc: None,
                config_digest: cfg.digest(),
                seed: cfg.seed,
            };
            write_file(&out.join("metrics.json"), &to_json_pretty(&report)).map_err(err)?;
            print_report(&report);
        }
        Command::Sweep {
            fractions,
            teleport_ablation: ablation,
        } => {
            if ablation {
                let r = teleport_ablation(&cfg).map_err(err)?;
                write_file(&out.join("teleport_ablation.json"), &to_json_pretty(&r)).map_err(err)?;
                println!(
                    "mean length {:.2} -> {:.2} (ratio {:.2}); gap default {:.4}, teleport {:.4}",
                    r.default.mean_demo_length,
                    r.teleport.mean_demo_length,
                    r.length_ratio,
                    r.default.gap,
                    r.teleport.gap
                );
            } else {
                let corpora = Corpora::generate(&cfg).map_err(err)?;
                let rows = supervision_sweep(&fractions, &corpora, &cfg).map_err(err)?;
                write_file(&out.join("sweep.csv"), &sweep_csv(&rows)).map_err(err)?;
                write_file(&out.join("sweep.json"), &to_json_pretty(&rows)).map_err(err)?;
                print!("{}", sweep_csv(&rows));
            }
        }
        Command::Segment { data, model } => {
            let d = load_dataset(&data)?;
            let access = EvalAccess::grant();
            let alignments: Vec<Alignment> = match model {
                None => {
                    let seqs: Vec<Vec<usize>> = d.demos.iter().map(demo_symbols).collect();
                    let h = hmm_em_restarts(&seqs, SYMBOLS.len(), &cfg.train.hmm, cfg.seed).map_err(err)?.model;
                    d.demos
                        .iter()
                        .map(|x| {
                            let m = x.annotation.as_ref().map(Vec::len);
                            init_boundaries(x, &h, m).map(|s| s.to_alignment()).map_err(err)
                        })
                        .collect::<Result<_, _>>()?
                }
                Some(dir) => {
                    let (_, policy) = load_policy(&dir).map_err(err)?;
                    let Policy::Hierarchical { controller, executor } = policy else {
                        return Err(CliError("segmentation needs a hierarchical model".into()));
                    };
                    d.demos
                        .iter()
                        .map(|x| {
                            let plan = match &x.annotation {
                                Some(a) => a.clone(),
                                None => {
                                    let mut p = controller.decode(&x.goal, x.len()).plan;
                                    p.truncate(x.len());
                                    if p.is_empty() {
                                        p = controller.inventory.items()[..1].to_vec();
                                    }
                                    p
                                }
                            };
                            segment_viterbi(x, &plan, &executor).map(|r| r.0).map_err(err)
                        })
                        .collect::<Result<_, _>>()?
                }
            };
            let mut lines = String::new();
            let mut pooled = Rate::default();
            for (x, a) in d.demos.iter().zip(&alignments) {
                let agreement = match x.gt_alignment(&access) {
                    Some(gt) => Some(segmentation_accuracy(a, gt).map_err(err)?),
                    None => None,
                };
                if let Some(r) = agreement {
                    pooled.merge(r);
                }
                lines.push_str(&serde_json::to_string(&SegmentRecord { id: &x.id, alignment: a, agreement }).map_err(err)?);
                lines.push('\n');
            }
            write_file(&out.join("alignments.jsonl"), &lines).map_err(err)?;
            match pooled.value() {
                Some(v) => println!("segmented {} demonstrations; agreement with ground truth {v:.4}", d.len()),
                None => println!("segmented {} demonstrations", d.len()),
            }
        }
        Command::Inspect { run, id } => {
            let path = run.join("labels.jsonl");
            let text = std::fs::read_to_string(&path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            let mut stdout = std::io::stdout().lock();
            for (n, line) in text.lines().enumerate() {
                let rec: LabelRecord =
                    serde_json::from_str(line).map_err(|e| CliError(format!("{}:{}: {e}", path.display(), n + 1)))?;
                if id.as_ref().is_some_and(|i| *i != rec.id) {
                    continue;
                }
                let line = format!("[{}] iteration {}: {}", rec.id, rec.iteration, rec.instructions.join(" | "));
                // a closed pipe (e.g. `| head`) ends the listing quietly
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
        }
    }
    Ok(())
}

fn print_report(r: &MetricsReport) {
    let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!("arm {}", r.arm);
    println!("offline subtask accuracy {}", f(r.offline_subtask_acc.average.value()));
    for (c, x) in &r.offline_subtask_acc.per_category {
        println!("  {c:<7} {} ({}/{})", f(x.value()), x.num, x.den);
    }
    if let Some(o) = &r.online_subtask_sr {
        println!("online subtask success {}", f(o.average.value()));
        for (c, x) in &o.per_category {
            println!("  {c:<7} {} ({}/{})", f(x.value()), x.num, x.den);
        }
    }
    if let Some(e) = r.end_to_end_sr {
        println!("end-to-end success {} ({}/{})", f(e.value()), e.num, e.den);
    }
}
