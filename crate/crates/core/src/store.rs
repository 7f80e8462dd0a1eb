//! On-disk layout of trained models and training logs.
//!
//! A model directory holds `policy.json` (arm, policy shape, inventory) and
//! one checkpoint per model: `controller.json`, `executor.json` and
//! `proposal.json` (the last two only for hierarchical arms). Training runs
//! add `likelihood.csv` and `labels.jsonl`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Instruction;
use crate::evaluation::{BaselineKind, Policy, Trained};
use crate::models::checkpoint::{
    controller_checkpoint, controller_from_checkpoint, executor_checkpoint, executor_from_checkpoint,
    proposal_checkpoint,
};
use crate::models::{CheckpointError, Inventory, ModelCheckpoint};
use crate::training::TrainState;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyMeta {
    pub arm: BaselineKind,
    pub flat: bool,
    pub inventory: Vec<Instruction>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), StoreError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, contents).map_err(io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Checkpoint files as `(file name, contents)`, in a fixed order.
pub fn checkpoint_files(trained: &Trained) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let (flat, inventory) = match &trained.policy {
        Policy::Hierarchical { controller, .. } => (false, controller.inventory.items().to_vec()),
        Policy::Flat { .. } => (true, Vec::new()),
    };
    let meta = PolicyMeta {
        arm: trained.kind,
        flat,
        inventory,
    };
    out.push(("policy.json", to_json_pretty(&meta)));
    if let Policy::Hierarchical { controller, .. } = &trained.policy {
        out.push(("controller.json", to_json_pretty(&controller_checkpoint(controller))));
    }
    out.push(("executor.json", to_json_pretty(&executor_checkpoint(trained.policy.executor()))));
    if let Some(st) = &trained.state {
        out.push(("proposal.json", to_json_pretty(&proposal_checkpoint(&st.proposal))));
    }
    out
}

pub fn save_trained(dir: &Path, trained: &Trained) -> Result<(), StoreError> {
    for (name, text) in checkpoint_files(trained) {
        write_file(&dir.join(name), &text)?;
    }
    if let Some(st) = &trained.state {
        write_file(&dir.join("likelihood.csv"), &likelihood_csv(st))?;
        write_file(&dir.join("labels.jsonl"), &labels_jsonl(st))?;
    }
    Ok(())
}

pub fn load_policy(dir: &Path) -> Result<(PolicyMeta, Policy), StoreError> {
    let meta: PolicyMeta = read_json(&dir.join("policy.json"))?;
    let ex: ModelCheckpoint = read_json(&dir.join("executor.json"))?;
    let executor = executor_from_checkpoint(&ex)?;
    if meta.flat {
        return Ok((meta, Policy::Flat { executor }));
    }
    let c: ModelCheckpoint = read_json(&dir.join("controller.json"))?;
    let controller = controller_from_checkpoint(&c, Inventory::new(meta.inventory.clone()))?;
    Ok((meta, Policy::Hierarchical { controller, executor }))
}

/// `iteration,phase,L,L_ann,wall_time` with an empty L while labels are missing.
pub fn likelihood_csv(st: &TrainState) -> String {
    let mut out = String::from("iteration,phase,L,L_ann,wall_time\n");
    for (e, t) in st.likelihood_log.iter().zip(&st.timings) {
        let l = e.l.map_or(String::new(), |v| format!("{v:.9}"));
        out.push_str(&format!(
            "{},{},{},{:.9},{:.3}\n",
            e.iteration,
            e.phase.name(),
            l,
            e.l_ann,
            t.seconds
        ));
    }
    out
}

/// Same as [`likelihood_csv`] without the wall-clock column.
pub fn likelihood_csv_deterministic(st: &TrainState) -> String {
    let mut out = String::from("iteration,phase,L,L_ann\n");
    for e in &st.likelihood_log {
        let l = e.l.map_or(String::new(), |v| format!("{v:.9}"));
        out.push_str(&format!("{},{},{},{:.9}\n", e.iteration, e.phase.name(), l, e.l_ann));
    }
    out
}

#[derive(Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub iteration: usize,
    pub instructions: Vec<String>,
}

/// One JSON line per (iteration, unannotated demo) with its imputed labels.
pub fn labels_jsonl(st: &TrainState) -> String {
    let mut out = Vec::new();
    for (it, labels) in &st.label_history {
        for (id, ins) in labels {
            let rec = LabelRecord {
                id: id.clone(),
                iteration: *it,
                instructions: ins.iter().map(Instruction::text).collect(),
            };
            serde_json::to_writer(&mut out, &rec).expect("serializable");
            out.write_all(b"\n").expect("in-memory write");
        }
    }
    String::from_utf8(out).expect("utf-8")
}
