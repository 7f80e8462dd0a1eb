//! Dataset container, JSON Lines I/O and annotated/unannotated splitting.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::demo::{DemoError, Demonstration};
use super::entity::{Entity, Object, Receptacle};
use super::instruction::{grammar_instantiations, Instruction};
use super::observation::CellCode;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("{path}: bad header: {message}")]
    Header { path: PathBuf, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: DemoError,
    },
    #[error("token `{token}` in demonstration `{id}` is not in the vocabulary")]
    UnknownToken { id: String, token: String },
    #[error("duplicate demonstration id `{0}`")]
    DuplicateId(String),
}

/// Sidecar metadata stored next to the demonstrations file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub vocab: Vec<String>,
    pub inventory: Vec<Instruction>,
    #[serde(default)]
    pub grid: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub demos: Vec<Demonstration>,
    pub vocab: Vec<String>,
    pub inventory: Vec<Instruction>,
    /// Generator configuration, kept opaque at this layer.
    pub grid: Option<serde_json::Value>,
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset::new(Vec::new(), None)
    }
}

pub fn header_path(path: &Path) -> PathBuf {
    path.with_extension("header.json")
}

/// Objects and receptacles mentioned anywhere in the demonstrations.
pub fn entities_present(demos: &[Demonstration]) -> (Vec<Object>, Vec<Receptacle>) {
    let mut objs = BTreeSet::new();
    let mut recs = BTreeSet::new();
    let mut add = |e: Entity| match e {
        Entity::Object(o) => {
            objs.insert(o);
        }
        Entity::Receptacle(r) => {
            recs.insert(r);
        }
    };
    let mut codes = BTreeSet::new();
    for d in demos {
        for t in &d.goal.tokens {
            if let Ok(e) = t.parse::<Entity>() {
                add(e);
            }
        }
        for ann in [d.annotation.as_ref()].into_iter().flatten() {
            for ins in ann {
                ins.args.iter().for_each(|&e| add(e));
            }
        }
        for s in &d.steps {
            s.act.entities().into_iter().for_each(&mut add);
            codes.extend(s.obs.window.iter().copied());
            codes.extend(s.obs.held);
        }
        codes.extend(d.final_obs.window.iter().copied());
    }
    for c in codes {
        let c = CellCode(c);
        if let Some(o) = c.object() {
            add(Entity::Object(o));
        }
        if let Some(r) = c.receptacle() {
            add(Entity::Receptacle(r));
        }
    }
    (objs.into_iter().collect(), recs.into_iter().collect())
}

/// Grammar instantiations over the present entities, plus any observed
/// annotation not covered by them. Stable order, no duplicates.
pub fn build_inventory(demos: &[Demonstration]) -> Vec<Instruction> {
    let (objs, recs) = entities_present(demos);
    let mut inv = grammar_instantiations(&objs, &recs);
    let mut seen: BTreeSet<Instruction> = inv.iter().cloned().collect();
    for d in demos {
        for ins in d.annotation.iter().flatten() {
            if seen.insert(ins.clone()) {
                inv.push(ins.clone());
            }
        }
    }
    inv
}

fn collect_vocab(demos: &[Demonstration], inventory: &[Instruction]) -> Vec<String> {
    let mut v = BTreeSet::new();
    for d in demos {
        v.extend(d.goal.tokens.iter().cloned());
        for ins in d.annotation.iter().flatten() {
            v.extend(ins.tokens.iter().cloned());
        }
    }
    for ins in inventory {
        v.extend(ins.tokens.iter().cloned());
    }
    v.into_iter().collect()
}

impl Dataset {
    /// Build a dataset, materializing vocabulary and inventory from the demos.
    pub fn new(demos: Vec<Demonstration>, grid: Option<serde_json::Value>) -> Self {
        let inventory = build_inventory(&demos);
        let vocab = collect_vocab(&demos, &inventory);
        Dataset {
            demos,
            vocab,
            inventory,
            grid,
        }
    }

    /// A dataset sharing this one's vocabulary, inventory and config.
    pub fn with_demos(&self, demos: Vec<Demonstration>) -> Self {
        Dataset {
            demos,
            vocab: self.vocab.clone(),
            inventory: self.inventory.clone(),
            grid: self.grid.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            format_version: FORMAT_VERSION,
            vocab: self.vocab.clone(),
            inventory: self.inventory.clone(),
            grid: self.grid.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let vocab: BTreeSet<&str> = self.vocab.iter().map(String::as_str).collect();
        let mut ids = BTreeSet::new();
        for (i, d) in self.demos.iter().enumerate() {
            d.validate()
                .map_err(|source| DatasetError::Invalid { line: i + 1, source })?;
            if !ids.insert(d.id.as_str()) {
                return Err(DatasetError::DuplicateId(d.id.clone()));
            }
            let ann_tokens = d.annotation.iter().flatten().flat_map(|a| a.tokens.iter());
            for t in d.goal.tokens.iter().chain(ann_tokens) {
                if !vocab.contains(t.as_str()) {
                    return Err(DatasetError::UnknownToken {
                        id: d.id.clone(),
                        token: t.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let io = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        for d in &self.demos {
            serde_json::to_writer(&mut w, d).map_err(|e| io(e.into()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)?;
        let hp = header_path(path);
        let hio = |source| DatasetError::Io {
            path: hp.clone(),
            source,
        };
        let h = serde_json::to_string_pretty(&self.header()).map_err(|e| hio(e.into()))?;
        std::fs::write(&hp, h).map_err(hio)?;
        Ok(())
    }

    /// Load demonstrations and, if present, the sidecar header. Without a
    /// header the vocabulary and inventory are rebuilt from the demos.
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let io = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io)?);
        let mut demos = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let de = &mut serde_json::Deserializer::from_str(&line);
            let d: Demonstration =
                serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    field: e.path().to_string(),
                    message: e.inner().to_string(),
                })?;
            demos.push(d);
        }
        let hp = header_path(path);
        let ds = if hp.exists() {
            let text = std::fs::read_to_string(&hp).map_err(|source| DatasetError::Io {
                path: hp.clone(),
                source,
            })?;
            let h: DatasetHeader = serde_json::from_str(&text).map_err(|e| DatasetError::Header {
                path: hp.clone(),
                message: e.to_string(),
            })?;
            if h.format_version != FORMAT_VERSION {
                return Err(DatasetError::Header {
                    path: hp,
                    message: format!("unsupported format version {}", h.format_version),
                });
            }
            Dataset {
                demos,
                vocab: h.vocab,
                inventory: h.inventory,
                grid: h.grid,
            }
        } else {
            Dataset::new(demos, None)
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Number of demos kept annotated for a given fraction.
pub fn annotated_count(n: usize, fraction: f64) -> usize {
    let k = (fraction * n as f64).round() as usize;
    if fraction > 0.0 && n > 0 {
        k.clamp(1, n)
    } else {
        k.min(n)
    }
}

/// Partition into an annotated subset and an unannotated subset whose
/// annotations are moved to the evaluation-only field. Membership is a seeded
/// shuffle; relative order inside each subset follows the input.
pub fn split_annotated(d: &Dataset, fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let n = d.demos.len();
    let k = annotated_count(n, fraction.clamp(0.0, 1.0));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = vec![false; n];
    for &i in &idx[..k] {
        chosen[i] = true;
    }
    let mut ann = Vec::with_capacity(k);
    let mut unann = Vec::with_capacity(n - k);
    for (i, demo) in d.demos.iter().enumerate() {
        if chosen[i] {
            ann.push(demo.clone());
        } else {
            let mut demo = demo.clone();
            demo.strip_annotation();
            unann.push(demo);
        }
    }
    (d.with_demos(ann), d.with_demos(unann))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Action, ActionKind, Goal, Observation, Step};

    fn toy(id: usize) -> Demonstration {
        let obs = Observation {
            window: vec![0; 9],
            held: None,
        };
        Demonstration::new(
            format!("d{id}"),
            Goal::from_text("slice the apple"),
            vec![
                Step {
                    obs: obs.clone(),
                    act: Action::bare(ActionKind::Up),
                },
                Step {
                    obs: obs.clone(),
                    act: Action::on_object(ActionKind::Slice, Object::Apple),
                },
            ],
            obs,
        )
        .with_annotation(vec![
            Instruction::goto(Object::Apple),
            Instruction::on_object(crate::corpus::SubtaskCategory::Slice, Object::Apple),
        ])
    }

    #[test]
    fn split_counts() {
        let d = Dataset::new((0..20).map(toy).collect(), None);
        let (a, u) = split_annotated(&d, 0.1, 7);
        assert_eq!((a.len(), u.len()), (2, 18));
        assert!(u.demos.iter().all(|x| x.annotation.is_none()));
        let (a2, _) = split_annotated(&d, 0.1, 7);
        assert_eq!(a, a2);
        let (a, u) = split_annotated(&d, 1.0, 7);
        assert_eq!((a.len(), u.len()), (20, 0));
        let (a, _) = split_annotated(&d, 0.01, 7);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let d = Dataset::new((0..3).map(toy).collect(), Some(serde_json::json!({"w": 5})));
        d.save(&p).unwrap();
        assert_eq!(Dataset::load(&p).unwrap(), d);

        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let cut = &lines[1][..lines[1].len() / 2];
        lines[1] = cut;
        std::fs::write(&p, lines.join("\n")).unwrap();
        match Dataset::load(&p) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }

        let e = dir.path().join("empty.jsonl");
        std::fs::write(&e, "").unwrap();
        let ds = Dataset::load(&e).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn field_path_in_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let mut v = serde_json::to_value(toy(0)).unwrap();
        v["steps"][1]["act"]["kind"] = "fly".into();
        std::fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
        match Dataset::load(&p) {
            Err(DatasetError::Parse { line, field, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(field, "steps[1].act.kind");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inventory_covers_annotations() {
        let d = Dataset::new(vec![toy(0)], None);
        for ins in d.demos[0].annotation.as_ref().unwrap() {
            assert!(d.inventory.contains(ins));
        }
    }
}
