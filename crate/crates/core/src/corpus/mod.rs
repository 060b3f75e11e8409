//! Input data model: trace corpora, derived call graphs, co-occurrence
//! similarity and partitions.
//!
//! Classes and use cases are interned as indices. A [`TraceDataset`] keeps its
//! class and use-case lists sorted, so class index order is lexicographic
//! order. Every algorithm relies on that for tie-breaking.

mod graph;
mod partition;
mod synth;

pub use graph::{cooccurrence_matrix, CallGraph, SimilarityMatrix};
pub(crate) use graph::jaccard_over_traces;
pub use partition::{Partition, PartitionJson};
pub use synth::{generate_synthetic, SyntheticCorpus};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("invalid generator parameters: {0}")]
    Generator(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// One runtime trace: the calls recorded while executing a single use case.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    pub use_case: usize,
    pub calls: Vec<(usize, usize)>,
}

/// A validated trace corpus. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDataset {
    classes: Vec<String>,
    use_cases: Vec<String>,
    traces: Vec<Trace>,
}

/// Wire form of the trace-corpus JSON file. Field order is alphabetical so
/// that serde emits sorted keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub classes: Vec<String>,
    pub traces: Vec<RawTrace>,
    pub use_cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrace {
    pub calls: Vec<(String, String)>,
    pub use_case: String,
}

fn check_unique(kind: &str, items: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for item in items {
        if !seen.insert(item.as_str()) {
            return Err(CorpusError::Invalid(format!("duplicate {kind} \"{item}\"")));
        }
    }
    Ok(())
}

impl TraceDataset {
    /// Validates a raw corpus and interns its names. Class and use-case lists
    /// are sorted; trace order is preserved.
    pub fn from_raw(raw: RawDataset) -> Result<Self> {
        check_unique("class", &raw.classes)?;
        check_unique("use case", &raw.use_cases)?;
        if raw.classes.len() < 2 {
            return Err(CorpusError::Invalid(format!(
                "at least 2 classes required, found {}",
                raw.classes.len()
            )));
        }
        if raw.traces.is_empty() {
            return Err(CorpusError::Invalid("at least 1 trace required".into()));
        }
        let mut classes = raw.classes;
        classes.sort();
        let mut use_cases = raw.use_cases;
        use_cases.sort();
        let class_idx: HashMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let uc_idx: HashMap<&str, usize> = use_cases
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect();

        let mut traces = Vec::with_capacity(raw.traces.len());
        for (t, rt) in raw.traces.iter().enumerate() {
            let use_case = *uc_idx.get(rt.use_case.as_str()).ok_or_else(|| {
                CorpusError::Invalid(format!("trace {t}: unknown use case \"{}\"", rt.use_case))
            })?;
            if rt.calls.is_empty() {
                return Err(CorpusError::Invalid(format!("trace {t}: empty call list")));
            }
            let lookup = |name: &str| {
                class_idx.get(name).copied().ok_or_else(|| {
                    CorpusError::Invalid(format!("trace {t}: unknown class \"{name}\""))
                })
            };
            let calls = rt
                .calls
                .iter()
                .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
                .collect::<Result<Vec<_>>>()?;
            traces.push(Trace { use_case, calls });
        }
        Ok(Self {
            classes,
            use_cases,
            traces,
        })
    }

    pub fn to_raw(&self) -> RawDataset {
        RawDataset {
            classes: self.classes.clone(),
            use_cases: self.use_cases.clone(),
            traces: self
                .traces
                .iter()
                .map(|t| RawTrace {
                    use_case: self.use_cases[t.use_case].clone(),
                    calls: t
                        .calls
                        .iter()
                        .map(|&(a, b)| (self.classes[a].clone(), self.classes[b].clone()))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_raw(serde_json::from_str(s)?)
    }

    /// Canonical serialization: sorted keys, sorted class and use-case lists,
    /// two-space indentation and a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_raw()).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn use_cases(&self) -> &[String] {
        &self.use_cases
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    /// Number of calls whose caller differs from the callee.
    pub fn non_self_calls(&self) -> u64 {
        self.traces
            .iter()
            .flat_map(|t| t.calls.iter())
            .filter(|(a, b)| a != b)
            .count() as u64
    }

    /// `touched[u][c]` is true when class `c` takes part (as caller or callee)
    /// in at least one trace of use case `u`.
    pub fn use_case_touches(&self) -> Vec<Vec<bool>> {
        let mut touched = vec![vec![false; self.classes.len()]; self.use_cases.len()];
        for t in &self.traces {
            for &(a, b) in &t.calls {
                touched[t.use_case][a] = true;
                touched[t.use_case][b] = true;
            }
        }
        touched
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<TraceDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TraceDataset::from_json_str(&text)
}

pub fn save_dataset(ds: &TraceDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ds.to_canonical_json()).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}
