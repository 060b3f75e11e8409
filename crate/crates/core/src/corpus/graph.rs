use super::TraceDataset;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Weighted class graph derived from runtime calls. Self-calls are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    n: usize,
    directed: BTreeMap<(usize, usize), u64>,
    undirected: BTreeMap<(usize, usize), u64>,
    dropped_self_calls: u64,
}

impl CallGraph {
    pub fn build(ds: &TraceDataset) -> Self {
        let mut directed = BTreeMap::new();
        let mut dropped = 0u64;
        for t in ds.traces() {
            for &(a, b) in &t.calls {
                if a == b {
                    dropped += 1;
                    continue;
                }
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        let mut undirected = BTreeMap::new();
        for (&(a, b), &w) in &directed {
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += w;
        }
        if dropped > 0 {
            log::debug!("call graph: dropped {dropped} self-calls");
        }
        Self {
            n: ds.n_classes(),
            directed,
            undirected,
            dropped_self_calls: dropped,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn directed_weight(&self, from: usize, to: usize) -> u64 {
        self.directed.get(&(from, to)).copied().unwrap_or(0)
    }

    /// Call count between the pair in either direction.
    pub fn edge_weight(&self, a: usize, b: usize) -> u64 {
        self.undirected
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0)
    }

    /// Directed entries `((caller, callee), count)` in index order.
    pub fn directed_edges(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.directed.iter().map(|(&k, &w)| (k, w))
    }

    /// Undirected entries `((a, b), count)` with `a < b`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.undirected.iter().map(|(&k, &w)| (k, w))
    }

    pub fn n_edges(&self) -> usize {
        self.undirected.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.directed.values().sum()
    }

    pub fn dropped_self_calls(&self) -> u64 {
        self.dropped_self_calls
    }

    /// Undirected adjacency lists with weights.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(a, b), &w) in &self.undirected {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }

    /// `caller,callee,count`, one row per directed pair.
    pub fn to_csv(&self, ds: &TraceDataset) -> String {
        let mut out = String::from("caller,callee,count\n");
        for (&(a, b), &w) in &self.directed {
            let _ = writeln!(out, "{},{},{}", ds.classes()[a], ds.classes()[b], w);
        }
        out
    }
}

/// Dense symmetric matrix over classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }
}

/// Jaccard similarity of the trace sets each class participates in.
pub fn cooccurrence_matrix(ds: &TraceDataset) -> SimilarityMatrix {
    jaccard_over_traces(ds.n_classes(), ds.traces().iter().map(|t| t.calls.as_slice()))
}

pub(crate) fn jaccard_over_traces<'a>(
    n: usize,
    traces: impl Iterator<Item = &'a [(usize, usize)]>,
) -> SimilarityMatrix {
    // membership[c] = sorted trace ids containing class c
    let mut membership: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, calls) in traces.enumerate() {
        for &(a, b) in calls {
            for c in [a, b] {
                if membership[c].last() != Some(&t) {
                    membership[c].push(t);
                }
            }
        }
    }
    let mut m = SimilarityMatrix::zeros(n);
    for i in 0..n {
        if !membership[i].is_empty() {
            m.set(i, i, 1.0);
        }
        for j in i + 1..n {
            let inter = sorted_intersection_len(&membership[i], &membership[j]);
            let union = membership[i].len() + membership[j].len() - inter;
            if union > 0 {
                m.set(i, j, inter as f64 / union as f64);
            }
        }
    }
    m
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
