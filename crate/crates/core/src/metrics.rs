//! Partition quality metrics and the signed-weight loss.
//!
//! | metric | direction | definition |
//! |--------|-----------|------------|
//! | BCP | minimize | mean over clusters of the base-2 entropy of use-case touch counts |
//! | ICP | minimize | fraction of non-self calls crossing cluster boundaries |
//! | SM  | maximize | mean cohesion `μᵢ/Nᵢ²` minus mean coupling `σᵢⱼ/(2NᵢNⱼ)` over distinct linked pairs |
//! | MQ  | maximize | sum of cluster factors `2μᵢ/(2μᵢ + Σⱼ εᵢⱼ)` over call weights |
//! | IFN | minimize | mean number of classes per cluster called from outside it |

use crate::corpus::{CallGraph, Partition, TraceDataset};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("partition covers {got} classes, dataset has {expected}")]
    Mismatch { expected: usize, got: usize },
    #[error("empty call set")]
    EmptyCallSet,
    #[error("non-finite metric value: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bcp,
    Icp,
    Sm,
    Mq,
    Ifn,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Bcp, Metric::Icp, Metric::Sm, Metric::Mq, Metric::Ifn];

    pub fn direction(self) -> Direction {
        match self {
            Metric::Bcp | Metric::Icp | Metric::Ifn => Direction::Minimize,
            Metric::Sm | Metric::Mq => Direction::Maximize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Bcp => "bcp",
            Metric::Icp => "icp",
            Metric::Sm => "sm",
            Metric::Mq => "mq",
            Metric::Ifn => "ifn",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Bcp => "BCP",
            Metric::Icp => "ICP",
            Metric::Sm => "SM",
            Metric::Mq => "MQ",
            Metric::Ifn => "IFN",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The five quality scores of one partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub bcp: f64,
    pub icp: f64,
    pub sm: f64,
    pub mq: f64,
    pub ifn: f64,
}

impl MetricVector {
    pub const CSV_HEADER: &'static str = "bcp,icp,sm,mq,ifn";

    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Bcp => self.bcp,
            Metric::Icp => self.icp,
            Metric::Sm => self.sm,
            Metric::Mq => self.mq,
            Metric::Ifn => self.ifn,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.bcp, self.icp, self.sm, self.mq, self.ifn]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            bcp: a[0],
            icp: a[1],
            sm: a[2],
            mq: a[3],
            ifn: a[4],
        }
    }

    /// `bcp,icp,sm,mq,ifn` with six decimals.
    pub fn to_csv_row(&self) -> String {
        self.to_array()
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Signed metric weights for `loss = Σ wᵢ·mᵢ` in (BCP, ICP, SM, MQ, IFN) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub weights: [f64; 5],
}

impl Default for LossSpec {
    /// +1 for minimized metrics, -1 for maximized ones.
    fn default() -> Self {
        let mut weights = [0.0; 5];
        for (w, m) in weights.iter_mut().zip(Metric::ALL) {
            *w = match m.direction() {
                Direction::Minimize => 1.0,
                Direction::Maximize => -1.0,
            };
        }
        Self { weights }
    }
}

impl LossSpec {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            weights: self.weights.map(|w| w * c),
        }
    }
}

pub fn loss(m: &MetricVector, spec: &LossSpec) -> Result<f64> {
    let values = m.to_array();
    if let Some(v) = values.iter().chain(spec.weights.iter()).find(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite(v.to_string()));
    }
    Ok(values.iter().zip(spec.weights.iter()).map(|(v, w)| v * w).sum())
}

/// Dataset-derived structures shared by all metric computations. Build once
/// and evaluate many partitions against it.
#[derive(Debug, Clone)]
pub struct MetricContext {
    n: usize,
    graph: CallGraph,
    /// Classes touched per use case, as index lists.
    touches: Vec<Vec<usize>>,
    total_calls: u64,
}

impl MetricContext {
    pub fn new(ds: &TraceDataset) -> Self {
        let graph = CallGraph::build(ds);
        let touches = ds
            .use_case_touches()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(c, &t)| t.then_some(c))
                    .collect()
            })
            .collect();
        let total_calls = graph.total_weight();
        Self {
            n: ds.n_classes(),
            graph,
            touches,
            total_calls,
        }
    }

    pub fn graph(&self) -> &CallGraph {
        &self.graph
    }

    fn check(&self, p: &Partition) -> Result<()> {
        if p.len() != self.n {
            return Err(MetricError::Mismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn bcp(&self, p: &Partition) -> Result<f64> {
        self.check(p)?;
        let k = p.k();
        // counts[cluster][use case]
        let mut counts = vec![vec![0u64; self.touches.len()]; k];
        for (u, classes) in self.touches.iter().enumerate() {
            for &c in classes {
                counts[p.cluster_of(c)][u] += 1;
            }
        }
        let total: f64 = counts.iter().map(|row| entropy_bits(row)).sum();
        Ok(total / k as f64)
    }

    pub fn icp(&self, p: &Partition) -> Result<f64> {
        self.check(p)?;
        if self.total_calls == 0 {
            return Err(MetricError::EmptyCallSet);
        }
        let crossing: u64 = self
            .graph
            .directed_edges()
            .filter(|&((a, b), _)| p.cluster_of(a) != p.cluster_of(b))
            .map(|(_, w)| w)
            .sum();
        Ok(crossing as f64 / self.total_calls as f64)
    }

    pub fn sm(&self, p: &Partition) -> Result<f64> {
        self.check(p)?;
        let k = p.k();
        let sizes = p.sizes();
        let mut intra = vec![0u64; k];
        let mut inter = vec![0u64; k * k];
        for ((a, b), _) in self.graph.edges() {
            let (ca, cb) = (p.cluster_of(a), p.cluster_of(b));
            if ca == cb {
                intra[ca] += 1;
            } else {
                inter[ca.min(cb) * k + ca.max(cb)] += 1;
            }
        }
        let cohesion: f64 = (0..k)
            .filter(|&i| sizes[i] > 1)
            .map(|i| intra[i] as f64 / (sizes[i] * sizes[i]) as f64)
            .sum::<f64>()
            / k as f64;
        let coupling = if k > 1 {
            let mut s = 0.0;
            for i in 0..k {
                for j in i + 1..k {
                    s += inter[i * k + j] as f64 / (2.0 * sizes[i] as f64 * sizes[j] as f64);
                }
            }
            s / (k * (k - 1) / 2) as f64
        } else {
            0.0
        };
        Ok(cohesion - coupling)
    }

    pub fn mq(&self, p: &Partition) -> Result<f64> {
        self.check(p)?;
        let (intra, external) = mq_terms(&self.graph, p.assignment(), p.k());
        Ok(intra
            .iter()
            .zip(&external)
            .map(|(&mu, &eps)| cluster_factor(mu, eps))
            .sum())
    }

    pub fn ifn(&self, p: &Partition) -> Result<f64> {
        self.check(p)?;
        let mut is_interface = vec![false; self.n];
        for ((a, b), _) in self.graph.directed_edges() {
            if p.cluster_of(a) != p.cluster_of(b) {
                is_interface[b] = true;
            }
        }
        let count = is_interface.iter().filter(|&&x| x).count();
        Ok(count as f64 / p.k() as f64)
    }

    pub fn evaluate(&self, p: &Partition) -> Result<MetricVector> {
        Ok(MetricVector {
            bcp: self.bcp(p)?,
            icp: self.icp(p)?,
            sm: self.sm(p)?,
            mq: self.mq(p)?,
            ifn: self.ifn(p)?,
        })
    }
}

fn entropy_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / total;
            q * q.log2()
        })
        .sum::<f64>()
}

/// Per-cluster intra call weight and external (both directions) call weight
/// for an arbitrary label vector with labels `< k`.
pub(crate) fn mq_terms(graph: &CallGraph, labels: &[usize], k: usize) -> (Vec<u64>, Vec<u64>) {
    let mut intra = vec![0u64; k];
    let mut external = vec![0u64; k];
    for ((a, b), w) in graph.edges() {
        let (ca, cb) = (labels[a], labels[b]);
        if ca == cb {
            intra[ca] += w;
        } else {
            external[ca] += w;
            external[cb] += w;
        }
    }
    (intra, external)
}

pub(crate) fn cluster_factor(intra: u64, external: u64) -> f64 {
    let denom = 2 * intra + external;
    if denom == 0 {
        0.0
    } else {
        (2 * intra) as f64 / denom as f64
    }
}

pub fn bcp(ds: &TraceDataset, p: &Partition) -> Result<f64> {
    MetricContext::new(ds).bcp(p)
}

pub fn icp(ds: &TraceDataset, p: &Partition) -> Result<f64> {
    MetricContext::new(ds).icp(p)
}

pub fn sm(ds: &TraceDataset, p: &Partition) -> Result<f64> {
    MetricContext::new(ds).sm(p)
}

pub fn mq(ds: &TraceDataset, p: &Partition) -> Result<f64> {
    MetricContext::new(ds).mq(p)
}

pub fn ifn(ds: &TraceDataset, p: &Partition) -> Result<f64> {
    MetricContext::new(ds).ifn(p)
}

pub fn evaluate(ds: &TraceDataset, p: &Partition) -> Result<MetricVector> {
    MetricContext::new(ds).evaluate(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RawDataset, RawTrace};

    /// Builds a dataset from `(use case, calls)` traces over the given classes.
    fn ds(classes: &[&str], traces: &[(&str, &[(&str, &str)])]) -> TraceDataset {
        let mut ucs: Vec<String> = traces.iter().map(|(u, _)| u.to_string()).collect();
        ucs.sort();
        ucs.dedup();
        TraceDataset::from_raw(RawDataset {
            classes: classes.iter().map(|s| s.to_string()).collect(),
            use_cases: ucs,
            traces: traces
                .iter()
                .map(|(u, calls)| RawTrace {
                    use_case: u.to_string(),
                    calls: calls
                        .iter()
                        .map(|(a, b)| (a.to_string(), b.to_string()))
                        .collect(),
                })
                .collect(),
        })
        .unwrap()
    }

    fn part(labels: &[usize]) -> Partition {
        Partition::from_labels(labels)
    }

    #[test]
    fn bcp_zero_when_each_cluster_has_one_use_case() {
        let d = ds(
            &["A", "B", "C", "D"],
            &[("u", &[("A", "B")]), ("v", &[("C", "D")])],
        );
        assert_eq!(bcp(&d, &part(&[0, 0, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn bcp_one_bit_for_even_split() {
        let d = ds(
            &["A", "B", "C", "D"],
            &[("u", &[("A", "B")]), ("v", &[("C", "D")])],
        );
        // -2 * 0.5 * log2(0.5) = 1
        assert!((bcp(&d, &part(&[0, 0, 0, 0])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn icp_examples() {
        let d = ds(
            &["A", "B", "C"],
            &[("u", &[("A", "B"), ("B", "A"), ("A", "B"), ("B", "C")])],
        );
        assert_eq!(icp(&d, &part(&[0, 0, 0])).unwrap(), 0.0);
        assert_eq!(icp(&d, &part(&[0, 0, 1])).unwrap(), 0.25);
        assert_eq!(icp(&d, &part(&[0, 1, 2])).unwrap(), 1.0);
    }

    #[test]
    fn icp_rejects_empty_call_set() {
        let d = ds(&["A", "B"], &[("u", &[("A", "A")])]);
        assert_eq!(icp(&d, &part(&[0, 1])), Err(MetricError::EmptyCallSet));
    }

    #[test]
    fn sm_examples() {
        let d = ds(&["A", "B"], &[("u", &[("A", "B")])]);
        assert!((sm(&d, &part(&[0, 0])).unwrap() - 0.25).abs() < 1e-15);
        assert!((sm(&d, &part(&[0, 1])).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn mq_examples() {
        let d = ds(&["A", "B"], &[("u", &[("A", "B"), ("B", "A")])]);
        assert_eq!(mq(&d, &part(&[0, 0])).unwrap(), 1.0);
        let d2 = ds(
            &["A", "B", "C", "D"],
            &[("u", &[("A", "B"), ("C", "D"), ("D", "C")])],
        );
        assert_eq!(mq(&d2, &part(&[0, 0, 1, 1])).unwrap(), 2.0);
        // cluster {A,B}: μ=2 (A→B twice); inter weight 4 → CF = 4/8.
        // cluster {C}: μ=0 → CF = 0.
        let d3 = ds(
            &["A", "B", "C"],
            &[(
                "u",
                &[("A", "B"), ("A", "B"), ("A", "C"), ("C", "A"), ("B", "C"), ("C", "B")],
            )],
        );
        assert!((mq(&d3, &part(&[0, 0, 1])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ifn_examples() {
        let d = ds(
            &["A", "B", "C", "D"],
            &[("u", &[("A", "B"), ("B", "C"), ("C", "D")])],
        );
        assert_eq!(ifn(&d, &part(&[0, 0, 0, 0])).unwrap(), 0.0);
        // only C (cluster 2) is called from cluster 1
        assert_eq!(ifn(&d, &part(&[0, 0, 1, 1])).unwrap(), 0.5);
        // complete directed graph over singletons: every class is an interface
        let full = ds(
            &["A", "B", "C"],
            &[(
                "u",
                &[("A", "B"), ("B", "A"), ("A", "C"), ("C", "A"), ("B", "C"), ("C", "B")],
            )],
        );
        assert_eq!(ifn(&full, &part(&[0, 1, 2])).unwrap(), 1.0);
    }

    #[test]
    fn mismatch_is_reported() {
        let d = ds(&["A", "B"], &[("u", &[("A", "B")])]);
        assert!(matches!(
            evaluate(&d, &part(&[0, 0, 1])),
            Err(MetricError::Mismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn loss_examples() {
        let spec = LossSpec::default();
        assert_eq!(spec.weights, [1.0, 1.0, -1.0, -1.0, 1.0]);
        let zero = MetricVector::from_array([0.0; 5]);
        assert_eq!(loss(&zero, &spec).unwrap(), 0.0);
        let ones = MetricVector::from_array([1.0; 5]);
        assert_eq!(loss(&ones, &spec).unwrap(), 1.0);
        let mut lower = ones;
        lower.icp = 0.5;
        assert!(loss(&lower, &spec).unwrap() < loss(&ones, &spec).unwrap());
        let nan = MetricVector::from_array([f64::NAN, 0.0, 0.0, 0.0, 0.0]);
        assert!(loss(&nan, &spec).is_err());
    }

    #[test]
    fn csv_row_has_six_decimals() {
        let m = MetricVector::from_array([1.0, 0.25, -0.5, 2.0, 1.0 / 3.0]);
        assert_eq!(m.to_csv_row(), "1.000000,0.250000,-0.500000,2.000000,0.333333");
    }
}
