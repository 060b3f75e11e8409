use super::{check_count, invalid, Result};
use crate::corpus::{CallGraph, Partition, TraceDataset};
use crate::metrics::cluster_factor;
use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hill-climbing steps allowed per restart.
pub const DEFAULT_BUNCH_BUDGET: usize = 1000;

/// Result of a restarted hill-climbing run.
#[derive(Debug, Clone)]
pub struct BunchOutcome {
    pub partition: Partition,
    pub mq: f64,
    /// The random starting label vectors, one per restart.
    pub starts: Vec<Vec<usize>>,
    pub start_mq: Vec<f64>,
    pub final_mq: Vec<f64>,
    pub steps: Vec<usize>,
}

/// Incrementally maintained MQ state for a label vector with labels `< cap`.
struct Climber<'g> {
    adjacency: &'g [Vec<(usize, u64)>],
    incident: &'g [u64],
    labels: Vec<usize>,
    sizes: Vec<usize>,
    intra: Vec<u64>,
    external: Vec<u64>,
}

impl<'g> Climber<'g> {
    fn new(
        graph: &CallGraph,
        adjacency: &'g [Vec<(usize, u64)>],
        incident: &'g [u64],
        labels: Vec<usize>,
        cap: usize,
    ) -> Self {
        let mut sizes = vec![0; cap];
        for &l in &labels {
            sizes[l] += 1;
        }
        let (intra, external) = crate::metrics::mq_terms(graph, &labels, cap);
        Self {
            adjacency,
            incident,
            labels,
            sizes,
            intra,
            external,
        }
    }

    fn mq(&self) -> f64 {
        self.intra
            .iter()
            .zip(&self.external)
            .map(|(&i, &e)| cluster_factor(i, e))
            .sum()
    }

    fn weight_to(&self, v: usize, cluster: usize) -> u64 {
        self.adjacency[v]
            .iter()
            .filter(|&&(u, _)| self.labels[u] == cluster)
            .map(|&(_, w)| w)
            .sum()
    }

    /// MQ change of moving `v` into `to`, plus the new (intra, external)
    /// terms of the source and target clusters.
    fn move_delta(&self, v: usize, to: usize) -> (f64, [(u64, u64); 2]) {
        let from = self.labels[v];
        let (w_from, w_to, total) = (self.weight_to(v, from), self.weight_to(v, to), self.incident[v]);
        let src = (
            self.intra[from] - w_from,
            self.external[from] - (total - w_from) + w_from,
        );
        let dst = (
            self.intra[to] + w_to,
            self.external[to] - w_to + (total - w_to),
        );
        let before = cluster_factor(self.intra[from], self.external[from])
            + cluster_factor(self.intra[to], self.external[to]);
        let after = cluster_factor(src.0, src.1) + cluster_factor(dst.0, dst.1);
        (after - before, [src, dst])
    }

    fn apply(&mut self, v: usize, to: usize, terms: [(u64, u64); 2]) {
        let from = self.labels[v];
        (self.intra[from], self.external[from]) = terms[0];
        (self.intra[to], self.external[to]) = terms[1];
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
        self.labels[v] = to;
    }

    /// Single-class moves to every other non-empty cluster, plus a move into
    /// the first empty cluster slot (when one exists and the class is not
    /// already alone).
    fn neighborhood(&self) -> Vec<(usize, usize)> {
        let fresh = self.sizes.iter().position(|&s| s == 0);
        let mut moves = Vec::new();
        for (v, &from) in self.labels.iter().enumerate() {
            for (c, &s) in self.sizes.iter().enumerate() {
                if c != from && s > 0 {
                    moves.push((v, c));
                }
            }
            if let Some(c) = fresh {
                if self.sizes[from] > 1 {
                    moves.push((v, c));
                }
            }
        }
        moves
    }
}

/// Restarted steepest-ascent hill climbing maximizing MQ.
///
/// Each restart draws a uniform random assignment into at most
/// `n_partitions` clusters. Every step samples `ceil(neighbor_fraction * |N|)`
/// (at least one) moves from the neighborhood `N`, takes the best, and stops
/// when it does not strictly improve MQ or after `budget` steps.
pub fn hill_climb(
    ds: &TraceDataset,
    n_partitions: usize,
    init_population: usize,
    neighbor_fraction: f64,
    seed: u64,
    budget: usize,
) -> Result<BunchOutcome> {
    let n = ds.n_classes();
    check_count("n_partitions", n_partitions, n)?;
    if init_population < 2 {
        return Err(invalid("init_population", "must be >= 2"));
    }
    if !(0.0..=1.0).contains(&neighbor_fraction) {
        return Err(invalid(
            "neighbor_fraction",
            format!("must lie in [0, 1], got {neighbor_fraction}"),
        ));
    }
    let graph = CallGraph::build(ds);
    let adjacency = graph.adjacency();
    let incident: Vec<u64> = adjacency
        .iter()
        .map(|nbrs| nbrs.iter().map(|&(_, w)| w).sum())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut outcome = BunchOutcome {
        partition: Partition::single(n),
        mq: f64::NEG_INFINITY,
        starts: Vec::with_capacity(init_population),
        start_mq: Vec::with_capacity(init_population),
        final_mq: Vec::with_capacity(init_population),
        steps: Vec::with_capacity(init_population),
    };
    let mut best_labels = vec![0; n];

    for _ in 0..init_population {
        let start: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_partitions)).collect();
        let mut climber = Climber::new(&graph, &adjacency, &incident, start.clone(), n_partitions);
        outcome.start_mq.push(climber.mq());
        outcome.starts.push(start);

        let mut steps = 0;
        while steps < budget {
            let moves = climber.neighborhood();
            if moves.is_empty() {
                break;
            }
            let want = ((neighbor_fraction * moves.len() as f64).ceil() as usize).clamp(1, moves.len());
            let sampled: Vec<usize> = if want == moves.len() {
                (0..moves.len()).collect()
            } else {
                let mut idx = index::sample(&mut rng, moves.len(), want).into_vec();
                idx.sort_unstable();
                idx
            };
            let mut best: Option<(f64, usize, [(u64, u64); 2])> = None;
            for i in sampled {
                let (v, to) = moves[i];
                let (delta, terms) = climber.move_delta(v, to);
                if best.map_or(true, |(d, _, _)| delta > d) {
                    best = Some((delta, i, terms));
                }
            }
            match best {
                Some((delta, i, terms)) if delta > 1e-12 => {
                    let (v, to) = moves[i];
                    climber.apply(v, to, terms);
                    steps += 1;
                }
                _ => break,
            }
        }
        let mq = climber.mq();
        outcome.final_mq.push(mq);
        outcome.steps.push(steps);
        if mq > outcome.mq {
            outcome.mq = mq;
            best_labels = climber.labels;
        }
    }
    outcome.partition = Partition::from_labels(&best_labels);
    Ok(outcome)
}

pub fn partition_bunch(
    ds: &TraceDataset,
    n_partitions: usize,
    init_population: usize,
    neighbor_fraction: f64,
    seed: u64,
    budget: usize,
) -> Result<Partition> {
    hill_climb(ds, n_partitions, init_population, neighbor_fraction, seed, budget)
        .map(|o| o.partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SyntheticCorpus;
    use crate::metrics::MetricContext;

    #[test]
    fn never_worse_than_its_starts() {
        for seed in 0..10 {
            let s = SyntheticCorpus::generate(seed, 16, 4, 0.7).unwrap();
            let o = hill_climb(&s.dataset, 4, 5, 0.3, seed, DEFAULT_BUNCH_BUDGET).unwrap();
            let best_start = o.start_mq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(o.mq >= best_start - 1e-12);
            for (a, b) in o.start_mq.iter().zip(&o.final_mq) {
                assert!(b >= a);
            }
            let ctx = MetricContext::new(&s.dataset);
            assert!((ctx.mq(&o.partition).unwrap() - o.mq).abs() < 1e-9);
            assert!(o.partition.k() <= 4);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = SyntheticCorpus::generate(3, 20, 4, 0.6).unwrap();
        let a = partition_bunch(&s.dataset, 5, 4, 0.5, 11, 1000).unwrap();
        let b = partition_bunch(&s.dataset, 5, 4, 0.5, 11, 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_budget_returns_best_start() {
        let s = SyntheticCorpus::generate(3, 12, 3, 0.6).unwrap();
        let o = hill_climb(&s.dataset, 3, 6, 1.0, 1, 0).unwrap();
        assert_eq!(o.final_mq, o.start_mq);
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        let s = SyntheticCorpus::generate(3, 12, 3, 0.6).unwrap();
        assert!(partition_bunch(&s.dataset, 1, 4, 0.5, 0, 10).is_err());
        assert!(partition_bunch(&s.dataset, 3, 1, 0.5, 0, 10).is_err());
        assert!(partition_bunch(&s.dataset, 3, 4, 1.5, 0, 10).is_err());
        assert!(partition_bunch(&s.dataset, 3, 4, 0.0, 0, 10).is_ok());
    }
}
