use super::{CorpusError, Partition, RawDataset, RawTrace, Result, TraceDataset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRACES_PER_USE_CASE: usize = 3;

/// A generated corpus together with its planted ground-truth grouping.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dataset: TraceDataset,
    pub planted: Partition,
}

/// Deterministic synthetic corpus. See [`SyntheticCorpus::generate`].
pub fn generate_synthetic(
    seed: u64,
    n_classes: usize,
    n_use_cases: usize,
    modularity: f64,
) -> Result<TraceDataset> {
    SyntheticCorpus::generate(seed, n_classes, n_use_cases, modularity).map(|s| s.dataset)
}

fn padded(prefix: &str, i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

impl SyntheticCorpus {
    /// Classes are split into `g = min(n_use_cases, n_classes / 2)` contiguous
    /// groups of at least two classes; use case `u` belongs to group `u % g`.
    /// Each use case gets three traces of `2 * |group|` calls. A call stays
    /// inside the use case's group with probability `modularity`, otherwise it
    /// joins a uniformly random pair of distinct classes. The first `|group|`
    /// in-group calls of a trace walk a random cycle through the group, so at
    /// `modularity = 1` every trace touches its whole group and the group is
    /// connected.
    pub fn generate(
        seed: u64,
        n_classes: usize,
        n_use_cases: usize,
        modularity: f64,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(CorpusError::Generator(format!(
                "n_classes must be >= 2, got {n_classes}"
            )));
        }
        if n_use_cases < 1 {
            return Err(CorpusError::Generator("n_use_cases must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&modularity) {
            return Err(CorpusError::Generator(format!(
                "modularity must lie in [0, 1], got {modularity}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_groups = n_use_cases.min(n_classes / 2).max(1);
        let group_of: Vec<usize> = (0..n_classes).map(|i| i * n_groups / n_classes).collect();
        let mut members = vec![Vec::new(); n_groups];
        for (c, &g) in group_of.iter().enumerate() {
            members[g].push(c);
        }

        let classes: Vec<String> = (0..n_classes).map(|i| padded("C", i, n_classes)).collect();
        let use_cases: Vec<String> = (0..n_use_cases)
            .map(|i| padded("uc", i, n_use_cases))
            .collect();

        let mut traces = Vec::new();
        for u in 0..n_use_cases {
            let group = &members[u % n_groups];
            let size = group.len();
            for _ in 0..TRACES_PER_USE_CASE {
                let mut order = group.clone();
                order.shuffle(&mut rng);
                let mut in_group = 0usize;
                let mut calls = Vec::with_capacity(2 * size);
                for _ in 0..2 * size {
                    let (a, b) = if rng.gen::<f64>() < modularity {
                        let pair = if in_group < size {
                            (order[in_group], order[(in_group + 1) % size])
                        } else {
                            distinct_pair(&mut rng, group)
                        };
                        in_group += 1;
                        pair
                    } else {
                        let all: Vec<usize> = (0..n_classes).collect();
                        distinct_pair(&mut rng, &all)
                    };
                    calls.push((classes[a].clone(), classes[b].clone()));
                }
                traces.push(RawTrace {
                    use_case: use_cases[u].clone(),
                    calls,
                });
            }
        }
        let dataset = TraceDataset::from_raw(RawDataset {
            classes,
            use_cases,
            traces,
        })?;
        Ok(Self {
            dataset,
            planted: Partition::from_labels(&group_of),
        })
    }
}

fn distinct_pair(rng: &mut ChaCha8Rng, pool: &[usize]) -> (usize, usize) {
    let a = rng.gen_range(0..pool.len());
    let mut b = rng.gen_range(0..pool.len() - 1);
    if b >= a {
        b += 1;
    }
    (pool[a], pool[b])
}
