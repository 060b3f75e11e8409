use super::{Result, StatsError};
use crate::metrics::Direction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Repeated-run values of one metric under one treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.len() < 2 {
            return Err(StatsError::TooFewValues(label));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(label));
        }
        Ok(Self { label, values })
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// True when every value is identical.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScottKnottConfig {
    pub alpha: f64,
    pub bootstrap_resamples: usize,
    /// Minimum |Cliff's delta| for a split to count as non-trivial.
    pub cliffs_delta: f64,
    pub seed: u64,
}

impl Default for ScottKnottConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap_resamples: 512,
            cliffs_delta: 0.147,
            seed: 0,
        }
    }
}

/// Rank per label; 1 is best for the metric's direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub ranks: BTreeMap<String, usize>,
}

impl RankTable {
    pub fn rank(&self, label: &str) -> Option<usize> {
        self.ranks.get(label).copied()
    }

    pub fn n_ranks(&self) -> usize {
        self.ranks.values().copied().max().unwrap_or(0)
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.ranks.keys().map(String::as_str).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Cliff's delta: `(#{x > y} - #{x < y}) / (|xs| |ys|)`.
pub fn cliffs_delta(xs: &[f64], ys: &[f64]) -> f64 {
    let mut more = 0i64;
    let mut less = 0i64;
    for x in xs {
        for y in ys {
            if x > y {
                more += 1;
            } else if x < y {
                less += 1;
            }
        }
    }
    (more - less) as f64 / (xs.len() * ys.len()) as f64
}

fn welch_statistic(y: &[f64], z: &[f64]) -> f64 {
    let delta = (mean(z) - mean(y)).abs();
    let s = variance(y) / y.len() as f64 + variance(z) / z.len() as f64;
    if s > 0.0 {
        delta / s.sqrt()
    } else {
        delta
    }
}

/// Bootstrap test for a difference in means: both samples are shifted onto
/// the pooled mean and resampled. The p-value is `(r + 1) / (B + 1)` where `r`
/// counts resamples whose statistic reaches the observed one.
pub fn bootstrap_p_value(y: &[f64], z: &[f64], resamples: usize, seed: u64) -> f64 {
    let observed = welch_statistic(y, z);
    let pooled = (y.iter().sum::<f64>() + z.iter().sum::<f64>()) / (y.len() + z.len()) as f64;
    let (my, mz) = (mean(y), mean(z));
    let yhat: Vec<f64> = y.iter().map(|v| v - my + pooled).collect();
    let zhat: Vec<f64> = z.iter().map(|v| v - mz + pooled).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |src: &[f64]| -> Vec<f64> {
        (0..src.len()).map(|_| src[rng.gen_range(0..src.len())]).collect()
    };
    let exceed = (0..resamples)
        .filter(|_| {
            let ys = draw(&yhat);
            let zs = draw(&zhat);
            welch_statistic(&ys, &zs) >= observed
        })
        .count();
    (exceed + 1) as f64 / (resamples + 1) as f64
}

/// True when two pooled groups differ both significantly and non-trivially.
pub fn groups_differ(y: &[f64], z: &[f64], cfg: &ScottKnottConfig) -> bool {
    cliffs_delta(y, z).abs() >= cfg.cliffs_delta
        && bootstrap_p_value(y, z, cfg.bootstrap_resamples, cfg.seed) < cfg.alpha
}

/// Recursive bi-clustering of mean-sorted sample sets.
///
/// Sets are sorted by mean (best first for `direction`, ties by label). The
/// cut maximizing the between-group sum of squares is kept only when the two
/// sides differ by the bootstrap test at `alpha` and by Cliff's delta; each
/// side is then split again. Groups get consecutive ranks from 1.
pub fn scott_knott(
    samples: &[SampleSet],
    direction: Direction,
    cfg: &ScottKnottConfig,
) -> Result<RankTable> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut seen = BTreeSet::new();
    for s in samples {
        if !seen.insert(s.label.as_str()) {
            return Err(StatsError::DuplicateLabel(s.label.clone()));
        }
        if s.values.len() < 2 {
            return Err(StatsError::TooFewValues(s.label.clone()));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(s.label.clone()));
        }
    }
    // Maximizing is minimizing the negated values.
    let oriented: Vec<(String, Vec<f64>)> = samples
        .iter()
        .map(|s| {
            let v = match direction {
                Direction::Minimize => s.values.clone(),
                Direction::Maximize => s.values.iter().map(|x| -x).collect(),
            };
            (s.label.clone(), v)
        })
        .collect();
    let mut order: Vec<usize> = (0..oriented.len()).collect();
    order.sort_by(|&a, &b| {
        mean(&oriented[a].1)
            .total_cmp(&mean(&oriented[b].1))
            .then_with(|| oriented[a].0.cmp(&oriented[b].0))
    });
    let sets: Vec<&[f64]> = order.iter().map(|&i| oriented[i].1.as_slice()).collect();

    let mut groups = Vec::new();
    bisect(&sets, 0, sets.len(), cfg, &mut groups);

    let mut ranks = BTreeMap::new();
    for (rank, (lo, hi)) in groups.into_iter().enumerate() {
        for &i in &order[lo..hi] {
            ranks.insert(oriented[i].0.clone(), rank + 1);
        }
    }
    Ok(RankTable { ranks })
}

fn pooled(sets: &[&[f64]]) -> Vec<f64> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

fn bisect(
    sets: &[&[f64]],
    lo: usize,
    hi: usize,
    cfg: &ScottKnottConfig,
    groups: &mut Vec<(usize, usize)>,
) {
    if hi - lo < 2 {
        groups.push((lo, hi));
        return;
    }
    let all = pooled(&sets[lo..hi]);
    let m = mean(&all);
    let mut best: Option<(f64, usize)> = None;
    for cut in lo + 1..hi {
        let left = pooled(&sets[lo..cut]);
        let right = pooled(&sets[cut..hi]);
        let tau = left.len() as f64 * (mean(&left) - m).powi(2)
            + right.len() as f64 * (mean(&right) - m).powi(2);
        if best.map_or(true, |(t, _)| tau > t) {
            best = Some((tau, cut));
        }
    }
    let (_, cut) = best.expect("at least one cut");
    let left = pooled(&sets[lo..cut]);
    let right = pooled(&sets[cut..hi]);
    if groups_differ(&left, &right, cfg) {
        bisect(sets, lo, cut, cfg, groups);
        bisect(sets, cut, hi, cfg, groups);
    } else {
        groups.push((lo, hi));
    }
}
