//! Tree-of-Parzen-Estimators.
//!
//! Past trials are split at the `gamma` quantile of their losses into a best
//! set and a rest set. Each dimension gets two independent Parzen mixtures,
//! `l` over the best set and `g` over the rest set, built from truncated
//! Gaussian kernels (discretized on integer dimensions) plus one uniform
//! prior component. Candidates are drawn from `l` and the one maximizing
//! `l(x) / g(x)` is evaluated next.

use super::{
    run_trial, sample_random, Dimension, DimKind, Objective, SearchSpace, Trial, TuneResult,
    TuneSettings,
};
use crate::partitioners::Params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeSettings {
    pub gamma: f64,
    pub n_candidates: usize,
    /// Trials (default included) evaluated before the model takes over.
    pub n_startup: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_candidates: 24,
            n_startup: 20,
        }
    }
}

/// Indices of the best and rest sets. Losses are ordered ascending, ties by
/// index; the best set holds `max(1, ceil(gamma * n))` trials.
pub fn split_best_rest(losses: &[f64], gamma: f64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let n_best = ((gamma * losses.len() as f64).ceil() as usize)
        .max(1)
        .min(losses.len());
    let rest = order.split_off(n_best);
    (order, rest)
}

/// Index of the candidate with the largest `log l - log g`; first on ties.
pub fn select_candidate(log_l: &[f64], log_g: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (l, g)) in log_l.iter().zip(log_g).enumerate() {
        let score = l - g;
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// One-dimensional Parzen mixture over `[low, high]` in internal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Parzen {
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    low: f64,
    high: f64,
    discrete: bool,
}

impl Parzen {
    /// Each observation gets a kernel whose width is the larger of the gaps to
    /// its sorted neighbours (the bounds act as outer neighbours), clipped to
    /// `[(high - low) / min(100, n + 1), high - low]`.
    pub fn fit(observations: &[f64], low: f64, high: f64, discrete: bool) -> Self {
        let mut mus: Vec<f64> = observations.to_vec();
        mus.sort_by(f64::total_cmp);
        let n = mus.len();
        let span = high - low;
        let min_sigma = span / (n + 1).min(100) as f64;
        let sigmas = (0..n)
            .map(|i| {
                let left = mus[i] - if i == 0 { low } else { mus[i - 1] };
                let right = if i + 1 == n { high } else { mus[i + 1] } - mus[i];
                left.max(right).clamp(min_sigma, span)
            })
            .collect();
        Self {
            mus,
            sigmas,
            low,
            high,
            discrete,
        }
    }

    fn components(&self) -> usize {
        self.mus.len() + 1
    }

    /// Mass of kernel `i` over `[a, b]`.
    fn kernel_mass(&self, i: usize, a: f64, b: f64) -> f64 {
        let (mu, s) = (self.mus[i], self.sigmas[i]);
        (std_normal_cdf((b - mu) / s) - std_normal_cdf((a - mu) / s)).max(0.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let w = 1.0 / self.components() as f64;
        if self.discrete {
            let count = self.high - self.low + 1.0;
            let (lo, hi) = (self.low - 0.5, self.high + 0.5);
            let kernels: f64 = (0..self.mus.len())
                .map(|i| {
                    let z = self.kernel_mass(i, lo, hi);
                    if z > 0.0 {
                        self.kernel_mass(i, x - 0.5, x + 0.5) / z
                    } else {
                        0.0
                    }
                })
                .sum();
            w * (kernels + 1.0 / count)
        } else {
            let kernels: f64 = (0..self.mus.len())
                .map(|i| {
                    let (mu, s) = (self.mus[i], self.sigmas[i]);
                    let z = self.kernel_mass(i, self.low, self.high);
                    let u = (x - mu) / s;
                    let density = (-0.5 * u * u).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
                    if z > 0.0 {
                        density / z
                    } else {
                        0.0
                    }
                })
                .sum();
            w * (kernels + 1.0 / (self.high - self.low))
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = rng.gen_range(0..self.components());
        let x = if c == self.mus.len() {
            rng.gen_range(self.low..=self.high)
        } else {
            let normal = Normal::new(self.mus[c], self.sigmas[c]).expect("positive sigma");
            let (lo, hi) = if self.discrete {
                (self.low - 0.5, self.high + 0.5)
            } else {
                (self.low, self.high)
            };
            let mut draw = normal.sample(rng);
            let mut tries = 0;
            while !(lo..=hi).contains(&draw) && tries < 100 {
                draw = normal.sample(rng);
                tries += 1;
            }
            draw.clamp(lo, hi)
        };
        if self.discrete {
            x.round().clamp(self.low, self.high)
        } else {
            x
        }
    }
}

fn fit_dimension(dim: &Dimension, history: &[Trial], members: &[usize]) -> Parzen {
    let (low, high) = dim.internal_bounds();
    let obs: Vec<f64> = members
        .iter()
        .map(|&i| dim.to_internal(history[i].params[&dim.name]).clamp(low, high))
        .collect();
    Parzen::fit(&obs, low, high, dim.kind == DimKind::Integer)
}

/// Draws `n_candidates` from the best-set model and returns the one with the
/// largest density ratio.
fn propose<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &[Trial],
    tpe: &TpeSettings,
    rng: &mut R,
) -> Params {
    let losses: Vec<f64> = history.iter().map(|t| t.loss).collect();
    let (best, rest) = split_best_rest(&losses, tpe.gamma);
    let models: Vec<(Parzen, Parzen)> = space
        .dims()
        .iter()
        .map(|d| (fit_dimension(d, history, &best), fit_dimension(d, history, &rest)))
        .collect();

    let mut candidates = Vec::with_capacity(tpe.n_candidates);
    let mut log_l = Vec::with_capacity(tpe.n_candidates);
    let mut log_g = Vec::with_capacity(tpe.n_candidates);
    for _ in 0..tpe.n_candidates.max(1) {
        let xs: Vec<f64> = models.iter().map(|(l, _)| l.sample(rng)).collect();
        log_l.push(models.iter().zip(&xs).map(|((l, _), &x)| l.log_pdf(x)).sum());
        log_g.push(models.iter().zip(&xs).map(|((_, g), &x)| g.log_pdf(x)).sum());
        candidates.push(xs);
    }
    let chosen = &candidates[select_candidate(&log_l, &log_g)];
    space
        .dims()
        .iter()
        .zip(chosen)
        .map(|(d, &x)| (d.name.clone(), d.from_internal(x)))
        .collect()
}

/// Sequential TPE. The default configuration is trial 0; until the history
/// holds `n_startup` trials, configurations come from the same uniform stream
/// [`super::tune_random`] uses for the same seed.
pub fn tune_tpe(
    objective: &dyn Objective,
    space: &SearchSpace,
    defaults: &Params,
    settings: &TuneSettings,
    tpe: &TpeSettings,
) -> TuneResult {
    assert!(
        tpe.gamma > 0.0 && tpe.gamma < 1.0,
        "gamma must lie in (0, 1), got {}",
        tpe.gamma
    );
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut history = Vec::with_capacity(settings.budget + 1);
    history.push(run_trial(objective, defaults.clone(), 0, settings));
    for index in 1..=settings.budget {
        let params = if history.len() < tpe.n_startup {
            sample_random(space, &mut rng)
        } else {
            propose(space, &history, tpe, &mut rng)
        };
        history.push(run_trial(objective, params, index, settings));
    }
    TuneResult::from_history(history, settings.budget)
}
