use crate::partitioners::{Algorithm, ParamValue, Params};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimKind {
    Integer,
    Real,
    LogReal,
}

/// One named hyperparameter with inclusive bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: DimKind,
    pub low: f64,
    pub high: f64,
}

impl Dimension {
    pub fn integer(name: &str, low: i64, high: i64) -> Self {
        Self {
            name: name.into(),
            kind: DimKind::Integer,
            low: low as f64,
            high: high as f64,
        }
    }

    pub fn real(name: &str, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            kind: DimKind::Real,
            low,
            high,
        }
    }

    pub fn log_real(name: &str, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            kind: DimKind::LogReal,
            low,
            high,
        }
    }

    pub fn contains(&self, v: ParamValue) -> bool {
        let x = v.as_f64();
        let integral = !matches!(self.kind, DimKind::Integer) || x.fract() == 0.0;
        integral && x >= self.low && x <= self.high
    }

    /// Bounds in the coordinate the samplers work in (log for log-real).
    pub(crate) fn internal_bounds(&self) -> (f64, f64) {
        match self.kind {
            DimKind::LogReal => (self.low.ln(), self.high.ln()),
            _ => (self.low, self.high),
        }
    }

    pub(crate) fn to_internal(&self, v: ParamValue) -> f64 {
        match self.kind {
            DimKind::LogReal => v.as_f64().ln(),
            _ => v.as_f64(),
        }
    }

    pub(crate) fn from_internal(&self, x: f64) -> ParamValue {
        match self.kind {
            DimKind::Integer => ParamValue::Int(x.round().clamp(self.low, self.high) as i64),
            DimKind::Real => ParamValue::Real(x.clamp(self.low, self.high)),
            DimKind::LogReal => ParamValue::Real(x.exp().clamp(self.low, self.high)),
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match self.kind {
            DimKind::Integer => ParamValue::Int(rng.gen_range(self.low as i64..=self.high as i64)),
            DimKind::Real => ParamValue::Real(rng.gen_range(self.low..=self.high)),
            DimKind::LogReal => {
                let (lo, hi) = self.internal_bounds();
                ParamValue::Real(rng.gen_range(lo..=hi).exp().clamp(self.low, self.high))
            }
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpaceError {
    #[error("dimension \"{name}\": {reason}")]
    Invalid { name: String, reason: String },
    #[error("duplicate dimension \"{0}\"")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, SpaceError> {
        let bad = |d: &Dimension, reason: &str| SpaceError::Invalid {
            name: d.name.clone(),
            reason: reason.into(),
        };
        for (i, d) in dims.iter().enumerate() {
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(SpaceError::Duplicate(d.name.clone()));
            }
            if !(d.low.is_finite() && d.high.is_finite()) || d.low >= d.high {
                return Err(bad(d, "requires finite bounds with low < high"));
            }
            match d.kind {
                DimKind::Integer if d.low.fract() != 0.0 || d.high.fract() != 0.0 => {
                    return Err(bad(d, "integer bounds must be integral"));
                }
                DimKind::LogReal if d.low <= 0.0 => {
                    return Err(bad(d, "log-real bounds must be positive"));
                }
                _ => {}
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn contains(&self, params: &Params) -> bool {
        self.dims
            .iter()
            .all(|d| params.get(&d.name).is_some_and(|&v| d.contains(v)))
    }

    /// The tuning space of a partitioner for a corpus with `n_classes` classes.
    ///
    /// Open-ended ranges are clipped: cluster and partition counts to
    /// `[2, min(20, n)]`, NSGA-II generations to `[1, 200]`, population and
    /// parent sizes to `[5, 50]` (parent size is capped at the population size
    /// when a configuration is built), the atom threshold to `[0.01, 1]`, the
    /// MEM size limit to `[2, n]` and the hill-climbing restarts to `[2, 20]`.
    pub fn for_algorithm(algorithm: Algorithm, n_classes: usize) -> Result<Self, SpaceError> {
        let k_max = n_classes.min(20) as i64;
        let dims = match algorithm {
            Algorithm::Mono2Micro => vec![Dimension::integer("n_clusters", 2, k_max)],
            Algorithm::Mem => vec![
                Dimension::integer("n_partitions", 2, k_max),
                Dimension::integer("max_partition_size", 2, n_classes as i64),
            ],
            Algorithm::Bunch => vec![
                Dimension::integer("n_partitions", 2, k_max),
                Dimension::integer("init_population", 2, 20),
                Dimension::real("neighbor_fraction", 0.0, 1.0),
            ],
            Algorithm::Fosci => vec![
                Dimension::integer("n_clusters", 2, k_max),
                Dimension::integer("nsga_iterations", 1, 200),
                Dimension::integer("population_size", 5, 50),
                Dimension::integer("parent_size", 5, 50),
                Dimension::real("stop_threshold", 0.01, 1.0),
            ],
        };
        Self::new(dims)
    }
}

/// Draws every dimension independently and uniformly (log-uniformly for
/// log-real dimensions).
pub fn sample_random<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Params {
    space
        .dims
        .iter()
        .map(|d| (d.name.clone(), d.sample(rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(SearchSpace::new(vec![Dimension::real("x", 1.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![Dimension::log_real("x", 0.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![Dimension::real("x", 0.0, f64::INFINITY)]).is_err());
        assert!(SearchSpace::new(vec![Dimension::real("x", 0.0, 1.0), Dimension::real("x", 0.0, 2.0)]).is_err());
        assert!(SearchSpace::for_algorithm(Algorithm::Mono2Micro, 2).is_err());
        assert!(SearchSpace::for_algorithm(Algorithm::Mono2Micro, 3).is_ok());
    }

    #[test]
    fn integer_samples_stay_in_bounds_and_are_deterministic() {
        let space = SearchSpace::new(vec![Dimension::integer("k", 2, 10)]).unwrap();
        let a = sample_random(&space, &mut ChaCha8Rng::seed_from_u64(4));
        let b = sample_random(&space, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [false; 11];
        for _ in 0..1000 {
            match sample_random(&space, &mut rng)["k"] {
                ParamValue::Int(k) => {
                    assert!((2..=10).contains(&k));
                    seen[k as usize] = true;
                }
                v => panic!("expected integer, got {v:?}"),
            }
        }
        assert!(seen[2..].iter().all(|&s| s), "both bounds reachable");
    }

    #[test]
    fn unit_interval_mean_converges() {
        let space = SearchSpace::new(vec![Dimension::real("x", 0.0, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mean = (0..10_000)
            .map(|_| sample_random(&space, &mut rng)["x"].as_f64())
            .sum::<f64>()
            / 10_000.0;
        // sd of the mean is 0.29 / 100; 0.02 is ~7 sd
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn log_real_is_uniform_in_log_space() {
        let space = SearchSpace::new(vec![Dimension::log_real("lr", 1e-4, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let below = (0..10_000)
            .map(|_| sample_random(&space, &mut rng)["lr"].as_f64())
            .inspect(|&v| assert!((1e-4..=1.0).contains(&v)))
            .filter(|&v| v < 1e-2)
            .count();
        assert!((below as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn distinct_seeds_rarely_collide() {
        let space = SearchSpace::new(vec![Dimension::real("x", 0.0, 1.0)]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        let collisions = (0..100)
            .filter(|_| sample_random(&space, &mut a) == sample_random(&space, &mut b))
            .count();
        assert_eq!(collisions, 0);
    }

    #[test]
    fn algorithm_spaces_hold_their_defaults() {
        for a in Algorithm::ALL {
            let space = SearchSpace::for_algorithm(a, 30).unwrap();
            assert!(space.contains(&a.default_params(30)), "{a}");
        }
    }
}
