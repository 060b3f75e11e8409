//! The untuned / random / hyperopt protocol over a grid of corpora and
//! partitioners, and the reports built from its results.
//!
//! Every (dataset, algorithm, treatment, repeat) unit is seeded by
//! [`unit_seed`], a pure function of the configuration seed and the unit's
//! coordinates, so any unit can be re-run alone and reproduce its numbers.
//! An untuned repeat is a zero-budget tuning run: it evaluates the default
//! configuration once.

mod report;

pub use report::{
    Analysis, CellResult, ExperimentReport, Provenance, RankRow, RepeatResult, ReportFormat,
    LOSS_LABEL, RANKS_CSV_HEADER, RESULTS_CSV_HEADER,
};

use crate::corpus::{load_dataset, CorpusError, TraceDataset};
use crate::metrics::LossSpec;
use crate::optimizer::{
    make_objective, normalize_params, trial_seed, tune_random, tune_tpe, SearchSpace, TpeSettings,
    TuneResult, TuneSettings,
};
use crate::partitioners::Algorithm;
use crate::seed::derive_seed;
use crate::stats::{HYPEROPT, RANDOM, TREATMENTS, UNTUNED};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("dataset {path}: {source}")]
    Dataset {
        path: String,
        #[source]
        source: CorpusError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn default_repeats() -> usize {
    30
}

fn default_budget() -> usize {
    100
}

fn default_timeout() -> Option<f64> {
    Some(60.0)
}

/// Experiment settings, read from JSON with these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Corpus files. Relative paths resolve against the config file.
    pub datasets: Vec<PathBuf>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Sampled trials per tuning run, not counting the default trial.
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub seed: u64,
    /// Output directory. A relative path resolves against the config file.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub loss: LossSpec,
    /// Per-trial wall-clock limit in seconds; `null` disables it.
    #[serde(default = "default_timeout")]
    pub timeout_secs: Option<f64>,
    /// Write measured trial durations. Off by default so that reruns produce
    /// byte-identical files.
    #[serde(default)]
    pub record_elapsed: bool,
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<PathBuf>, algorithms: Vec<Algorithm>, seed: u64, output_dir: PathBuf) -> Self {
        Self {
            datasets,
            algorithms,
            repeats: default_repeats(),
            budget: default_budget(),
            seed,
            output_dir,
            loss: LossSpec::default(),
            timeout_secs: default_timeout(),
            record_elapsed: false,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for d in &mut cfg.datasets {
            if d.is_relative() {
                *d = base.join(&*d);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.datasets.is_empty() {
            return bad("at least one dataset is required");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return bad(&format!("algorithm {a} listed twice"));
            }
        }
        if let Some(t) = self.timeout_secs {
            if !(t.is_finite() && t > 0.0) {
                return bad("timeout_secs must be positive");
            }
        }
        if self.loss.weights.iter().any(|w| !w.is_finite()) {
            return bad("loss weights must be finite");
        }
        let names = self.dataset_names();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return bad(&format!("two datasets share the name \"{n}\""));
            }
        }
        Ok(())
    }

    /// Report names of the datasets: their file stems.
    pub fn dataset_names(&self) -> Vec<String> {
        self.datasets
            .iter()
            .map(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string())
            })
            .collect()
    }

    /// SHA-256 of the serialized config, in hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    fn timeout(&self) -> Option<Duration> {
        self.timeout_secs.map(Duration::from_secs_f64)
    }
}

/// Seed of one grid unit. Algorithms and treatments are identified by their
/// position in [`Algorithm::ALL`] and [`TREATMENTS`].
pub fn unit_seed(base: u64, dataset: usize, algorithm: Algorithm, treatment: &str, repeat: usize) -> u64 {
    let a = Algorithm::ALL.iter().position(|&x| x == algorithm).expect("known algorithm");
    let t = TREATMENTS
        .iter()
        .position(|&x| x == treatment)
        .expect("known treatment");
    derive_seed(base, &[dataset as u64, a as u64, t as u64, repeat as u64])
}

/// Objective seed of untuned repeat `repeat`. Tuned repeats evaluate their
/// default trial with the same seed, so each tuned repeat is paired with the
/// untuned repeat of the same index and can never lose to it.
pub fn default_trial_seed(base: u64, dataset: usize, algorithm: Algorithm, repeat: usize) -> u64 {
    trial_seed(unit_seed(base, dataset, algorithm, UNTUNED, repeat), 0)
}

/// Runs one repeat of one treatment. `seed` drives the sampler (see
/// [`unit_seed`]) and `default_seed` the default trial (see
/// [`default_trial_seed`]).
pub fn run_unit(
    ds: &TraceDataset,
    algorithm: Algorithm,
    treatment: &str,
    cfg: &ExperimentConfig,
    seed: u64,
    default_seed: u64,
) -> TuneResult {
    let objective = make_objective(ds, algorithm, cfg.loss);
    let defaults = algorithm.default_params(ds.n_classes());
    let budget = if treatment == UNTUNED { 0 } else { cfg.budget };
    let settings = TuneSettings {
        budget,
        seed,
        timeout: cfg.timeout(),
        default_seed: Some(default_seed),
    };
    let space = match SearchSpace::for_algorithm(algorithm, ds.n_classes()) {
        Ok(s) => s,
        // Too few classes to tune; only the default configuration is tried.
        Err(_) => return tune_random(&objective, &empty_space(), &defaults, &TuneSettings { budget: 0, ..settings }),
    };
    match treatment {
        HYPEROPT => tune_tpe(&objective, &space, &defaults, &settings, &TpeSettings::default()),
        RANDOM | UNTUNED => tune_random(&objective, &space, &defaults, &settings),
        other => panic!("unknown treatment {other}"),
    }
}

fn empty_space() -> SearchSpace {
    SearchSpace::new(Vec::new()).expect("empty space is valid")
}

/// Runs the full grid. Units run in parallel on the current rayon pool;
/// results are assembled in grid order, so the report does not depend on
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let names = cfg.dataset_names();
    let datasets = cfg
        .datasets
        .iter()
        .map(|p| {
            load_dataset(p).map_err(|source| ExperimentError::Dataset {
                path: p.display().to_string(),
                source,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut units = Vec::new();
    for d in 0..datasets.len() {
        for &a in &cfg.algorithms {
            for t in TREATMENTS {
                for r in 0..cfg.repeats {
                    units.push((d, a, t, r));
                }
            }
        }
    }
    log::info!("running {} units", units.len());
    let outcomes: Vec<TuneResult> = units
        .par_iter()
        .map(|&(d, a, t, r)| {
            let seed = unit_seed(cfg.seed, d, a, t, r);
            let out = run_unit(&datasets[d], a, t, cfg, seed, default_trial_seed(cfg.seed, d, a, r));
            log::debug!("{}/{}/{t}/{r}: loss {}", names[d], a.name(), out.best.loss);
            out
        })
        .collect();

    let mut cells: Vec<CellResult> = Vec::new();
    for (&(d, a, t, r), out) in units.iter().zip(outcomes) {
        if r == 0 {
            cells.push(CellResult {
                dataset: names[d].clone(),
                algorithm: a,
                treatment: t.to_string(),
                repeats: Vec::new(),
            });
        }
        let seed = unit_seed(cfg.seed, d, a, t, r);
        let best = &out.best;
        let repeat = RepeatResult {
            repeat: r,
            seed,
            loss: best.error.is_none().then_some(best.loss),
            metrics: best.metrics,
            params: normalize_params(a, &best.params),
            error: best.error.clone(),
            trials: out.history,
        };
        cells.last_mut().expect("cell pushed").repeats.push(repeat);
    }

    let provenance = Provenance {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        repeats: cfg.repeats,
        budget: cfg.budget,
        record_elapsed: cfg.record_elapsed,
    };
    Ok(ExperimentReport::assemble(
        provenance,
        names,
        cfg.algorithms.clone(),
        cells,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{save_dataset, SyntheticCorpus};

    fn config(dir: &Path, repeats: usize, budget: usize) -> ExperimentConfig {
        let s = SyntheticCorpus::generate(3, 12, 3, 0.9).unwrap();
        let path = dir.join("planted.json");
        save_dataset(&s.dataset, &path).unwrap();
        let mut cfg = ExperimentConfig::new(vec![path], vec![Algorithm::Mono2Micro], 5, dir.join("out"));
        cfg.repeats = repeats;
        cfg.budget = budget;
        cfg
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"datasets":["a.json"],"algorithms":["mem","fosci"],"seed":1,"output_dir":"out"}"#,
        )
        .unwrap();
        assert_eq!((cfg.repeats, cfg.budget), (30, 100));
        assert_eq!(cfg.loss, LossSpec::default());
        assert_eq!(cfg.timeout_secs, Some(60.0));
        assert!(!cfg.record_elapsed);
        for bad in [
            r#"{"datasets":[],"algorithms":["mem"],"seed":1,"output_dir":"o"}"#,
            r#"{"datasets":["a"],"algorithms":[],"seed":1,"output_dir":"o"}"#,
            r#"{"datasets":["a"],"algorithms":["mem"],"seed":1,"output_dir":"o","repeats":0}"#,
            r#"{"datasets":["a"],"algorithms":["mem","mem"],"seed":1,"output_dir":"o"}"#,
            r#"{"datasets":["x/a.json","y/a.json"],"algorithms":["mem"],"seed":1,"output_dir":"o"}"#,
            r#"{"datasets":["a"],"algorithms":["mem"],"seed":1,"output_dir":"o","typo":1}"#,
        ] {
            assert!(ExperimentConfig::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = ExperimentConfig::new(vec!["a.json".into()], vec![Algorithm::Mem], 1, "o".into());
        let mut variants = vec![base.clone()];
        let mut v = base.clone();
        v.seed = 2;
        variants.push(v);
        let mut v = base.clone();
        v.repeats = 3;
        variants.push(v);
        let mut v = base.clone();
        v.budget = 7;
        variants.push(v);
        let mut v = base.clone();
        v.datasets = vec!["b.json".into()];
        variants.push(v);
        let mut v = base.clone();
        v.algorithms = vec![Algorithm::Bunch];
        variants.push(v);
        let mut v = base.clone();
        v.output_dir = "p".into();
        variants.push(v);
        let mut v = base.clone();
        v.loss = LossSpec::default().scaled(2.0);
        variants.push(v);
        let mut v = base.clone();
        v.timeout_secs = None;
        variants.push(v);
        let mut v = base.clone();
        v.record_elapsed = true;
        variants.push(v);
        let hashes: std::collections::BTreeSet<String> = variants.iter().map(|c| c.hash()).collect();
        assert_eq!(hashes.len(), variants.len());
        assert_eq!(base.hash(), base.clone().hash());
    }

    #[test]
    fn unit_seeds_are_distinct_across_the_grid() {
        let mut seen = std::collections::BTreeSet::new();
        for d in 0..3 {
            for a in Algorithm::ALL {
                for t in TREATMENTS {
                    for r in 0..10 {
                        assert!(seen.insert(unit_seed(9, d, a, t, r)));
                    }
                }
            }
        }
    }

    #[test]
    fn zero_budget_tuning_equals_the_default_trial() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), 1, 0);
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.cells.len(), 3);
        let untuned = &rep.cells[0].repeats[0];
        for cell in &rep.cells {
            let r = &cell.repeats[0];
            assert_eq!(r.trials.len(), 1);
            assert_eq!(r.metrics, r.trials[0].metrics);
            // mono2micro is deterministic, so every treatment matches untuned
            assert_eq!(r.metrics, untuned.metrics);
        }
        // one repeat cannot be ranked; the report says so instead of failing
        assert!(rep.analysis.ranks.is_empty());
        assert!(rep.analysis.notes.iter().any(|n| n.contains("fewer than 2 repeats")));
    }

    #[test]
    fn single_units_reproduce_in_isolation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 2, 4);
        cfg.algorithms = vec![Algorithm::Bunch];
        let rep = run_experiment(&cfg).unwrap();
        let ds = load_dataset(&cfg.datasets[0]).unwrap();
        let cell = &rep.cells[2];
        assert_eq!(cell.treatment, HYPEROPT);
        let seed = unit_seed(cfg.seed, 0, Algorithm::Bunch, HYPEROPT, 1);
        let alone = run_unit(&ds, Algorithm::Bunch, HYPEROPT, &cfg, seed, default_trial_seed(cfg.seed, 0, Algorithm::Bunch, 1));
        assert_eq!(cell.repeats[1].loss, Some(alone.best.loss));
        assert_eq!(cell.repeats[1].metrics, alone.best.metrics);
    }

    #[test]
    fn tuned_repeats_never_lose_to_their_untuned_pair() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 3, 3);
        cfg.algorithms = vec![Algorithm::Bunch, Algorithm::Fosci];
        let rep = run_experiment(&cfg).unwrap();
        for a in [Algorithm::Bunch, Algorithm::Fosci] {
            let untuned = rep.cell("planted", a, UNTUNED).unwrap();
            for t in [RANDOM, HYPEROPT] {
                let tuned = rep.cell("planted", a, t).unwrap();
                for (u, x) in untuned.repeats.iter().zip(&tuned.repeats) {
                    assert_eq!(x.trials[0].seed, u.trials[0].seed);
                    assert_eq!(x.trials[0].loss, u.trials[0].loss);
                    let inf = f64::INFINITY;
                    assert!(x.loss.unwrap_or(inf) <= u.loss.unwrap_or(inf));
                }
            }
        }
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(
            &path,
            r#"{"datasets":["data/a.json"],"algorithms":["mem"],"seed":1,"output_dir":"out"}"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.datasets[0], dir.path().join("data/a.json"));
        assert_eq!(cfg.output_dir, dir.path().join("out"));
    }

    #[test]
    fn missing_dataset_is_an_error() {
        let cfg = ExperimentConfig::new(vec!["/nonexistent/x.json".into()], vec![Algorithm::Mem], 1, "o".into());
        assert!(matches!(run_experiment(&cfg), Err(ExperimentError::Dataset { .. })));
    }
}
