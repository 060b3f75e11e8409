//! Four partitioning strategies behind one dispatch point.
//!
//! * [`partition_mono2micro`]: average-linkage clustering on trace co-occurrence.
//! * [`partition_mem`]: maximum-coupling spanning forest with lowest-edge cuts.
//! * [`partition_bunch`]: restarted steepest-ascent hill climbing on MQ.
//! * [`partition_fosci`]: functional atoms merged by NSGA-II on (ICP, SM).

mod bunch;
mod fosci;
mod hierarchy;
mod mem;
mod mono2micro;
pub mod nsga2;

pub use bunch::{hill_climb, partition_bunch, BunchOutcome, DEFAULT_BUNCH_BUDGET};
pub use fosci::{fosci_search, partition_fosci, reduce_traces, FosciOutcome, FosciParams};
pub use mem::partition_mem;
pub use mono2micro::partition_mono2micro;

use crate::corpus::{Partition, TraceDataset};
use crate::metrics::MetricError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PartitionError {
    #[error("unknown algorithm \"{0}\"")]
    UnknownAlgorithm(String),
    #[error("missing required parameter \"{0}\"")]
    MissingParam(String),
    #[error("parameter \"{name}\": {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("infeasible size constraint: {0}")]
    Infeasible(String),
    #[error("threshold too coarse: {atoms} functional atoms for {clusters} clusters")]
    ThresholdTooCoarse { atoms: usize, clusters: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, PartitionError>;

fn invalid(name: &str, reason: impl Into<String>) -> PartitionError {
    PartitionError::InvalidParam {
        name: name.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mono2Micro,
    Mem,
    Bunch,
    Fosci,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Mono2Micro,
        Algorithm::Mem,
        Algorithm::Bunch,
        Algorithm::Fosci,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mono2Micro => "mono2micro",
            Algorithm::Mem => "mem",
            Algorithm::Bunch => "bunch",
            Algorithm::Fosci => "fosci",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Mono2Micro => "mono2micro",
            Algorithm::Mem => "MEM",
            Algorithm::Bunch => "Bunch",
            Algorithm::Fosci => "FoSCI",
        }
    }

    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            Algorithm::Mono2Micro => &["n_clusters"],
            Algorithm::Mem => &["n_partitions", "max_partition_size"],
            Algorithm::Bunch => &["n_partitions", "init_population", "neighbor_fraction"],
            Algorithm::Fosci => &[
                "n_clusters",
                "nsga_iterations",
                "population_size",
                "parent_size",
                "stop_threshold",
            ],
        }
    }

    /// Untuned ("off-the-shelf") configuration. Cluster counts of 5 are
    /// clamped to the number of classes for very small corpora.
    pub fn default_params(self, n_classes: usize) -> Params {
        let k = 5.min(n_classes) as i64;
        let mut p = Params::new();
        match self {
            Algorithm::Mono2Micro => {
                p.insert("n_clusters".into(), ParamValue::Int(k));
            }
            Algorithm::Mem => {
                p.insert("n_partitions".into(), ParamValue::Int(k));
                p.insert("max_partition_size".into(), ParamValue::Int(n_classes as i64));
            }
            Algorithm::Bunch => {
                p.insert("n_partitions".into(), ParamValue::Int(k));
                p.insert("init_population".into(), ParamValue::Int(10));
                p.insert("neighbor_fraction".into(), ParamValue::Real(1.0));
            }
            Algorithm::Fosci => {
                p.insert("n_clusters".into(), ParamValue::Int(k));
                p.insert("nsga_iterations".into(), ParamValue::Int(50));
                p.insert("population_size".into(), ParamValue::Int(20));
                p.insert("parent_size".into(), ParamValue::Int(10));
                p.insert("stop_threshold".into(), ParamValue::Real(0.5));
            }
        }
        p
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PartitionError::UnknownAlgorithm(s.to_string()))
    }
}

/// A hyperparameter value. Integers and reals stay distinct on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(i) => i as f64,
            ParamValue::Real(r) => r,
        }
    }

    /// Parses `"5"` as an integer and anything else numeric as a real.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        s.parse::<i64>()
            .map(ParamValue::Int)
            .ok()
            .or_else(|| s.parse::<f64>().ok().map(ParamValue::Real))
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

fn get(params: &Params, name: &str) -> Result<ParamValue> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| PartitionError::MissingParam(name.to_string()))
}

pub(crate) fn get_int(params: &Params, name: &str) -> Result<usize> {
    match get(params, name)? {
        ParamValue::Int(i) if i >= 0 => Ok(i as usize),
        ParamValue::Real(r) if r >= 0.0 && r.fract() == 0.0 && r < 1e15 => Ok(r as usize),
        v => Err(invalid(name, format!("expected a non-negative integer, got {v}"))),
    }
}

pub(crate) fn get_real(params: &Params, name: &str) -> Result<f64> {
    let v = get(params, name)?.as_f64();
    if !v.is_finite() {
        return Err(invalid(name, "must be finite"));
    }
    Ok(v)
}

pub(crate) fn check_count(name: &str, value: usize, n_classes: usize) -> Result<()> {
    if value < 2 || value > n_classes {
        return Err(invalid(
            name,
            format!("must lie in [2, {n_classes}], got {value}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionerConfig {
    pub algorithm: Algorithm,
    pub params: Params,
    pub seed: u64,
}

impl PartitionerConfig {
    pub fn defaults(algorithm: Algorithm, ds: &TraceDataset, seed: u64) -> Self {
        Self {
            algorithm,
            params: algorithm.default_params(ds.n_classes()),
            seed,
        }
    }
}

pub fn run_partitioner(ds: &TraceDataset, cfg: &PartitionerConfig) -> Result<Partition> {
    let p = &cfg.params;
    match cfg.algorithm {
        Algorithm::Mono2Micro => partition_mono2micro(ds, get_int(p, "n_clusters")?, cfg.seed),
        Algorithm::Mem => partition_mem(
            ds,
            get_int(p, "n_partitions")?,
            get_int(p, "max_partition_size")?,
            cfg.seed,
        ),
        Algorithm::Bunch => partition_bunch(
            ds,
            get_int(p, "n_partitions")?,
            get_int(p, "init_population")?,
            get_real(p, "neighbor_fraction")?,
            cfg.seed,
            DEFAULT_BUNCH_BUDGET,
        ),
        Algorithm::Fosci => partition_fosci(ds, &FosciParams::from_params(p)?, cfg.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("MEM".parse::<Algorithm>().unwrap(), Algorithm::Mem);
        assert!(matches!(
            "cogcn".parse::<Algorithm>(),
            Err(PartitionError::UnknownAlgorithm(_))
        ));
    }

    #[test]
    fn param_values_parse_and_serialize() {
        assert_eq!(ParamValue::parse("5"), Some(ParamValue::Int(5)));
        assert_eq!(ParamValue::parse("0.5"), Some(ParamValue::Real(0.5)));
        assert_eq!(ParamValue::parse("x"), None);
        let mut p = Params::new();
        p.insert("a".into(), ParamValue::Int(3));
        p.insert("b".into(), ParamValue::Real(1.0));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"a":3,"b":1.0}"#);
        assert_eq!(serde_json::from_str::<Params>(&s).unwrap(), p);
    }

    #[test]
    fn defaults_cover_required_params() {
        for a in Algorithm::ALL {
            let d = a.default_params(30);
            for name in a.required_params() {
                assert!(d.contains_key(*name), "{a}: {name}");
            }
            assert_eq!(d.len(), a.required_params().len());
        }
    }

    #[test]
    fn integer_accessor_accepts_integral_reals() {
        let mut p = Params::new();
        p.insert("k".into(), ParamValue::Real(4.0));
        assert_eq!(get_int(&p, "k").unwrap(), 4);
        p.insert("k".into(), ParamValue::Real(4.5));
        assert!(get_int(&p, "k").is_err());
        p.insert("k".into(), ParamValue::Int(-1));
        assert!(get_int(&p, "k").is_err());
        assert_eq!(
            get_int(&p, "missing"),
            Err(PartitionError::MissingParam("missing".into()))
        );
    }
}
