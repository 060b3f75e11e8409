use super::hierarchy::{average_linkage, Stop};
use super::nsga2::{self, Nsga2Settings};
use super::{check_count, get_int, get_real, invalid, Params, PartitionError, Result};
use crate::corpus::{jaccard_over_traces, Partition, Trace, TraceDataset};
use crate::metrics::MetricContext;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FosciParams {
    pub n_clusters: usize,
    pub nsga_iterations: usize,
    pub population_size: usize,
    pub parent_size: usize,
    pub stop_threshold: f64,
}

impl FosciParams {
    pub fn from_params(p: &Params) -> Result<Self> {
        Ok(Self {
            n_clusters: get_int(p, "n_clusters")?,
            nsga_iterations: get_int(p, "nsga_iterations")?,
            population_size: get_int(p, "population_size")?,
            parent_size: get_int(p, "parent_size")?,
            stop_threshold: get_real(p, "stop_threshold")?,
        })
    }

    fn validate(&self, n_classes: usize) -> Result<()> {
        check_count("n_clusters", self.n_clusters, n_classes)?;
        if self.nsga_iterations < 1 {
            return Err(invalid("nsga_iterations", "must be >= 1"));
        }
        if self.population_size < 5 {
            return Err(invalid("population_size", "must be >= 5"));
        }
        if self.parent_size < 5 || self.parent_size > self.population_size {
            return Err(invalid(
                "parent_size",
                format!(
                    "must lie in [5, population_size = {}], got {}",
                    self.population_size, self.parent_size
                ),
            ));
        }
        if !(self.stop_threshold > 0.0) {
            return Err(invalid("stop_threshold", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FosciOutcome {
    pub partition: Partition,
    /// Functional atom per class (canonical labels).
    pub atoms: Partition,
    /// `(icp, sm)` of every member of the final non-dominated front.
    pub front: Vec<(f64, f64)>,
    /// `(icp, sm)` of the returned knee solution.
    pub knee: (f64, f64),
    pub reduced_traces: usize,
}

/// Drops every trace whose call multiset repeats an earlier trace's.
pub fn reduce_traces(traces: &[Trace]) -> Vec<&Trace> {
    let mut seen = HashSet::new();
    traces
        .iter()
        .filter(|t| {
            let mut key = t.calls.clone();
            key.sort_unstable();
            seen.insert(key)
        })
        .collect()
}

/// Trace reduction, threshold-stopped clustering into functional atoms, and
/// NSGA-II merging of atoms into `n_clusters` groups on (min ICP, max SM).
pub fn fosci_search(ds: &TraceDataset, params: &FosciParams, seed: u64) -> Result<FosciOutcome> {
    let n = ds.n_classes();
    params.validate(n)?;
    let reduced = reduce_traces(ds.traces());
    let similarity = jaccard_over_traces(n, reduced.iter().map(|t| t.calls.as_slice()));
    let atoms = Partition::from_labels(&average_linkage(
        &similarity,
        Stop::Threshold(params.stop_threshold),
    ));
    if atoms.k() < params.n_clusters {
        return Err(PartitionError::ThresholdTooCoarse {
            atoms: atoms.k(),
            clusters: params.n_clusters,
        });
    }

    let ctx = MetricContext::new(ds);
    let decode = |genome: &[usize]| {
        let labels: Vec<usize> = (0..n).map(|c| genome[atoms.cluster_of(c)]).collect();
        Partition::from_labels(&labels)
    };
    let mut failure = None;
    let settings = Nsga2Settings {
        population_size: params.population_size,
        parent_size: params.parent_size,
        generations: params.nsga_iterations,
        genes: atoms.k(),
        alleles: params.n_clusters,
        seed,
    };
    let population = nsga2::run(&settings, |genome| {
        let p = decode(genome);
        match (ctx.icp(&p), ctx.sm(&p)) {
            (Ok(icp), Ok(sm)) => vec![icp, -sm],
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                vec![f64::INFINITY, f64::INFINITY]
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }

    let front: Vec<&nsga2::Individual> = population.iter().filter(|i| i.rank == 0).collect();
    let objectives: Vec<Vec<f64>> = front.iter().map(|i| i.objectives.clone()).collect();
    let knee = nsga2::knee_point(&objectives).expect("final front is non-empty");
    let chosen = front[knee];
    Ok(FosciOutcome {
        partition: decode(&chosen.genome),
        atoms: atoms.clone(),
        front: objectives.iter().map(|o| (o[0], -o[1])).collect(),
        knee: (chosen.objectives[0], -chosen.objectives[1]),
        reduced_traces: reduced.len(),
    })
}

pub fn partition_fosci(ds: &TraceDataset, params: &FosciParams, seed: u64) -> Result<Partition> {
    fosci_search(ds, params, seed).map(|o| o.partition)
}
