use super::{Evaluation, Objective};
use crate::corpus::TraceDataset;
use crate::metrics::{loss, LossSpec, MetricContext};
use crate::partitioners::{run_partitioner, Algorithm, ParamValue, Params, PartitionerConfig};

/// Runs one partitioner on one corpus and scores the result with the loss.
#[derive(Debug, Clone)]
pub struct PartitionObjective<'a> {
    ds: &'a TraceDataset,
    ctx: MetricContext,
    algorithm: Algorithm,
    spec: LossSpec,
}

pub fn make_objective(ds: &TraceDataset, algorithm: Algorithm, spec: LossSpec) -> PartitionObjective<'_> {
    PartitionObjective {
        ds,
        ctx: MetricContext::new(ds),
        algorithm,
        spec,
    }
}

/// Applies cross-parameter constraints the independent search dimensions
/// cannot express: FoSCI's parent size is capped at its population size.
pub fn normalize_params(algorithm: Algorithm, params: &Params) -> Params {
    let mut p = params.clone();
    if algorithm == Algorithm::Fosci {
        if let (Some(parent), Some(pop)) = (p.get("parent_size"), p.get("population_size")) {
            if parent.as_f64() > pop.as_f64() {
                p.insert("parent_size".into(), ParamValue::Int(pop.as_f64() as i64));
            }
        }
    }
    p
}

impl PartitionObjective<'_> {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn config(&self, params: &Params, seed: u64) -> PartitionerConfig {
        PartitionerConfig {
            algorithm: self.algorithm,
            params: normalize_params(self.algorithm, params),
            seed,
        }
    }
}

impl Objective for PartitionObjective<'_> {
    fn evaluate(&self, params: &Params, seed: u64) -> Result<Evaluation, String> {
        let partition = run_partitioner(self.ds, &self.config(params, seed)).map_err(|e| e.to_string())?;
        let metrics = self.ctx.evaluate(&partition).map_err(|e| e.to_string())?;
        let loss = loss(&metrics, &self.spec).map_err(|e| e.to_string())?;
        Ok(Evaluation {
            loss,
            metrics: Some(metrics),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Partition, SyntheticCorpus};

    #[test]
    fn deterministic_and_consistent_with_loss() {
        let s = SyntheticCorpus::generate(8, 16, 4, 0.8).unwrap();
        for a in Algorithm::ALL {
            let obj = make_objective(&s.dataset, a, LossSpec::default());
            let d = a.default_params(16);
            let x = obj.evaluate(&d, 3).unwrap();
            let y = obj.evaluate(&d, 3).unwrap();
            assert_eq!(x, y, "{a}");
            assert_eq!(x.loss, loss(&x.metrics.unwrap(), &LossSpec::default()).unwrap());
        }
    }

    #[test]
    fn planted_k_beats_singletons() {
        let s = SyntheticCorpus::generate(2, 20, 4, 1.0).unwrap();
        let obj = make_objective(&s.dataset, Algorithm::Mono2Micro, LossSpec::default());
        let at = |k: i64| {
            obj.evaluate(&Params::from([("n_clusters".to_string(), ParamValue::Int(k))]), 0)
                .unwrap()
                .loss
        };
        assert!(at(s.planted.k() as i64) <= at(20));
        let ctx = MetricContext::new(&s.dataset);
        assert_eq!(ctx.icp(&Partition::singletons(20)).unwrap(), 1.0);
    }

    #[test]
    fn errors_surface_as_messages() {
        let s = SyntheticCorpus::generate(2, 10, 2, 1.0).unwrap();
        let obj = make_objective(&s.dataset, Algorithm::Mem, LossSpec::default());
        let p = Params::from([
            ("n_partitions".to_string(), ParamValue::Int(2)),
            ("max_partition_size".to_string(), ParamValue::Int(2)),
        ]);
        assert!(obj.evaluate(&p, 0).unwrap_err().contains("infeasible"));
    }

    #[test]
    fn parent_size_is_capped() {
        let p = Params::from([
            ("parent_size".to_string(), ParamValue::Int(30)),
            ("population_size".to_string(), ParamValue::Int(12)),
        ]);
        assert_eq!(normalize_params(Algorithm::Fosci, &p)["parent_size"], ParamValue::Int(12));
        assert_eq!(normalize_params(Algorithm::Bunch, &p), p);
    }
}
