use super::hierarchy::{average_linkage, Stop};
use super::{check_count, Result};
use crate::corpus::{cooccurrence_matrix, Partition, TraceDataset};

/// Average-linkage clustering on `1 - Jaccard` trace co-occurrence, cut at
/// `n_clusters`. Fully deterministic; the seed is accepted for interface
/// uniformity only.
pub fn partition_mono2micro(ds: &TraceDataset, n_clusters: usize, _seed: u64) -> Result<Partition> {
    check_count("n_clusters", n_clusters, ds.n_classes())?;
    let sim = cooccurrence_matrix(ds);
    Ok(Partition::from_labels(&average_linkage(
        &sim,
        Stop::Clusters(n_clusters),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SyntheticCorpus;

    #[test]
    fn full_cluster_count_gives_singletons() {
        let s = SyntheticCorpus::generate(2, 9, 3, 0.8).unwrap();
        let p = partition_mono2micro(&s.dataset, 9, 0).unwrap();
        assert_eq!(p, Partition::singletons(9));
    }

    #[test]
    fn rejects_out_of_range_counts() {
        let s = SyntheticCorpus::generate(2, 6, 2, 0.8).unwrap();
        assert!(partition_mono2micro(&s.dataset, 1, 0).is_err());
        assert!(partition_mono2micro(&s.dataset, 7, 0).is_err());
    }

    #[test]
    fn recovers_planted_groups() {
        for seed in 0..5 {
            let s = SyntheticCorpus::generate(seed, 20, 4, 1.0).unwrap();
            let p = partition_mono2micro(&s.dataset, s.planted.k(), seed).unwrap();
            assert_eq!(p, s.planted, "seed {seed}");
        }
    }
}
