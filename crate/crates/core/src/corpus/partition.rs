use super::{CorpusError, Result, TraceDataset};
use serde::{Deserialize, Serialize};

/// Assignment of every class to exactly one non-empty cluster.
///
/// Labels are canonical: clusters are numbered `0..k` in order of their
/// smallest class index, so two partitions with the same grouping compare
/// equal regardless of the labels they were built from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

/// JSON form: `{ "clusters": [["A","B"],["C"]] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub clusters: Vec<Vec<String>>,
}

impl Partition {
    /// Relabels arbitrary cluster labels into canonical contiguous form.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let mut assignment = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len();
            assignment.push(*map.entry(l).or_insert(next));
        }
        let k = map.len();
        Self { assignment, k }
    }

    pub fn single(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (ci, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(CorpusError::Partition(format!("cluster {ci} is empty")));
            }
            for &c in members {
                if c >= n {
                    return Err(CorpusError::Partition(format!("class index {c} out of range")));
                }
                if labels[c] != usize::MAX {
                    return Err(CorpusError::Partition(format!(
                        "class index {c} assigned twice"
                    )));
                }
                labels[c] = ci;
            }
        }
        if let Some(c) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(CorpusError::Partition(format!("class index {c} unassigned")));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_of(&self, class: usize) -> usize {
        self.assignment[class]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Class indices per cluster, each list ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (c, &l) in self.assignment.iter().enumerate() {
            out[l].push(c);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.assignment {
            s[l] += 1;
        }
        s
    }

    /// Errors unless the partition covers exactly the dataset's classes.
    pub fn check_against(&self, ds: &TraceDataset) -> Result<()> {
        if self.assignment.len() != ds.n_classes() {
            return Err(CorpusError::Partition(format!(
                "partition covers {} classes, dataset has {}",
                self.assignment.len(),
                ds.n_classes()
            )));
        }
        Ok(())
    }

    /// Classes are sorted within clusters and clusters by first member; the
    /// canonical labels already give that order.
    pub fn to_json(&self, ds: &TraceDataset) -> PartitionJson {
        PartitionJson {
            clusters: self
                .clusters()
                .into_iter()
                .map(|members| members.into_iter().map(|c| ds.classes()[c].clone()).collect())
                .collect(),
        }
    }

    pub fn from_json(ds: &TraceDataset, json: &PartitionJson) -> Result<Self> {
        let clusters = json
            .clusters
            .iter()
            .map(|members| {
                members
                    .iter()
                    .map(|name| {
                        ds.class_index(name).ok_or_else(|| {
                            CorpusError::Partition(format!("unknown class \"{name}\""))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_clusters(ds.n_classes(), &clusters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_labels() {
        let p = Partition::from_labels(&[7, 3, 7, 9]);
        assert_eq!(p.assignment(), &[0, 1, 0, 2]);
        assert_eq!(p.k(), 3);
        assert_eq!(p.clusters(), vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn from_clusters_rejects_bad_input() {
        assert!(Partition::from_clusters(3, &[vec![0, 1]]).is_err());
        assert!(Partition::from_clusters(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::from_clusters(3, &[vec![0, 1, 2], vec![]]).is_err());
        assert!(Partition::from_clusters(2, &[vec![0, 5]]).is_err());
    }

    proptest! {
        #[test]
        fn relabeling_invariant(labels in proptest::collection::vec(0usize..6, 1..20), shift in 1usize..50) {
            let p = Partition::from_labels(&labels);
            let q = Partition::from_labels(&labels.iter().map(|l| (l * 31 + shift) % 1000).collect::<Vec<_>>());
            prop_assert_eq!(&p, &q);
            let sizes = p.sizes();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert_eq!(sizes.iter().sum::<usize>(), labels.len());
            prop_assert!(p.assignment().iter().all(|&l| l < p.k()));
        }
    }
}
