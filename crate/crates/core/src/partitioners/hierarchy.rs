//! Average-linkage agglomerative clustering over a dense distance matrix.

use crate::corpus::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    /// Merge until this many clusters remain.
    Clusters(usize),
    /// Merge while the closest pair is strictly nearer than this distance.
    Threshold(f64),
}

/// Returns a cluster label per item (labels are the smallest member index of
/// each cluster, not contiguous).
///
/// Clusters are identified by their smallest member. Among equally close
/// pairs the one whose identifiers come first lexicographically merges first.
pub(crate) fn average_linkage(similarity: &SimilarityMatrix, stop: Stop) -> Vec<usize> {
    let n = similarity.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = 1.0 - similarity.get(i, j);
        }
    }
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut label: Vec<usize> = (0..n).collect();

    loop {
        if let Stop::Clusters(k) = stop {
            if active.len() <= k {
                break;
            }
        }
        if active.len() < 2 {
            break;
        }
        let mut best = (f64::INFINITY, 0, 0);
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                let d = dist[i * n + j];
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        let (d, keep, gone) = best;
        if let Stop::Threshold(t) = stop {
            if d >= t {
                break;
            }
        }
        // Lance-Williams update for average linkage.
        let (na, nb) = (size[keep] as f64, size[gone] as f64);
        for &other in &active {
            if other == keep || other == gone {
                continue;
            }
            let merged = (na * dist[keep * n + other] + nb * dist[gone * n + other]) / (na + nb);
            dist[keep * n + other] = merged;
            dist[other * n + keep] = merged;
        }
        size[keep] += size[gone];
        active.retain(|&c| c != gone);
        for l in label.iter_mut() {
            if *l == gone {
                *l = keep;
            }
        }
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Partition;

    fn sim(n: usize, entries: &[(usize, usize, f64)]) -> SimilarityMatrix {
        let mut m = SimilarityMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        for &(i, j, v) in entries {
            m.set(i, j, v);
        }
        m
    }

    #[test]
    fn cuts_at_requested_cluster_count() {
        let m = sim(4, &[(0, 1, 0.9), (2, 3, 0.8), (1, 2, 0.1)]);
        let p = Partition::from_labels(&average_linkage(&m, Stop::Clusters(2)));
        assert_eq!(p.clusters(), vec![vec![0, 1], vec![2, 3]]);
        let all = Partition::from_labels(&average_linkage(&m, Stop::Clusters(4)));
        assert_eq!(all.k(), 4);
        let one = Partition::from_labels(&average_linkage(&m, Stop::Clusters(1)));
        assert_eq!(one.k(), 1);
    }

    #[test]
    fn threshold_stops_merging() {
        let m = sim(4, &[(0, 1, 0.9), (2, 3, 0.8), (1, 2, 0.1)]);
        // distances 0.1, 0.2, then average between groups ~0.975
        let p = Partition::from_labels(&average_linkage(&m, Stop::Threshold(0.5)));
        assert_eq!(p.k(), 2);
        let q = Partition::from_labels(&average_linkage(&m, Stop::Threshold(0.15)));
        assert_eq!(q.clusters(), vec![vec![0, 1], vec![2], vec![3]]);
        let none = Partition::from_labels(&average_linkage(&m, Stop::Threshold(1e-9)));
        assert_eq!(none.k(), 4);
    }

    #[test]
    fn ties_prefer_lexicographically_first_pair() {
        // all pairs equally distant: (0,1) merges first
        let m = sim(3, &[(0, 1, 0.5), (0, 2, 0.5), (1, 2, 0.5)]);
        let p = Partition::from_labels(&average_linkage(&m, Stop::Clusters(2)));
        assert_eq!(p.clusters(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn average_linkage_uses_mean_distance() {
        // {0,1} merge first; then 2 is at mean distance (0.2+1.0)/2 = 0.6 from
        // {0,1} while 3 is at 0.55 from 2, so {2,3} merge before 2 joins {0,1}.
        let m = sim(4, &[(0, 1, 0.95), (0, 2, 0.8), (1, 2, 0.0), (2, 3, 0.45)]);
        let p = Partition::from_labels(&average_linkage(&m, Stop::Clusters(2)));
        assert_eq!(p.clusters(), vec![vec![0, 1], vec![2, 3]]);
    }
}
