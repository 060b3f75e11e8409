use super::{check_count, invalid, PartitionError, Result};
use crate::corpus::{CallGraph, Partition, TraceDataset};

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[derive(Debug, Clone, Copy)]
struct TreeEdge {
    a: usize,
    b: usize,
    weight: u64,
}

/// Spanning-forest min-cut partitioning.
///
/// A maximum-weight spanning forest is grown over the undirected call graph
/// (Kruskal, heaviest edge first, ties by class index). The lowest-weight
/// tree edges are then removed until the connected classes form
/// `n_partitions` components; any component larger than `max_partition_size`
/// keeps losing its lowest internal tree edge until it fits. Classes without
/// edges become singleton clusters after all others.
pub fn partition_mem(
    ds: &TraceDataset,
    n_partitions: usize,
    max_partition_size: usize,
    _seed: u64,
) -> Result<Partition> {
    let n = ds.n_classes();
    check_count("n_partitions", n_partitions, n)?;
    if max_partition_size < 2 {
        return Err(invalid("max_partition_size", "must be >= 2"));
    }
    if max_partition_size * n_partitions < n {
        return Err(PartitionError::Infeasible(format!(
            "max_partition_size {max_partition_size} < ceil({n} / {n_partitions})"
        )));
    }
    let graph = CallGraph::build(ds);

    let mut edges: Vec<TreeEdge> = graph
        .edges()
        .map(|((a, b), weight)| TreeEdge { a, b, weight })
        .collect();
    // heaviest first; sort is stable so index order breaks ties
    edges.sort_by(|x, y| y.weight.cmp(&x.weight));
    let mut dsu = DisjointSet::new(n);
    let mut tree: Vec<TreeEdge> = edges.into_iter().filter(|e| dsu.union(e.a, e.b)).collect();

    let mut connected = vec![false; n];
    for e in &tree {
        connected[e.a] = true;
        connected[e.b] = true;
    }
    let n_connected = connected.iter().filter(|&&c| c).count();
    let components = n_connected - tree.len();
    let cuts = n_partitions.saturating_sub(components).min(tree.len());
    // lowest weight first; among equal weights, the edge added last goes first
    let mut order: Vec<usize> = (0..tree.len()).collect();
    order.sort_by(|&x, &y| tree[x].weight.cmp(&tree[y].weight).then(y.cmp(&x)));
    let removed: std::collections::HashSet<usize> = order.into_iter().take(cuts).collect();
    tree = tree
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, e)| e)
        .collect();

    loop {
        let labels = component_labels(n, &tree);
        let mut sizes = vec![0usize; n];
        for (c, &l) in labels.iter().enumerate() {
            if connected[c] {
                sizes[l] += 1;
            }
        }
        let oversized = tree
            .iter()
            .enumerate()
            .filter(|(_, e)| sizes[labels[e.a]] > max_partition_size)
            .min_by(|(i, x), (j, y)| x.weight.cmp(&y.weight).then(j.cmp(i)))
            .map(|(i, _)| i);
        match oversized {
            Some(i) => {
                tree.remove(i);
            }
            None => break,
        }
    }

    let labels = component_labels(n, &tree);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for c in (0..n).filter(|&c| connected[c]) {
        let root = labels[c];
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(c);
    }
    let isolated = (0..n).filter(|&c| !connected[c]).count();
    if isolated > 0 {
        log::debug!("mem: {isolated} classes without edges become singleton clusters");
    }
    clusters.extend((0..n).filter(|&c| !connected[c]).map(|c| vec![c]));
    Partition::from_clusters(n, &clusters).map_err(|e| PartitionError::Infeasible(e.to_string()))
}

fn component_labels(n: usize, tree: &[TreeEdge]) -> Vec<usize> {
    let mut dsu = DisjointSet::new(n);
    for e in tree {
        dsu.union(e.a, e.b);
    }
    (0..n).map(|c| dsu.find(c)).collect()
}
