use monopart::corpus::{cooccurrence_matrix, CallGraph, RawDataset, RawTrace, TraceDataset};
use monopart::load_dataset;
use proptest::prelude::*;
use std::path::Path;

fn raw_corpus() -> impl Strategy<Value = RawDataset> {
    (2usize..8, 1usize..4).prop_flat_map(|(n, u)| {
        let call = (0..n, 0..n);
        let trace = (0..u, proptest::collection::vec(call, 1..10));
        proptest::collection::vec(trace, 1..8).prop_map(move |traces| RawDataset {
            classes: (0..n).map(|i| format!("C{i}")).collect(),
            use_cases: (0..u).map(|i| format!("u{i}")).collect(),
            traces: traces
                .into_iter()
                .map(|(uc, calls)| RawTrace {
                    use_case: format!("u{uc}"),
                    calls: calls.into_iter().map(|(a, b)| (format!("C{a}"), format!("C{b}"))).collect(),
                })
                .collect(),
        })
    })
}

proptest! {
    #[test]
    fn graph_conserves_calls(raw in raw_corpus()) {
        let ds = TraceDataset::from_raw(raw).unwrap();
        let g = CallGraph::build(&ds);
        let calls: u64 = ds.traces().iter().map(|t| t.calls.len() as u64).sum();
        prop_assert_eq!(g.total_weight() + g.dropped_self_calls(), calls);
        prop_assert_eq!(g.total_weight(), ds.non_self_calls());
        let directed: u64 = g.directed_edges().map(|(_, w)| w).sum();
        let undirected: u64 = g.edges().map(|(_, w)| w).sum();
        prop_assert_eq!(directed, undirected);
        for a in 0..ds.n_classes() {
            prop_assert_eq!(g.directed_weight(a, a), 0);
            for b in 0..ds.n_classes() {
                prop_assert_eq!(g.edge_weight(a, b), g.edge_weight(b, a));
                if a != b {
                    prop_assert_eq!(g.edge_weight(a, b), g.directed_weight(a, b) + g.directed_weight(b, a));
                }
            }
        }
    }

    #[test]
    fn jaccard_is_symmetric_and_order_free(raw in raw_corpus()) {
        let ds = TraceDataset::from_raw(raw.clone()).unwrap();
        let m = cooccurrence_matrix(&ds);
        let mut reversed = raw;
        reversed.traces.reverse();
        reversed.classes.reverse();
        let r = cooccurrence_matrix(&TraceDataset::from_raw(reversed).unwrap());
        for i in 0..ds.n_classes() {
            for j in 0..ds.n_classes() {
                let v = m.get(i, j);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, m.get(j, i));
                prop_assert_eq!(v, r.get(i, j));
            }
        }
    }

    #[test]
    fn canonical_json_round_trips(raw in raw_corpus()) {
        let ds = TraceDataset::from_raw(raw).unwrap();
        let again = TraceDataset::from_json_str(&ds.to_canonical_json()).unwrap();
        prop_assert_eq!(&again, &ds);
        prop_assert_eq!(again.to_canonical_json(), ds.to_canonical_json());
    }
}

#[test]
fn store_fixture_is_canonical() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/sample_store.json");
    let ds = load_dataset(&path).unwrap();
    assert_eq!(ds.n_classes(), 8);
    assert_eq!(ds.use_cases(), ["browse", "checkout", "shop"]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.trim_end(), ds.to_canonical_json().trim_end());
}
