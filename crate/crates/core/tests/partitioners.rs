use monopart::corpus::{Partition, SyntheticCorpus};
use monopart::metrics::{icp, mq};
use monopart::partitioners::{hill_climb, partition_fosci, run_partitioner, Algorithm, FosciParams, PartitionerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bunch_ends_at_a_local_optimum() {
    for seed in 0..8 {
        let s = SyntheticCorpus::generate(seed, 14, 4, 0.6).unwrap();
        let cap = 4;
        let o = hill_climb(&s.dataset, cap, 3, 1.0, seed, 10_000).unwrap();
        let labels = o.partition.assignment().to_vec();
        let k = o.partition.k();
        let here = mq(&s.dataset, &o.partition).unwrap();
        // every single-class move, including into a fresh cluster while under the cap
        let targets = if k < cap { k + 1 } else { k };
        for v in 0..labels.len() {
            for to in 0..targets {
                if to == labels[v] {
                    continue;
                }
                let mut moved = labels.clone();
                moved[v] = to;
                let there = mq(&s.dataset, &Partition::from_labels(&moved)).unwrap();
                assert!(there <= here + 1e-9, "seed {seed}: moving {v} to {to} improves MQ {here} -> {there}");
            }
        }
    }
}

#[test]
fn fosci_beats_random_partitions_on_icp() {
    let params = FosciParams {
        n_clusters: 4,
        nsga_iterations: 30,
        population_size: 20,
        parent_size: 10,
        stop_threshold: 0.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..5 {
        let s = SyntheticCorpus::generate(seed, 20, 4, 0.8).unwrap();
        let found = icp(&s.dataset, &partition_fosci(&s.dataset, &params, seed).unwrap()).unwrap();
        let mut random: Vec<f64> = (0..50)
            .map(|_| {
                let labels: Vec<usize> = (0..20).map(|_| rng.gen_range(0..4)).collect();
                icp(&s.dataset, &Partition::from_labels(&labels)).unwrap()
            })
            .collect();
        random.sort_by(f64::total_cmp);
        assert!(found < random[25], "seed {seed}: FoSCI ICP {found} vs random median {}", random[25]);
    }
}

#[test]
fn every_algorithm_is_valid_and_reproducible_across_seeds() {
    let s = SyntheticCorpus::generate(5, 18, 4, 0.7).unwrap();
    for alg in Algorithm::ALL {
        for seed in 0..10 {
            let cfg = PartitionerConfig::defaults(alg, &s.dataset, seed);
            let a = run_partitioner(&s.dataset, &cfg).unwrap();
            let b = run_partitioner(&s.dataset, &cfg).unwrap();
            assert_eq!(a, b, "{alg} seed {seed}");
            assert_eq!(a.len(), 18);
            assert!(a.k() >= 1 && a.k() <= 18);
            a.check_against(&s.dataset).unwrap();
        }
    }
}
