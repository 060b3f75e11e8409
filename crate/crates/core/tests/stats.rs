use monopart::metrics::Direction;
use monopart::stats::{scott_knott, SampleSet, ScottKnottConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn draw(rng: &mut ChaCha8Rng, mean: f64, n: usize) -> Vec<f64> {
    let d = Normal::new(mean, 0.1).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

fn three_sets(seed: u64) -> Vec<SampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = draw(&mut rng, 0.0, 30);
    // b is a shifted by far less than the spread, so Cliff's delta stays negligible
    let b = a.iter().map(|v| v + 0.001).collect();
    vec![
        SampleSet::new("a", a).unwrap(),
        SampleSet::new("b", b).unwrap(),
        SampleSet::new("c", draw(&mut rng, 5.0, 30)).unwrap(),
    ]
}

#[test]
fn near_sets_share_a_rank_and_far_set_is_split() {
    let cfg = ScottKnottConfig::default();
    for seed in 0..10 {
        let t = scott_knott(&three_sets(seed), Direction::Minimize, &cfg).unwrap();
        assert_eq!(t.rank("a"), Some(1));
        assert_eq!(t.rank("b"), Some(1));
        assert_eq!(t.rank("c"), Some(2));
        let t = scott_knott(&three_sets(seed), Direction::Maximize, &cfg).unwrap();
        assert_eq!(t.rank("c"), Some(1));
        assert_eq!(t.rank("a"), Some(2));
    }
}

#[test]
fn ranks_ignore_positive_affine_rescaling() {
    let cfg = ScottKnottConfig::default();
    for seed in 0..10 {
        let sets = three_sets(seed);
        let base = scott_knott(&sets, Direction::Minimize, &cfg).unwrap();
        for (scale, shift) in [(2.0, 0.0), (1000.0, -3.0), (0.5, 7.0)] {
            let moved: Vec<SampleSet> = sets
                .iter()
                .map(|s| SampleSet::new(&s.label, s.values.iter().map(|v| v * scale + shift).collect()).unwrap())
                .collect();
            assert_eq!(scott_knott(&moved, Direction::Minimize, &cfg).unwrap(), base);
        }
    }
}
