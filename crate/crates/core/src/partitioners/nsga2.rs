//! NSGA-II over integer genomes: fast non-dominated sorting, crowding
//! distance, binary tournament on (rank, crowding), uniform crossover and
//! per-gene reset mutation at rate `1 / genes`. All objectives are minimized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nsga2Settings {
    pub population_size: usize,
    pub parent_size: usize,
    pub generations: usize,
    pub genes: usize,
    /// Each gene takes a value in `0..alleles`.
    pub alleles: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Vec<usize>,
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
}

/// True when `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fronts of indices into `objectives`, best front first.
pub fn non_dominated_sort(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&objectives[i], &objectives[j]) {
                dominated_by[i].push(j);
            } else if i != j && dominates(&objectives[j], &objectives[i]) {
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance for each member of `front` (same order). Boundary
/// points get infinity.
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let n_obj = objectives[front[0]].len();
    for k in 0..n_obj {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            objectives[front[a]][k]
                .partial_cmp(&objectives[front[b]][k])
                .unwrap_or(Ordering::Equal)
        });
        let lo = objectives[front[order[0]]][k];
        let hi = objectives[front[order[m - 1]]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for w in 1..m - 1 {
            let gap = objectives[front[order[w + 1]]][k] - objectives[front[order[w - 1]]][k];
            dist[order[w]] += gap / (hi - lo);
        }
    }
    dist
}

fn rank_population(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let objectives: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    let fronts = non_dominated_sort(&objectives);
    for (r, front) in fronts.iter().enumerate() {
        let crowd = crowding_distance(&objectives, front);
        for (&i, c) in front.iter().zip(crowd) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
    fronts
}

fn tournament(pop: &[Individual], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    let (x, y) = (&pop[a], &pop[b]);
    let a_wins = match x.rank.cmp(&y.rank) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => x.crowding > y.crowding || (x.crowding == y.crowding && a <= b),
    };
    if a_wins {
        a
    } else {
        b
    }
}

/// Runs NSGA-II and returns the final ranked population.
pub fn run<F>(settings: &Nsga2Settings, mut evaluate: F) -> Vec<Individual>
where
    F: FnMut(&[usize]) -> Vec<f64>,
{
    let Nsga2Settings {
        population_size,
        parent_size,
        generations,
        genes,
        alleles,
        seed,
    } = *settings;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mutation_rate = 1.0 / genes.max(1) as f64;

    let mut make = |genome: Vec<usize>| {
        let objectives = evaluate(&genome);
        Individual {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    };

    let mut pop: Vec<Individual> = (0..population_size)
        .map(|_| make((0..genes).map(|_| rng.gen_range(0..alleles)).collect()))
        .collect();
    rank_population(&mut pop);

    for _ in 0..generations {
        let parents: Vec<usize> = (0..parent_size).map(|_| tournament(&pop, &mut rng)).collect();
        let mut offspring = Vec::with_capacity(population_size);
        for _ in 0..population_size {
            let p1 = &pop[parents[rng.gen_range(0..parent_size)]].genome;
            let p2 = &pop[parents[rng.gen_range(0..parent_size)]].genome;
            let child: Vec<usize> = p1
                .iter()
                .zip(p2)
                .map(|(&a, &b)| {
                    let g = if rng.gen_bool(0.5) { a } else { b };
                    if rng.gen::<f64>() < mutation_rate {
                        rng.gen_range(0..alleles)
                    } else {
                        g
                    }
                })
                .collect();
            offspring.push(make(child));
        }
        pop.extend(offspring);
        let fronts = rank_population(&mut pop);

        let mut keep = Vec::with_capacity(population_size);
        for front in fronts {
            if keep.len() + front.len() <= population_size {
                keep.extend(front);
            } else {
                let mut rest = front;
                rest.sort_by(|&a, &b| {
                    pop[b]
                        .crowding
                        .partial_cmp(&pop[a].crowding)
                        .unwrap_or(Ordering::Equal)
                        .then(a.cmp(&b))
                });
                keep.extend(rest.into_iter().take(population_size - keep.len()));
            }
            if keep.len() == population_size {
                break;
            }
        }
        keep.sort_unstable();
        let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
        pop = keep.into_iter().map(|i| slots[i].take().expect("kept once")).collect();
        rank_population(&mut pop);
    }
    pop
}

/// Index (into `front`) of the member closest to the ideal point after
/// min-max normalizing each objective over the front.
pub fn knee_point(front: &[Vec<f64>]) -> Option<usize> {
    let first = front.first()?;
    let n_obj = first.len();
    let mut lo = vec![f64::INFINITY; n_obj];
    let mut hi = vec![f64::NEG_INFINITY; n_obj];
    for o in front {
        for k in 0..n_obj {
            lo[k] = lo[k].min(o[k]);
            hi[k] = hi[k].max(o[k]);
        }
    }
    let distance = |o: &Vec<f64>| {
        (0..n_obj)
            .map(|k| {
                let span = hi[k] - lo[k];
                let z = if span > 0.0 { (o[k] - lo[k]) / span } else { 0.0 };
                z * z
            })
            .sum::<f64>()
    };
    let mut best = 0;
    let mut best_d = distance(first);
    for (i, o) in front.iter().enumerate().skip(1) {
        let d = distance(o);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domination() {
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]));
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(!dominates(&[0.0, 3.0], &[1.0, 2.0]));
    }

    #[test]
    fn sorting_into_fronts() {
        let objs = vec![
            vec![1.0, 5.0],
            vec![2.0, 2.0],
            vec![5.0, 1.0],
            vec![3.0, 3.0],
            vec![6.0, 6.0],
        ];
        assert_eq!(
            non_dominated_sort(&objs),
            vec![vec![0, 1, 2], vec![3], vec![4]]
        );
    }

    #[test]
    fn crowding_marks_boundaries() {
        let objs = vec![vec![0.0, 4.0], vec![1.0, 2.0], vec![4.0, 0.0]];
        let d = crowding_distance(&objs, &[0, 1, 2]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        // (4-0)/4 + (4-0)/4
        assert!((d[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn knee_prefers_balanced_point() {
        let front = vec![vec![0.0, 1.0], vec![0.2, 0.2], vec![1.0, 0.0]];
        assert_eq!(knee_point(&front), Some(1));
        assert_eq!(knee_point(&[]), None);
    }

    #[test]
    fn converges_on_a_toy_problem() {
        // minimize (#ones, #zeros) over 6 bits: every genome is Pareto-optimal,
        // so the final population is a single front.
        let settings = Nsga2Settings {
            population_size: 10,
            parent_size: 6,
            generations: 5,
            genes: 6,
            alleles: 2,
            seed: 9,
        };
        let pop = run(&settings, |g| {
            let ones = g.iter().filter(|&&x| x == 1).count() as f64;
            vec![ones, 6.0 - ones]
        });
        assert_eq!(pop.len(), 10);
        assert!(pop.iter().all(|i| i.rank == 0));
    }
}
