use super::{RankTable, Result, StatsError, TREATMENTS, UNTUNED};
use crate::metrics::{Metric, MetricVector};
use std::collections::{BTreeMap, BTreeSet};

/// Known treatments first in protocol order, any others alphabetically.
fn order_treatments(labels: &BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = TREATMENTS
        .iter()
        .filter(|t| labels.contains(**t))
        .map(|t| t.to_string())
        .collect();
    out.extend(
        labels
            .iter()
            .filter(|l| !TREATMENTS.contains(&l.as_str()))
            .cloned(),
    );
    out
}

/// Left-aligned columns separated by two spaces, no trailing whitespace.
pub(crate) fn render_grid(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            line.extend(std::iter::repeat(' ').take(widths[c] - cell.chars().count()));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Metrics on which untuned, tuned or neither holds the most rank-1 wins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TotalRow {
    pub untuned: usize,
    pub tuned: usize,
    pub tie: usize,
}

/// Rank-1 counts per (metric, treatment) across datasets, for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct WinTable {
    pub treatments: Vec<String>,
    pub n_datasets: usize,
    pub wins: BTreeMap<Metric, BTreeMap<String, usize>>,
    pub totals: TotalRow,
}

pub const WINS_CSV_HEADER: &str = "algorithm,metric,treatment,wins";

impl WinTable {
    pub fn wins(&self, metric: Metric, treatment: &str) -> usize {
        self.wins
            .get(&metric)
            .and_then(|m| m.get(treatment))
            .copied()
            .unwrap_or(0)
    }

    /// Rows of `algorithm,metric,treatment,wins`; the total block uses the
    /// metric column value `total` and treatments `untuned`, `tuned`, `tie`.
    pub fn csv_rows(&self, algorithm: &str) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (metric, counts) in &self.wins {
            for t in &self.treatments {
                rows.push(vec![
                    algorithm.to_string(),
                    metric.label().to_string(),
                    t.clone(),
                    counts.get(t).copied().unwrap_or(0).to_string(),
                ]);
            }
        }
        for (label, n) in [
            ("untuned", self.totals.untuned),
            ("tuned", self.totals.tuned),
            ("tie", self.totals.tie),
        ] {
            rows.push(vec![
                algorithm.to_string(),
                "total".into(),
                label.into(),
                n.to_string(),
            ]);
        }
        rows
    }

    /// Metric blocks of treatment rows followed by the untuned/tuned/tie block.
    pub fn render_text(&self, title: &str) -> String {
        let mut rows = vec![vec!["metric".to_string(), "treatment".into(), "wins".into()]];
        for (metric, counts) in &self.wins {
            for (i, t) in self.treatments.iter().enumerate() {
                let head = if i == 0 { metric.label() } else { "" };
                rows.push(vec![
                    head.to_string(),
                    t.clone(),
                    counts.get(t).copied().unwrap_or(0).to_string(),
                ]);
            }
        }
        for (i, (label, n)) in [
            ("untuned", self.totals.untuned),
            ("tuned", self.totals.tuned),
            ("tie", self.totals.tie),
        ]
        .into_iter()
        .enumerate()
        {
            let head = if i == 0 { "total" } else { "" };
            rows.push(vec![head.to_string(), label.to_string(), n.to_string()]);
        }
        format!(
            "{title} ({} datasets)\n{}",
            self.n_datasets,
            render_grid(&rows)
        )
    }
}

/// Counts, per metric and treatment, the datasets on which the treatment
/// holds rank 1. For the total row each metric goes to untuned when untuned
/// has more wins than the better of the tuned treatments, to tuned when it
/// has fewer, and to tie otherwise.
pub fn win_table(ranked: &BTreeMap<(String, Metric), RankTable>) -> Result<WinTable> {
    let mut tables = ranked.iter();
    let (_, first) = tables.next().ok_or(StatsError::Empty)?;
    let labels: BTreeSet<String> = first.ranks.keys().cloned().collect();
    for ((dataset, metric), t) in tables {
        let these: BTreeSet<String> = t.ranks.keys().cloned().collect();
        if these != labels {
            return Err(StatsError::InconsistentTreatments(format!(
                "{dataset}/{metric}: {:?} vs {:?}",
                these, labels
            )));
        }
    }
    let treatments = order_treatments(&labels);
    let datasets: BTreeSet<&str> = ranked.keys().map(|(d, _)| d.as_str()).collect();

    let mut wins: BTreeMap<Metric, BTreeMap<String, usize>> = BTreeMap::new();
    for ((_, metric), table) in ranked {
        let counts = wins
            .entry(*metric)
            .or_insert_with(|| treatments.iter().map(|t| (t.clone(), 0)).collect());
        for (label, &rank) in &table.ranks {
            if rank == 1 {
                *counts.get_mut(label).expect("consistent labels") += 1;
            }
        }
    }

    let mut totals = TotalRow::default();
    for counts in wins.values() {
        let untuned = counts.get(UNTUNED).copied().unwrap_or(0);
        let tuned = counts
            .iter()
            .filter(|(t, _)| t.as_str() != UNTUNED)
            .map(|(_, &n)| n)
            .max()
            .unwrap_or(0);
        match untuned.cmp(&tuned) {
            std::cmp::Ordering::Greater => totals.untuned += 1,
            std::cmp::Ordering::Less => totals.tuned += 1,
            std::cmp::Ordering::Equal => totals.tie += 1,
        }
    }

    Ok(WinTable {
        treatments,
        n_datasets: datasets.len(),
        wins,
        totals,
    })
}

/// Best value of one metric for one algorithm on one dataset, and the
/// treatment it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct BestCell {
    pub value: f64,
    pub treatment: String,
}

/// Cross-algorithm comparison: per (dataset, metric) the best treatment value
/// of every algorithm, the winning algorithms and per-algorithm win tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct BestOfTable {
    pub datasets: Vec<String>,
    pub algorithms: Vec<String>,
    /// Keyed by (dataset, algorithm, metric).
    pub cells: BTreeMap<(String, String, Metric), BestCell>,
    /// Algorithms holding the best value, keyed by (dataset, metric).
    pub winners: BTreeMap<(String, Metric), Vec<String>>,
    /// Win tallies per algorithm and metric.
    pub wins: BTreeMap<String, BTreeMap<Metric, usize>>,
}

pub const BEST_OF_CSV_HEADER: &str = "dataset,algorithm,metric,value,treatment,best";

impl BestOfTable {
    pub fn cell(&self, dataset: &str, algorithm: &str, metric: Metric) -> Option<&BestCell> {
        self.cells
            .get(&(dataset.to_string(), algorithm.to_string(), metric))
    }

    pub fn wins(&self, algorithm: &str, metric: Metric) -> usize {
        self.wins
            .get(algorithm)
            .and_then(|m| m.get(&metric))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_wins(&self, algorithm: &str) -> usize {
        self.wins.get(algorithm).map_or(0, |m| m.values().sum())
    }

    fn is_winner(&self, dataset: &str, algorithm: &str, metric: Metric) -> bool {
        self.winners
            .get(&(dataset.to_string(), metric))
            .is_some_and(|w| w.iter().any(|a| a == algorithm))
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for d in &self.datasets {
            for a in &self.algorithms {
                for m in Metric::ALL {
                    let c = self.cell(d, a, m).expect("complete grid");
                    rows.push(vec![
                        d.clone(),
                        a.clone(),
                        m.label().to_string(),
                        format!("{:.6}", c.value),
                        c.treatment.clone(),
                        self.is_winner(d, a, m).to_string(),
                    ]);
                }
            }
        }
        rows
    }

    /// One row per (dataset, metric) with a column per algorithm, then a
    /// `Wins` block. Winning values are bracketed; `*` marks a best value
    /// that came from the untuned treatment.
    pub fn render_text(&self) -> String {
        let mut header = vec!["dataset".to_string(), "metric".into()];
        header.extend(self.algorithms.iter().cloned());
        let mut rows = vec![header];
        for d in &self.datasets {
            for (i, m) in Metric::ALL.into_iter().enumerate() {
                let mut row = vec![
                    if i == 0 { d.clone() } else { String::new() },
                    m.label().to_string(),
                ];
                for a in &self.algorithms {
                    let c = self.cell(d, a, m).expect("complete grid");
                    let mut s = format!("{:.6}", c.value);
                    if c.treatment == UNTUNED {
                        s.push('*');
                    }
                    if self.is_winner(d, a, m) {
                        s = format!("[{s}]");
                    }
                    row.push(s);
                }
                rows.push(row);
            }
        }
        for (i, m) in Metric::ALL.into_iter().enumerate() {
            let mut row = vec![
                if i == 0 { "Wins".to_string() } else { String::new() },
                m.label().to_string(),
            ];
            row.extend(self.algorithms.iter().map(|a| self.wins(a, m).to_string()));
            rows.push(row);
        }
        let mut row = vec![String::new(), "total".to_string()];
        row.extend(self.algorithms.iter().map(|a| self.total_wins(a).to_string()));
        rows.push(row);
        render_grid(&rows)
    }
}

/// Builds the best-of table from per-(dataset, algorithm, treatment) metric
/// summaries. `treatments` gives the preference order among equal values.
/// Every tied-best algorithm gets a win. Missing cells are an error listing
/// every hole.
pub fn best_of(
    results: &BTreeMap<(String, String, String), MetricVector>,
    datasets: &[String],
    algorithms: &[String],
    treatments: &[String],
) -> Result<BestOfTable> {
    if datasets.is_empty() || algorithms.is_empty() || treatments.is_empty() {
        return Err(StatsError::Empty);
    }
    let missing: Vec<String> = datasets
        .iter()
        .flat_map(|d| {
            algorithms.iter().flat_map(move |a| {
                treatments.iter().filter_map(move |t| {
                    let key = (d.clone(), a.clone(), t.clone());
                    (!results.contains_key(&key)).then(|| format!("{d}/{a}/{t}"))
                })
            })
        })
        .collect();
    if !missing.is_empty() {
        return Err(StatsError::MissingCells(missing));
    }
    if let Some(((d, a, t), _)) = results
        .iter()
        .find(|(_, v)| v.to_array().iter().any(|x| !x.is_finite()))
    {
        return Err(StatsError::NonFinite(format!("{d}/{a}/{t}")));
    }

    let mut cells = BTreeMap::new();
    let mut winners = BTreeMap::new();
    let mut wins: BTreeMap<String, BTreeMap<Metric, usize>> = algorithms
        .iter()
        .map(|a| (a.clone(), Metric::ALL.iter().map(|&m| (m, 0)).collect()))
        .collect();
    for d in datasets {
        for m in Metric::ALL {
            let dir = m.direction();
            let mut best_here: Vec<(String, f64)> = Vec::new();
            for a in algorithms {
                let mut best: Option<BestCell> = None;
                for t in treatments {
                    let v = results[&(d.clone(), a.clone(), t.clone())].get(m);
                    if best.as_ref().map_or(true, |b| dir.better(v, b.value)) {
                        best = Some(BestCell {
                            value: v,
                            treatment: t.clone(),
                        });
                    }
                }
                let best = best.expect("treatments non-empty");
                best_here.push((a.clone(), best.value));
                cells.insert((d.clone(), a.clone(), m), best);
            }
            let top = best_here
                .iter()
                .map(|(_, v)| *v)
                .reduce(|x, y| if dir.better(y, x) { y } else { x })
                .expect("algorithms non-empty");
            let won: Vec<String> = best_here
                .into_iter()
                .filter(|(_, v)| *v == top)
                .map(|(a, _)| a)
                .collect();
            for a in &won {
                *wins.get_mut(a).expect("known algorithm").get_mut(&m).expect("metric") += 1;
            }
            winners.insert((d.clone(), m), won);
        }
    }
    Ok(BestOfTable {
        datasets: datasets.to_vec(),
        algorithms: algorithms.to_vec(),
        cells,
        winners,
        wins,
    })
}
