use super::{io_err, ExperimentError, Result};
use crate::metrics::{Direction, Metric, MetricVector};
use crate::optimizer::{format_float, trial_record, Trial, TRIAL_CSV_HEADER};
use crate::partitioners::{Algorithm, Params};
use crate::stats::{
    best_of, render_grid, scott_knott, win_table, BestOfTable, RankTable, SampleSet,
    ScottKnottConfig, WinTable, BEST_OF_CSV_HEADER, TREATMENTS, WINS_CSV_HEADER,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

/// Metric column value of loss-based rank rows.
pub const LOSS_LABEL: &str = "loss";
pub const RESULTS_CSV_HEADER: &str =
    "dataset,algorithm,treatment,repeat,seed,status,loss,bcp,icp,sm,mq,ifn,param_json";
pub const RANKS_CSV_HEADER: &str = "dataset,algorithm,metric,treatment,rank";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
    pub repeats: usize,
    pub budget: usize,
    pub record_elapsed: bool,
}

impl Provenance {
    fn unknown() -> Self {
        Self {
            seed: 0,
            config_hash: "unknown".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            repeats: 0,
            budget: 0,
            record_elapsed: false,
        }
    }

    fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("config_hash", self.config_hash.clone()),
            ("tool_version", self.tool_version.clone()),
            ("repeats", self.repeats.to_string()),
            ("budget", self.budget.to_string()),
            ("record_elapsed", self.record_elapsed.to_string()),
        ]
    }
}

/// Outcome of one repeat: the best trial of its tuning run (the only trial
/// for untuned). `loss` is `None` when every trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub loss: Option<f64>,
    pub metrics: Option<MetricVector>,
    pub params: Params,
    pub error: Option<String>,
    /// Full trial history; kept for `trials.csv`, not part of the JSON form.
    #[serde(skip)]
    pub trials: Vec<Trial>,
}

impl RepeatResult {
    pub fn failed(&self) -> bool {
        self.loss.is_none() || self.metrics.is_none()
    }
}

/// All repeats of one (dataset, algorithm, treatment) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub treatment: String,
    pub repeats: Vec<RepeatResult>,
}

/// Rounds to the six decimals written to CSV, so that ranks computed during a
/// run and ranks recomputed from its files see the same numbers.
pub(crate) fn at_report_precision(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.6}").parse().expect("formatted float parses")
    } else {
        v
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl CellResult {
    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.dataset, self.algorithm.name(), self.treatment)
    }

    pub fn failed(&self) -> bool {
        self.repeats.is_empty() || self.repeats.iter().any(RepeatResult::failed)
    }

    /// Values of one metric over the repeats, at report precision.
    pub fn metric_values(&self, m: Metric) -> Vec<f64> {
        self.repeats
            .iter()
            .filter_map(|r| r.metrics.map(|v| at_report_precision(v.get(m))))
            .collect()
    }

    /// Losses over the repeats, at report precision.
    pub fn losses(&self) -> Vec<f64> {
        self.repeats
            .iter()
            .filter_map(|r| r.loss.map(at_report_precision))
            .collect()
    }

    /// Per-metric medians over repeats; `None` for a failed cell.
    pub fn median_metrics(&self) -> Option<MetricVector> {
        if self.failed() {
            return None;
        }
        Some(MetricVector::from_array(
            Metric::ALL.map(|m| median(self.metric_values(m))),
        ))
    }

    pub fn median_loss(&self) -> Option<f64> {
        (!self.failed()).then(|| median(self.losses()))
    }

    /// True when every metric and the loss are identical across repeats.
    pub fn is_constant(&self) -> bool {
        let same = |v: Vec<f64>| v.windows(2).all(|w| w[0] == w[1]);
        self.repeats.len() > 1
            && same(self.losses())
            && Metric::ALL.iter().all(|&m| same(self.metric_values(m)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub dataset: String,
    pub algorithm: Algorithm,
    /// Metric label (`BCP`, ..., `IFN`) or `loss`.
    pub metric: String,
    pub treatment: String,
    pub rank: usize,
}

/// Everything derived from the cells: Scott-Knott ranks, win tables, the
/// best-of table and notes about cells that could not be used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub ranks: Vec<RankRow>,
    #[serde(skip)]
    pub wins: Vec<(Algorithm, WinTable)>,
    #[serde(skip)]
    pub best_of: Option<BestOfTable>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub datasets: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    /// Grid order: dataset, algorithm, then treatment.
    pub cells: Vec<CellResult>,
    pub analysis: Analysis,
}

fn analyze(datasets: &[String], algorithms: &[Algorithm], cells: &[CellResult]) -> Analysis {
    let mut notes = Vec::new();
    let find = |d: &str, a: Algorithm, t: &str| {
        cells
            .iter()
            .find(|c| c.dataset == d && c.algorithm == a && c.treatment == t)
    };
    for c in cells {
        for r in c.repeats.iter().filter(|r| r.failed()) {
            let why = r.error.as_deref().unwrap_or("no metrics recorded");
            notes.push(format!("failed: {} repeat {}: {why}", c.key(), r.repeat));
        }
        if c.is_constant() {
            notes.push(format!("constant samples: {}", c.key()));
        }
    }

    let sk = ScottKnottConfig::default();
    let mut ranks = Vec::new();
    let mut by_alg: BTreeMap<Algorithm, BTreeMap<(String, Metric), RankTable>> = BTreeMap::new();
    for d in datasets {
        for &a in algorithms {
            let group: Vec<&CellResult> = TREATMENTS.iter().filter_map(|t| find(d, a, t)).collect();
            let label = format!("{d}/{}", a.name());
            if group.len() != TREATMENTS.len() {
                notes.push(format!("not ranked: {label}: missing treatment cells"));
                continue;
            }
            if group.iter().any(|c| c.failed()) {
                notes.push(format!("not ranked: {label}: failed repeats"));
                continue;
            }
            if group.iter().any(|c| c.repeats.len() < 2) {
                notes.push(format!("not ranked: {label}: fewer than 2 repeats"));
                continue;
            }
            let mut rank_one = |name: &str, values: &dyn Fn(&CellResult) -> Vec<f64>, dir: Direction| {
                let sets: Vec<SampleSet> = group
                    .iter()
                    .map(|c| SampleSet::new(c.treatment.clone(), values(c)).expect("checked samples"))
                    .collect();
                let table = scott_knott(&sets, dir, &sk).expect("non-empty samples");
                for t in TREATMENTS {
                    ranks.push(RankRow {
                        dataset: d.clone(),
                        algorithm: a,
                        metric: name.to_string(),
                        treatment: t.to_string(),
                        rank: table.rank(t).expect("ranked treatment"),
                    });
                }
                table
            };
            for m in Metric::ALL {
                let table = rank_one(m.label(), &|c: &CellResult| c.metric_values(m), m.direction());
                by_alg.entry(a).or_default().insert((d.clone(), m), table);
            }
            rank_one(LOSS_LABEL, &|c: &CellResult| c.losses(), Direction::Minimize);
        }
    }

    let wins = algorithms
        .iter()
        .filter_map(|a| {
            let tables = by_alg.get(a)?;
            Some((*a, win_table(tables).expect("consistent treatments")))
        })
        .collect();

    let results: BTreeMap<(String, String, String), MetricVector> = cells
        .iter()
        .filter_map(|c| {
            let m = c.median_metrics()?;
            Some(((c.dataset.clone(), c.algorithm.label().to_string(), c.treatment.clone()), m))
        })
        .collect();
    let alg_labels: Vec<String> = algorithms.iter().map(|a| a.label().to_string()).collect();
    let treatments: Vec<String> = TREATMENTS.iter().map(|t| t.to_string()).collect();
    let best_of = match best_of(&results, datasets, &alg_labels, &treatments) {
        Ok(t) => Some(t),
        Err(e) => {
            notes.push(format!("no best-of table: {e}"));
            None
        }
    };
    Analysis {
        ranks,
        wins,
        best_of,
        notes,
    }
}

fn csv_string(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.split(',')).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn malformed(path: &Path, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn parse_float(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

fn parse_metrics(cols: &[&str]) -> Option<Option<MetricVector>> {
    if cols.iter().all(|c| c.is_empty()) {
        return Some(None);
    }
    let mut a = [0.0; 5];
    for (slot, c) in a.iter_mut().zip(cols) {
        *slot = parse_float(c)?;
    }
    Some(Some(MetricVector::from_array(a)))
}

fn read_records(path: &Path, header: &str) -> Result<Vec<csv::StringRecord>> {
    let text = read(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let got = r.headers().map_err(|e| malformed(path, e.to_string()))?.clone();
    if got.iter().collect::<Vec<_>>().join(",") != header {
        return Err(malformed(path, format!("expected header {header}")));
    }
    r.records()
        .map(|rec| rec.map_err(|e| malformed(path, e.to_string())))
        .collect()
}

fn read_provenance(dir: &Path) -> Result<Provenance> {
    let path = dir.join("provenance.csv");
    if !path.exists() {
        return Ok(Provenance::unknown());
    }
    let mut p = Provenance::unknown();
    for rec in read_records(&path, "key,value")? {
        let bad = || malformed(&path, format!("bad value for {}", &rec[0]));
        match &rec[0] {
            "seed" => p.seed = rec[1].parse().map_err(|_| bad())?,
            "config_hash" => p.config_hash = rec[1].to_string(),
            "tool_version" => p.tool_version = rec[1].to_string(),
            "repeats" => p.repeats = rec[1].parse().map_err(|_| bad())?,
            "budget" => p.budget = rec[1].parse().map_err(|_| bad())?,
            "record_elapsed" => p.record_elapsed = rec[1].parse().map_err(|_| bad())?,
            _ => return Err(bad()),
        }
    }
    Ok(p)
}

impl ExperimentReport {
    /// Builds a report and its analysis from raw cells.
    pub fn assemble(
        provenance: Provenance,
        datasets: Vec<String>,
        algorithms: Vec<Algorithm>,
        cells: Vec<CellResult>,
    ) -> Self {
        let analysis = analyze(&datasets, &algorithms, &cells);
        Self {
            provenance,
            datasets,
            algorithms,
            cells,
            analysis,
        }
    }

    pub fn failed_cells(&self) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.failed()).collect()
    }

    pub fn cell(&self, dataset: &str, algorithm: Algorithm, treatment: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.algorithm == algorithm && c.treatment == treatment)
    }

    pub fn win_table(&self, algorithm: Algorithm) -> Option<&WinTable> {
        self.analysis
            .wins
            .iter()
            .find(|(a, _)| *a == algorithm)
            .map(|(_, w)| w)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses `report.json` and recomputes the derived tables.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        Ok(Self::assemble(r.provenance, r.datasets, r.algorithms, r.cells))
    }

    pub fn results_csv(&self) -> String {
        let rows = self.cells.iter().flat_map(|c| {
            c.repeats.iter().map(move |r| {
                let mut row = vec![
                    c.dataset.clone(),
                    c.algorithm.name().to_string(),
                    c.treatment.clone(),
                    r.repeat.to_string(),
                    r.seed.to_string(),
                    match &r.error {
                        None if !r.failed() => "ok".to_string(),
                        None => "failed".to_string(),
                        Some(e) => format!("failed: {e}"),
                    },
                    r.loss.map(format_float).unwrap_or_default(),
                ];
                match r.metrics {
                    Some(m) => row.extend(m.to_array().map(format_float)),
                    None => row.extend(std::iter::repeat(String::new()).take(5)),
                }
                row.push(serde_json::to_string(&r.params).expect("params serialize"));
                row
            })
        });
        csv_string(RESULTS_CSV_HEADER, rows)
    }

    pub fn ranks_csv(&self) -> String {
        csv_string(
            RANKS_CSV_HEADER,
            self.analysis.ranks.iter().map(|r| {
                vec![
                    r.dataset.clone(),
                    r.algorithm.name().to_string(),
                    r.metric.clone(),
                    r.treatment.clone(),
                    r.rank.to_string(),
                ]
            }),
        )
    }

    pub fn wins_csv(&self) -> String {
        csv_string(
            WINS_CSV_HEADER,
            self.analysis
                .wins
                .iter()
                .flat_map(|(a, w)| w.csv_rows(a.label())),
        )
    }

    pub fn best_of_csv(&self) -> Option<String> {
        self.analysis
            .best_of
            .as_ref()
            .map(|b| csv_string(BEST_OF_CSV_HEADER, b.csv_rows()))
    }

    fn provenance_csv(&self) -> String {
        csv_string(
            "key,value",
            self.provenance
                .rows()
                .into_iter()
                .map(|(k, v)| vec![k.to_string(), v]),
        )
    }

    fn trials_csv(&self, cell: &CellResult) -> Option<String> {
        if cell.repeats.iter().all(|r| r.trials.is_empty()) {
            return None;
        }
        let rows = cell.repeats.iter().flat_map(|r| {
            r.trials
                .iter()
                .map(|t| trial_record(t, cell.algorithm, self.provenance.record_elapsed))
        });
        Some(csv_string(TRIAL_CSV_HEADER, rows))
    }

    /// Per-algorithm win tables and the best-of table as plain text.
    pub fn render_tables(&self) -> String {
        let mut out = String::from("== Treatment wins per metric (Scott-Knott rank 1) ==\n");
        if self.analysis.wins.is_empty() {
            out.push_str("\n(no ranked cells)\n");
        }
        for (a, w) in &self.analysis.wins {
            out.push('\n');
            out.push_str(&w.render_text(a.label()));
        }
        out.push_str("\n== Best of untuned, random and hyperopt (median over repeats) ==\n\n");
        match &self.analysis.best_of {
            Some(b) => {
                out.push_str(&b.render_text());
                out.push_str("\n[x] best algorithm for the metric, * best value came from untuned\n");
            }
            None => out.push_str("(incomplete grid)\n"),
        }
        out
    }

    /// `summary.txt`: provenance, tables and notes.
    pub fn render_summary(&self) -> String {
        let mut rows: Vec<Vec<String>> = self
            .provenance
            .rows()
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v])
            .collect();
        rows.push(vec!["datasets".into(), self.datasets.join(", ")]);
        rows.push(vec![
            "algorithms".into(),
            self.algorithms
                .iter()
                .map(|a| a.label())
                .collect::<Vec<_>>()
                .join(", "),
        ]);
        let mut out = String::from("== Experiment ==\n\n");
        out.push_str(&render_grid(&rows));
        out.push('\n');
        out.push_str(&self.render_tables());
        out.push_str("\n== Notes ==\n\n");
        if self.analysis.notes.is_empty() {
            out.push_str("(none)\n");
        }
        for n in &self.analysis.notes {
            out.push_str(&format!("- {n}\n"));
        }
        out
    }

    /// Writes the files of one format under `dir`.
    ///
    /// * csv: `<dataset>/<algorithm>/<treatment>/trials.csv` (when trial
    ///   histories are present), `results.csv`, `ranks.csv`, `wins.csv`,
    ///   `best_of.csv` and `provenance.csv`
    /// * text: `summary.txt`
    /// * json: `report.json`
    pub fn emit(&self, dir: &Path, format: ReportFormat) -> Result<()> {
        match format {
            ReportFormat::Csv => {
                for c in &self.cells {
                    if let Some(text) = self.trials_csv(c) {
                        let path = dir
                            .join(&c.dataset)
                            .join(c.algorithm.name())
                            .join(&c.treatment)
                            .join("trials.csv");
                        write(&path, &text)?;
                    }
                }
                write(&dir.join("results.csv"), &self.results_csv())?;
                write(&dir.join("ranks.csv"), &self.ranks_csv())?;
                write(&dir.join("wins.csv"), &self.wins_csv())?;
                write(&dir.join("provenance.csv"), &self.provenance_csv())?;
                if let Some(b) = self.best_of_csv() {
                    write(&dir.join("best_of.csv"), &b)?;
                }
            }
            ReportFormat::Text => write(&dir.join("summary.txt"), &self.render_summary())?,
            ReportFormat::Json => write(&dir.join("report.json"), &self.to_json())?,
        }
        Ok(())
    }

    pub fn emit_all(&self, dir: &Path) -> Result<()> {
        for f in [ReportFormat::Csv, ReportFormat::Text, ReportFormat::Json] {
            self.emit(dir, f)?;
        }
        Ok(())
    }

    /// Rebuilds a report from `results.csv` (and `provenance.csv` when
    /// present). Dataset and algorithm order follow first appearance.
    pub fn from_csv_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("results.csv");
        let mut datasets: Vec<String> = Vec::new();
        let mut algorithms: Vec<Algorithm> = Vec::new();
        let mut cells: Vec<CellResult> = Vec::new();
        for (line, rec) in read_records(&path, RESULTS_CSV_HEADER)?.into_iter().enumerate() {
            let bad = |what: &str| malformed(&path, format!("row {}: bad {what}", line + 1));
            let dataset = rec[0].to_string();
            let algorithm: Algorithm = rec[1].parse().map_err(|_| bad("algorithm"))?;
            let treatment = rec[2].to_string();
            let repeat = rec[3].parse().map_err(|_| bad("repeat"))?;
            let seed = rec[4].parse().map_err(|_| bad("seed"))?;
            let error = match &rec[5] {
                "ok" => None,
                s => Some(s.strip_prefix("failed: ").unwrap_or(s).to_string()),
            };
            let loss = if rec[6].is_empty() {
                None
            } else {
                Some(parse_float(&rec[6]).ok_or_else(|| bad("loss"))?)
            };
            let cols: Vec<&str> = (7..12).map(|i| &rec[i]).collect();
            let metrics = parse_metrics(&cols).ok_or_else(|| bad("metrics"))?;
            let params = serde_json::from_str(&rec[12]).map_err(|_| bad("param_json"))?;
            if !datasets.contains(&dataset) {
                datasets.push(dataset.clone());
            }
            if !algorithms.contains(&algorithm) {
                algorithms.push(algorithm);
            }
            let same = cells.last().is_some_and(|c| {
                c.dataset == dataset && c.algorithm == algorithm && c.treatment == treatment
            });
            if !same {
                cells.push(CellResult {
                    dataset,
                    algorithm,
                    treatment,
                    repeats: Vec::new(),
                });
            }
            cells.last_mut().expect("cell").repeats.push(RepeatResult {
                repeat,
                seed,
                loss,
                metrics,
                params,
                error,
                trials: Vec::new(),
            });
        }
        Ok(Self::assemble(read_provenance(dir)?, datasets, algorithms, cells))
    }

    /// Rebuilds a report from the per-cell `trials.csv` files under `dir`
    /// (`<dataset>/<algorithm>/<treatment>/trials.csv`). Each repeat's
    /// trials start at index 0; a repeat's result is its lowest-loss trial,
    /// the earliest on ties. Repeat seeds are not stored in trial files and
    /// are reported as the seed of the chosen trial.
    pub fn from_trials_dir(dir: &Path) -> Result<Self> {
        let mut found: BTreeMap<(String, Algorithm, usize), Vec<RepeatResult>> = BTreeMap::new();
        let entries = |p: &Path| -> Result<Vec<std::path::PathBuf>> {
            let mut v: Vec<_> = fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            v.sort();
            Ok(v)
        };
        for dpath in entries(dir)? {
            let dataset = dpath.file_name().expect("dir name").to_string_lossy().into_owned();
            for apath in entries(&dpath)? {
                let Ok(algorithm) = apath.file_name().expect("dir name").to_string_lossy().parse::<Algorithm>() else {
                    continue;
                };
                for (ti, t) in TREATMENTS.iter().enumerate() {
                    let path = apath.join(t).join("trials.csv");
                    if !path.exists() {
                        continue;
                    }
                    let repeats = repeats_from_trials(&path)?;
                    found.insert((dataset.clone(), algorithm, ti), repeats);
                }
            }
        }
        if found.is_empty() {
            return Err(malformed(dir, "no <dataset>/<algorithm>/<treatment>/trials.csv files"));
        }
        let mut datasets: Vec<String> = found.keys().map(|k| k.0.clone()).collect();
        datasets.dedup();
        let mut algorithms: Vec<Algorithm> = found.keys().map(|k| k.1).collect();
        algorithms.sort();
        algorithms.dedup();
        let cells = found
            .into_iter()
            .map(|((dataset, algorithm, ti), repeats)| CellResult {
                dataset,
                algorithm,
                treatment: TREATMENTS[ti].to_string(),
                repeats,
            })
            .collect();
        Ok(Self::assemble(read_provenance(dir)?, datasets, algorithms, cells))
    }
}

fn repeats_from_trials(path: &Path) -> Result<Vec<RepeatResult>> {
    let mut runs: Vec<Vec<Trial>> = Vec::new();
    for (line, rec) in read_records(path, TRIAL_CSV_HEADER)?.into_iter().enumerate() {
        let bad = |what: &str| malformed(path, format!("row {}: bad {what}", line + 1));
        let index: usize = rec[0].parse().map_err(|_| bad("index"))?;
        let params: Params = serde_json::from_str(&rec[2]).map_err(|_| bad("param_json"))?;
        let loss = parse_float(&rec[3]).ok_or_else(|| bad("loss"))?;
        let cols: Vec<&str> = (4..9).map(|i| &rec[i]).collect();
        let metrics = parse_metrics(&cols).ok_or_else(|| bad("metrics"))?;
        let seed = rec[9].parse().map_err(|_| bad("seed"))?;
        let ms: u64 = rec[10].parse().map_err(|_| bad("elapsed_ms"))?;
        let failed = !loss.is_finite() || metrics.is_none();
        let trial = Trial {
            index,
            params,
            loss,
            metrics,
            seed,
            elapsed: Duration::from_millis(ms),
            error: failed.then(|| "failed trial".to_string()),
        };
        if index == 0 {
            runs.push(Vec::new());
        }
        runs.last_mut()
            .ok_or_else(|| bad("first index (expected 0)"))?
            .push(trial);
    }
    Ok(runs
        .into_iter()
        .enumerate()
        .map(|(repeat, trials)| {
            let best = trials
                .iter()
                .fold(None::<&Trial>, |b, t| match b {
                    Some(b) if b.loss <= t.loss => Some(b),
                    _ => Some(t),
                })
                .expect("non-empty run")
                .clone();
            RepeatResult {
                repeat,
                seed: best.seed,
                loss: (!best.failed()).then_some(best.loss),
                metrics: best.metrics,
                params: best.params,
                error: best.error,
                trials,
            }
        })
        .collect())
}
