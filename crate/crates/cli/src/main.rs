use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use monopart::corpus::{Partition, PartitionJson, SyntheticCorpus};
use monopart::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use monopart::metrics::{loss, LossSpec, MetricContext};
use monopart::partitioners::{run_partitioner, Algorithm, ParamValue, PartitionerConfig};
use monopart::{load_dataset, save_dataset};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "monopart", version, about = "Partition monolith traces into microservice candidates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the untuned / random / hyperopt protocol described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Partition one corpus and print the clusters as JSON.
    Partition {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        /// Hyperparameter override, `name=value`; repeatable.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score a partition file against a corpus.
    Score {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        partition: PathBuf,
    },
    /// Recompute ranks and win tables from the trials.csv files of a run.
    Rank {
        #[arg(long)]
        input: PathBuf,
    },
    /// Write a synthetic corpus with a planted modular structure.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        classes: usize,
        #[arg(long = "use-cases")]
        use_cases: usize,
        #[arg(long)]
        modularity: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn workers() -> Result<Option<usize>> {
    match std::env::var("MONOPART_WORKERS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("MONOPART_WORKERS must be a positive integer, got {v:?}"))?;
            if n == 0 {
                bail!("MONOPART_WORKERS must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn run(config: &Path) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building worker pool")?;
    let report = pool.install(|| run_experiment(&cfg))?;
    report
        .emit_all(&cfg.output_dir)
        .with_context(|| format!("writing report to {}", cfg.output_dir.display()))?;
    print!("{}", report.render_tables());
    let failed = report.failed_cells();
    if !failed.is_empty() {
        for c in &failed {
            eprintln!("failed cell: {}", c.key());
        }
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn partition(dataset: &Path, algorithm: Algorithm, overrides: &[String], seed: u64) -> Result<()> {
    let ds = load_dataset(dataset)?;
    let mut cfg = PartitionerConfig::defaults(algorithm, &ds, seed);
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--param expects name=value, got {kv:?}"))?;
        let value = ParamValue::parse(v).with_context(|| format!("--param {k}: {v:?} is not a number"))?;
        if !algorithm.required_params().contains(&k) {
            bail!(
                "{algorithm} has no parameter {k:?} (expected one of {})",
                algorithm.required_params().join(", ")
            );
        }
        cfg.params.insert(k.to_string(), value);
    }
    let p = run_partitioner(&ds, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&p.to_json(&ds))?);
    Ok(())
}

fn score(dataset: &Path, partition: &Path) -> Result<()> {
    let ds = load_dataset(dataset)?;
    let text = std::fs::read_to_string(partition).with_context(|| format!("reading {}", partition.display()))?;
    let json: PartitionJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", partition.display()))?;
    let p = Partition::from_json(&ds, &json)?;
    let metrics = MetricContext::new(&ds).evaluate(&p)?;
    let value = loss(&metrics, &LossSpec::default())?;
    let mut out = serde_json::to_value(metrics)?;
    out["loss"] = serde_json::json!(value);
    out["k"] = serde_json::json!(p.k());
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn rank(input: &Path) -> Result<()> {
    let report = ExperimentReport::from_trials_dir(input)?;
    print!("{}", report.render_tables());
    for n in &report.analysis.notes {
        eprintln!("note: {n}");
    }
    Ok(())
}

fn synth(seed: u64, classes: usize, use_cases: usize, modularity: f64, out: &Path) -> Result<()> {
    let s = SyntheticCorpus::generate(seed, classes, use_cases, modularity)?;
    save_dataset(&s.dataset, out)?;
    eprintln!(
        "wrote {} classes, {} traces, {} planted groups to {}",
        s.dataset.n_classes(),
        s.dataset.traces().len(),
        s.planted.k(),
        out.display()
    );
    Ok(())
}

fn main() -> Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => run(&config),
        Command::Partition {
            dataset,
            algorithm,
            params,
            seed,
        } => partition(&dataset, algorithm, &params, seed).map(|_| ExitCode::SUCCESS),
        Command::Score { dataset, partition } => score(&dataset, &partition).map(|_| ExitCode::SUCCESS),
        Command::Rank { input } => rank(&input).map(|_| ExitCode::SUCCESS),
        Command::Synth {
            seed,
            classes,
            use_cases,
            modularity,
            out,
        } => synth(seed, classes, use_cases, modularity, &out).map(|_| ExitCode::SUCCESS),
    }
}
