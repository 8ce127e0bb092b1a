use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use banditbench::data::{self, Manifest};
use banditbench::harness::{
    emit_outputs, ntk_report, run_grid, DatasetRef, ExperimentConfig, GridResult, GridSpec, NtkReportConfig,
    OutputOptions,
};
use banditbench::policies::Algorithm;
use banditbench::{Error, Result};

#[derive(Parser)]
#[command(name = "banditbench", version, about = "Contextual-bandit benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration (all repeats) per algorithm.
    Run(ExperimentArgs),
    /// Run the hyperparameter grid per algorithm.
    Grid(ExperimentArgs),
    /// Write an NTK analysis report.
    Ntk(NtkArgs),
    /// Ingest a dataset and write its manifest.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// synthetic:KIND, csv:PATH[:SCHEMA], mushroom:PATH or idx:IMAGES,LABELS
    #[arg(long)]
    dataset: Option<String>,
    /// One algorithm or a comma-separated list.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delay: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Observation count after which training stops (`none` to never stop).
    #[arg(long = "stop-train")]
    stop_train: Option<String>,
    #[arg(long, value_parser = ["diag", "full"])]
    posterior: Option<String>,
    /// Extra `key=value` settings (same keys as the config file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write 0 for per-round timings so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl ExperimentArgs {
    fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut kv = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                data::parse_key_values(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags: [(&str, Option<String>); 15] = [
            ("dataset", self.dataset.clone()),
            ("algo", self.algo.clone()),
            ("T", self.horizon.map(|v| v.to_string())),
            ("repeats", self.repeats.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("delay", self.delay.map(|v| v.to_string())),
            ("nu", self.nu.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("eps", self.eps.map(|v| v.to_string())),
            ("width", self.width.map(|v| v.to_string())),
            ("depth", self.depth.map(|v| v.to_string())),
            ("iters", self.iters.map(|v| v.to_string())),
            ("lr", self.lr.map(|v| v.to_string())),
            ("stop-train", self.stop_train.clone()),
            ("posterior", self.posterior.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        }
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {s:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(kv)
    }
}

/// One experiment config per requested algorithm.
fn experiment_configs(args: &ExperimentArgs, default_grid: bool) -> Result<Vec<ExperimentConfig>> {
    let mut kv = args.settings()?;
    let dataset = kv
        .remove("dataset")
        .ok_or_else(|| Error::InvalidConfig("--dataset is required".into()))?;
    let dataset = DatasetRef::parse(&dataset)?;
    let algos = kv.remove("algo").unwrap_or_else(|| "neural_ts".into());
    algos
        .split(',')
        .map(|a| {
            let algo: Algorithm = a.trim().parse()?;
            let mut cfg = ExperimentConfig::new(dataset.clone(), algo);
            if default_grid {
                cfg.grid = GridSpec::default_for(&cfg.policy);
            }
            cfg.apply(&kv)?;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

fn run_experiments(args: &ExperimentArgs, default_grid: bool) -> Result<()> {
    let configs = experiment_configs(args, default_grid)?;
    let source = configs[0].dataset.load()?;
    let mut results: Vec<GridResult> = Vec::with_capacity(configs.len());
    for cfg in &configs {
        log::info!(
            "{}: {} cells x {} repeats, T = {}",
            cfg.policy.algorithm,
            cfg.grid.cells().len(),
            cfg.repeats,
            cfg.horizon
        );
        let result = run_grid(cfg, &source)?;
        let best = result.best_cell();
        println!(
            "{:<12} best cell {} (lambda={}, nu={}, eps={}): regret {:.2} ± {:.2} (std {:.2})",
            result.algorithm.as_str(),
            best.index,
            best.cell.lambda,
            best.cell.nu,
            best.cell.epsilon,
            best.summary.mean,
            best.summary.stderr,
            best.summary.std
        );
        results.push(result);
    }
    emit_outputs(&args.out, &results, OutputOptions { timing: !args.no_timing })?;
    write_json(&args.out.join("config.json"), &configs)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Args)]
struct NtkArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 100)]
    width: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Rounds whose arm contexts form the context set.
    #[arg(long = "T", default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_contexts: usize,
    /// Sub-Gaussian noise parameter R.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Absolute constant of the width condition.
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    #[arg(long)]
    include_matrix: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_ntk(args: &NtkArgs) -> Result<()> {
    let source = DatasetRef::parse(&args.dataset)?.load()?;
    let cfg = NtkReportConfig {
        depth: args.depth,
        width: args.width,
        lambda: args.lambda,
        rounds: args.rounds,
        max_contexts: args.max_contexts,
        seed: args.seed,
        noise: args.noise,
        delta: args.delta,
        constant: args.constant,
        include_matrix: args.include_matrix,
    };
    let report = ntk_report(&source, &cfg)?;
    match &args.out {
        Some(dir) => {
            let path = dir.join("ntk.json");
            write_json(&path, &report)?;
            println!("wrote {}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    dataset: String,
    /// Record the context layout with the duplicated-half transform.
    #[arg(long)]
    duplicate_half: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run_ingest(args: &IngestArgs) -> Result<()> {
    let dataset = DatasetRef::parse(&args.dataset)?;
    let files = dataset.files();
    let loaded = match dataset.load()? {
        banditbench::harness::DataSource::Classification(ds) => ds,
        banditbench::harness::DataSource::Synthetic(_) => {
            return Err(Error::InvalidConfig("synthetic datasets have nothing to ingest".into()));
        }
    };
    let manifest = Manifest::build(&loaded, &files, args.duplicate_half)?;
    let path = args.out.join("manifest.json");
    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    manifest.write(&path)?;
    println!(
        "{}: {} rows ({} dropped), {} classes, context dim {}; wrote {}",
        manifest.source,
        manifest.n,
        manifest.dropped_rows,
        manifest.num_classes,
        manifest.context_dim,
        path.display()
    );
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run_experiments(args, false),
        Command::Grid(args) => run_experiments(args, true),
        Command::Ntk(args) => run_ntk(args),
        Command::Ingest(args) => run_ingest(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
