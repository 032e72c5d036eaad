//! The `linkx` command line: `stats`, `synth`, `train` and `eval`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::homophily::{compatibility_matrix, homophily_report, two_hop_node_homophily};
use crate::io::{self, dataset_checksum, load_checkpoint, read_dataset, save_checkpoint, CheckpointMeta, Dims};
use crate::models::{ModelKind, Normalization};
use crate::synth::{AdjacencySignal, FeatureSignal, PatternKind, SynthSpec, TwoChannelConfig};
use crate::train::{
    default_grid, make_splits, mean_std, BatchPolicy, GridRecord, HyperParams, Metric, ModelOptions, Predictor,
    Prepared, SplitMetrics, TrainConfig,
};

/// Environment variable holding the number of training worker threads.
pub const WORKERS_ENV: &str = "LINKX_WORKERS";

pub const MANIFEST: &str = "manifest.json";
pub const RESULTS: &str = "results.json";
pub const TIMING: &str = "timing.json";

#[derive(Debug, Parser)]
#[command(name = "linkx", version, about = "Homophily diagnostics and simple scalable node classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Homophily report and compatibility matrix of a dataset.
    Stats(StatsArgs),
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Grid-search a model over random splits.
    Train(TrainArgs),
    /// Recompute the test metric of a checkpoint.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub dataset: PathBuf,
    /// Treat every edge as undirected.
    #[arg(long)]
    pub symmetrize: bool,
    /// Also estimate two-hop node homophily from this many sampled nodes.
    #[arg(long, value_name = "K")]
    pub two_hop_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write the compatibility matrix as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SynthKind {
    PureHomophily,
    PureHeterophily,
    OnePerClass,
    Er,
    TwoChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdjacencyArg {
    None,
    Monophilous,
    Heterophilous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureArg {
    None,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub kind: SynthKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Edge probability (`er`).
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated class fractions (`er`).
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub adjacency: Option<AdjacencyArg>,
    #[arg(long)]
    pub features: Option<FeatureArg>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub avg_degree: Option<f64>,
    #[arg(long)]
    pub strength: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Mlp,
    Link,
    Linkx,
    ConcatMlp,
    Labelprop,
    Sgc,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Mlp => ModelKind::Mlp,
            ModelArg::Link => ModelKind::Link,
            ModelArg::Linkx => ModelKind::Linkx,
            ModelArg::ConcatMlp => ModelKind::ConcatMlp,
            ModelArg::Labelprop => ModelKind::Labelprop,
            ModelArg::Sgc => ModelKind::Sgc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatchArg {
    Full,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    RocAuc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Sym,
    Row,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(required_unless_present = "from_manifest")]
    pub dataset: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_manifest")]
    pub model: Option<ModelArg>,
    #[arg(long, required_unless_present = "from_manifest")]
    pub seed: Option<u64>,
    /// Output directory for the manifest, results and checkpoints.
    #[arg(long, required_unless_present = "from_manifest")]
    pub out: Option<PathBuf>,
    /// Re-run exactly the configuration recorded in a manifest.
    #[arg(long, value_name = "MANIFEST", conflicts_with_all = ["dataset", "model", "seed"])]
    pub from_manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    pub batch: BatchArg,
    /// Fraction of training nodes per i.i.d. batch.
    #[arg(long, default_value_t = 0.1)]
    pub batch_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub steps_per_epoch: usize,
    #[arg(long, default_value_t = 5)]
    pub splits: usize,
    /// Seed of the split shuffles; defaults to `--seed`.
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.001)]
    pub weight_decay: f64,
    #[arg(long, value_enum, default_value = "accuracy")]
    pub metric: MetricArg,
    #[arg(long)]
    pub symmetrize: bool,
    /// Propagation depth for labelprop and sgc.
    #[arg(long, default_value_t = 1)]
    pub hops: usize,
    #[arg(long, value_enum, default_value = "sym")]
    pub normalization: NormArg,
    #[arg(long)]
    pub link_bias: bool,
    #[arg(long, default_value_t = 1)]
    pub adj_layers: usize,
    #[arg(long, default_value_t = 1)]
    pub feat_layers: usize,
    /// JSON file with the list of grid points to search instead of the default grid.
    #[arg(long, value_name = "PATH")]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Split seed; defaults to the one recorded in the checkpoint.
    #[arg(long)]
    pub split_seed: Option<u64>,
}

/// Everything a training run depends on besides the dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub model: ModelKind,
    pub splits: usize,
    pub split_seed: u64,
    pub train: TrainConfig,
    pub options: ModelOptions,
    pub grid: Vec<HyperParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub results: String,
    pub timing: String,
    pub checkpoints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    pub dataset: PathBuf,
    pub dataset_checksum: String,
    pub seed: u64,
    pub config: TrainRequest,
    /// Paths relative to the output directory.
    pub artifacts: Artifacts,
}

/// Exit code for an error: 2 for unreadable or malformed input, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::Format { .. }
        | Error::Io { .. }
        | Error::Json(_)
        | Error::LengthMismatch { .. }
        | Error::LabelOutOfRange { .. }
        | Error::NodeOutOfRange { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(args) => cmd_stats(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

pub fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let (mut dataset, _) = read_dataset(&args.dataset)?;
    if args.symmetrize {
        dataset = dataset.symmetrized();
    }
    let (g, labels) = (&dataset.graph, &dataset.labels);
    let report = homophily_report(g, labels)?;
    let compat = compatibility_matrix(g, labels)?;
    let two_hop = match args.two_hop_samples {
        Some(k) => Some(json!({
            "samples": k,
            "seed": args.seed,
            "node_homophily": two_hop_node_homophily(g, labels, k, args.seed)?,
        })),
        None => None,
    };
    let edges = if g.is_directed() { g.num_entries() } else { g.num_entries() / 2 };
    let out = json!({
        "schema_version": io::SCHEMA_VERSION,
        "dataset_checksum": dataset_checksum(&args.dataset)?,
        "num_nodes": g.num_nodes(),
        "num_edges": edges,
        "directed": g.is_directed(),
        "symmetrized": args.symmetrize,
        "num_classes": labels.num_classes(),
        "edge_homophily": report.edge_homophily,
        "node_homophily": report.node_homophily,
        "improved_homophily": report.improved,
        "improved_homophily_reason": report.improved_undefined_reason,
        "class_homophily": report.class_wise,
        "class_fractions": report.class_fractions,
        "isolated_nodes": report.isolated_nodes,
        "compatibility": { "values": compat.values, "masked_rows": compat.masked },
        "two_hop": two_hop,
    });
    if let Some(path) = &args.csv {
        fs::write(path, compat.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    match &args.json {
        Some(path) => write_json(path, &out),
        None => print_json(&out),
    }
}

fn synth_spec(args: &SynthArgs) -> Result<SynthSpec> {
    let given = |present: bool, flag: &str, allowed: bool| -> Result<()> {
        if present && !allowed {
            return Err(Error::Invalid(format!("--{flag} does not apply to --kind {:?}", args.kind)));
        }
        Ok(())
    };
    let er = args.kind == SynthKind::Er;
    let two = args.kind == SynthKind::TwoChannel;
    given(args.p.is_some(), "p", er)?;
    given(args.fractions.is_some(), "fractions", er)?;
    given(args.classes.is_some(), "classes", !er)?;
    for (present, flag) in [
        (args.adjacency.is_some(), "adjacency"),
        (args.features.is_some(), "features"),
        (args.noise.is_some(), "noise"),
        (args.avg_degree.is_some(), "avg-degree"),
        (args.strength.is_some(), "strength"),
        (args.feature_dim.is_some(), "feature-dim"),
    ] {
        given(present, flag, two)?;
    }
    let classes = || args.classes.ok_or_else(|| Error::Invalid(format!("--classes is required for --kind {:?}", args.kind)));
    let pattern = |pattern| Ok(SynthSpec::Pattern { pattern, n: args.n, classes: classes()? });
    match args.kind {
        SynthKind::PureHomophily => pattern(PatternKind::PureHomophily),
        SynthKind::PureHeterophily => pattern(PatternKind::PureHeterophily),
        SynthKind::OnePerClass => pattern(PatternKind::OnePerClass),
        SynthKind::Er => Ok(SynthSpec::ErdosRenyi {
            n: args.n,
            p: args.p.ok_or_else(|| Error::Invalid("--p is required for --kind er".into()))?,
            class_fractions: args
                .fractions
                .clone()
                .ok_or_else(|| Error::Invalid("--fractions is required for --kind er".into()))?,
            seed: args.seed,
        }),
        SynthKind::TwoChannel => {
            let mut cfg = TwoChannelConfig::new(args.n, classes()?, args.seed);
            cfg.adjacency_signal = match args.adjacency.unwrap_or(AdjacencyArg::None) {
                AdjacencyArg::None => AdjacencySignal::None,
                AdjacencyArg::Monophilous => AdjacencySignal::Monophilous,
                AdjacencyArg::Heterophilous => AdjacencySignal::Heterophilous,
            };
            cfg.feature_signal = match args.features.unwrap_or(FeatureArg::None) {
                FeatureArg::None => FeatureSignal::None,
                FeatureArg::Gaussian => FeatureSignal::Gaussian,
            };
            cfg.noise = args.noise.unwrap_or(cfg.noise);
            cfg.avg_degree = args.avg_degree.unwrap_or(cfg.avg_degree);
            cfg.strength = args.strength.unwrap_or(cfg.strength);
            cfg.feature_dim = args.feature_dim.unwrap_or(cfg.feature_dim);
            Ok(SynthSpec::PlantedPartition(cfg))
        }
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = synth_spec(args)?;
    let dataset = spec.generate()?;
    io::write_dataset(&args.out, &dataset, Some(&spec))?;
    print_json(&json!({
        "schema_version": io::SCHEMA_VERSION,
        "out": args.out,
        "num_nodes": dataset.num_nodes(),
        "num_classes": dataset.num_classes(),
        "feature_dim": dataset.feature_dim(),
        "dataset_checksum": dataset_checksum(&args.out)?,
    }))
}

fn train_request(args: &TrainArgs) -> Result<(PathBuf, u64, TrainRequest)> {
    let dataset = args.dataset.clone().expect("required by clap");
    let kind: ModelKind = args.model.expect("required by clap").into();
    let seed = args.seed.expect("required by clap");
    let batch = match args.batch {
        BatchArg::Full => BatchPolicy::Full,
        BatchArg::Iid => BatchPolicy::Iid { fraction: args.batch_fraction },
    };
    let train = TrainConfig {
        lr: args.lr,
        weight_decay: args.weight_decay,
        epochs: args.epochs,
        batch,
        steps_per_epoch: args.steps_per_epoch,
        seed,
        metric: match args.metric {
            MetricArg::Accuracy => Metric::Accuracy,
            MetricArg::RocAuc => Metric::RocAuc,
        },
        symmetrize: args.symmetrize,
    };
    let options = ModelOptions {
        hops: args.hops,
        link_bias: args.link_bias,
        adj_layers: args.adj_layers,
        feat_layers: args.feat_layers,
        normalization: match args.normalization {
            NormArg::Sym => Normalization::Sym,
            NormArg::Row => Normalization::Row,
        },
        ..ModelOptions::default()
    };
    let grid = match &args.grid {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Format { path: path.clone(), msg: e.to_string() })?
        }
        None => default_grid(kind),
    };
    if args.splits == 0 {
        return Err(Error::Invalid("--splits must be at least 1".into()));
    }
    let request = TrainRequest { model: kind, splits: args.splits, split_seed: args.split_seed.unwrap_or(seed), train, options, grid };
    Ok((dataset, seed, request))
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let (manifest, out) = match &args.from_manifest {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let manifest: RunManifest =
                serde_json::from_str(&text).map_err(|e| Error::Format { path: path.clone(), msg: e.to_string() })?;
            let out = match &args.out {
                Some(out) => out.clone(),
                None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            (manifest, out)
        }
        None => {
            let (dataset, seed, config) = train_request(args)?;
            let dataset = fs::canonicalize(&dataset).map_err(|e| Error::io(&dataset, e))?;
            let checkpoints = (0..config.splits).map(|i| format!("checkpoints/split{i}")).collect();
            let manifest = RunManifest {
                schema_version: io::SCHEMA_VERSION,
                tool: env!("CARGO_PKG_NAME").into(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                subcommand: "train".into(),
                dataset_checksum: dataset_checksum(&dataset)?,
                dataset,
                seed,
                config,
                artifacts: Artifacts { results: RESULTS.into(), timing: TIMING.into(), checkpoints },
            };
            (manifest, args.out.clone().expect("required by clap"))
        }
    };
    let summary = execute_train(&manifest, &out)?;
    print_json(&summary)
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let threads: usize = v.parse().map_err(|_| Error::Invalid(format!("{WORKERS_ENV}={v:?} is not a count")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| Error::Invalid(format!("worker pool: {e}")))
}

#[derive(Debug, Serialize)]
struct SplitReport<'a> {
    split: usize,
    selected_grid_index: usize,
    hyper: HyperParams,
    best_epoch: usize,
    #[serde(flatten)]
    metrics: SplitMetrics,
    grid: &'a [GridRecord],
}

/// Runs the training described by `manifest`, writing every artifact into `out`.
pub fn execute_train(manifest: &RunManifest, out: &Path) -> Result<serde_json::Value> {
    let started = Instant::now();
    let checksum = dataset_checksum(&manifest.dataset)?;
    if checksum != manifest.dataset_checksum {
        return Err(Error::Invalid(format!(
            "dataset checksum mismatch for {}: manifest has {}, directory has {checksum}",
            manifest.dataset.display(),
            manifest.dataset_checksum
        )));
    }
    let cfg = &manifest.config;
    if cfg.train.seed != manifest.seed {
        return Err(Error::Invalid("manifest seed disagrees with its training config".into()));
    }
    let (dataset, _) = read_dataset(&manifest.dataset)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join(MANIFEST), manifest)?;

    let data = Prepared::<f64>::new(&dataset, cfg.model, cfg.options, cfg.train.symmetrize)?;
    let splits = make_splits(dataset.num_nodes(), cfg.split_seed, cfg.splits)?;
    let runs = worker_pool()?.install(|| crate::train::train_splits(&data, &splits, &cfg.grid, &cfg.train))?;

    let dims = Dims {
        num_nodes: dataset.num_nodes(),
        feature_dim: dataset.feature_dim(),
        num_classes: dataset.num_classes(),
    };
    for (run, rel) in runs.iter().zip(&manifest.artifacts.checkpoints) {
        let model = match &run.predictor {
            Predictor::Trained(m) => Some(m),
            Predictor::Propagated(_) => None,
        };
        let meta = CheckpointMeta {
            schema_version: io::SCHEMA_VERSION,
            model: cfg.model,
            hyper: run.hyper,
            options: cfg.options,
            architecture: model.map(|m| m.architecture().clone()),
            dims,
            seed: manifest.seed,
            split_seed: cfg.split_seed,
            split_index: run.split,
            symmetrize: cfg.train.symmetrize,
            metric: cfg.train.metric,
            dataset_checksum: checksum.clone(),
            test_metric: run.metrics.test,
            params: Vec::new(),
        };
        save_checkpoint(&out.join(rel), &meta, model)?;
    }

    let column = |f: fn(&SplitMetrics) -> f64| mean_std(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let (test_mean, test_std) = column(|m| m.test);
    let (val_mean, val_std) = column(|m| m.val);
    let (train_mean, train_std) = column(|m| m.train);
    let split_reports: Vec<SplitReport> = runs
        .iter()
        .map(|r| SplitReport {
            split: r.split,
            selected_grid_index: r.selected,
            hyper: r.hyper,
            best_epoch: r.best_epoch,
            metrics: r.metrics,
            grid: &r.grid,
        })
        .collect();
    let results = json!({
        "schema_version": io::SCHEMA_VERSION,
        "model": cfg.model,
        "seed": manifest.seed,
        "split_seed": cfg.split_seed,
        "dataset_checksum": checksum,
        "config": cfg,
        "summary": {
            "test_mean": test_mean, "test_std": test_std,
            "val_mean": val_mean, "val_std": val_std,
            "train_mean": train_mean, "train_std": train_std,
        },
        "splits": split_reports,
    });
    write_json(&out.join(&manifest.artifacts.results), &results)?;
    write_json(
        &out.join(&manifest.artifacts.timing),
        &json!({ "schema_version": io::SCHEMA_VERSION, "wall_seconds": started.elapsed().as_secs_f64() }),
    )?;
    Ok(json!({
        "model": cfg.model,
        "test_mean": test_mean,
        "test_std": test_std,
        "results": out.join(&manifest.artifacts.results),
    }))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (meta, model) = load_checkpoint(&args.checkpoint)?;
    let (dataset, _) = read_dataset(&args.dataset)?;
    let dims = Dims {
        num_nodes: dataset.num_nodes(),
        feature_dim: dataset.feature_dim(),
        num_classes: dataset.num_classes(),
    };
    if dims != meta.dims {
        return Err(Error::Invalid(format!(
            "dimension mismatch: checkpoint expects {}, dataset has {dims}",
            meta.dims
        )));
    }
    let checksum = dataset_checksum(&args.dataset)?;
    if checksum != meta.dataset_checksum {
        return Err(Error::Invalid(format!(
            "dataset checksum mismatch: checkpoint was trained on {}, dataset has {checksum}",
            meta.dataset_checksum
        )));
    }
    let split_seed = args.split_seed.unwrap_or(meta.split_seed);
    let split = make_splits(dims.num_nodes, split_seed, meta.split_index + 1)?.remove(meta.split_index);
    let data = Prepared::<f64>::new(&dataset, meta.model, meta.options, meta.symmetrize)?;
    let predictor = match (model, meta.hyper) {
        (Some(model), _) => Predictor::Trained(model),
        (None, HyperParams::Labelprop { alpha }) => Predictor::Propagated(data.propagation(alpha, &split.train)?),
        (None, hyper) => return Err(Error::Invalid(format!("checkpoint for {hyper:?} has no parameters"))),
    };
    let test = predictor.evaluate(&data, &split.test, meta.metric)?;
    let split_matches = split_seed == meta.split_seed;
    print_json(&json!({
        "schema_version": io::SCHEMA_VERSION,
        "model": meta.model,
        "metric": meta.metric,
        "split_seed": split_seed,
        "split_index": meta.split_index,
        "split_matches_checkpoint": split_matches,
        "test_metric": test,
        "recorded_test_metric": meta.test_metric,
        "matches_recorded": split_matches && test.to_bits() == meta.test_metric.to_bits(),
    }))
}
