//! Subcommand implementations behind the `hrvguard` binary.
//!
//! Each `cmd_*` function does the work and returns a typed result; the
//! binary prints it and maps it to an exit code.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hrvguard_core::evaluation::{MetricSummary, T3Mode};
use hrvguard_core::knowledge::{index_corpus, parse_manifest, VectorStore};
use hrvguard_core::normalization::BaselineMode;
use hrvguard_core::reasoning::Knowledge;
use hrvguard_core::run::{
    self, ablate, analyze, evaluate_run, run_timestamp, synthetic, write_summary, AblationReport, BackendKind,
    EvaluateOptions, RunConfig, RunSummary,
};
use hrvguard_core::signal::trial::{load_trials, Trial};
use hrvguard_core::signal::{extract_features, FeaturePanel};

/// Overrides the completion backend URL from the config file.
pub const BACKEND_URL_ENV: &str = "HRVGUARD_BACKEND_URL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hrvguard", version, about = "Guardrailed stepwise HRV interpretation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk and embed a literature corpus into a vector store.
    IngestKb(IngestArgs),
    /// Extract HRV feature panels from a trial file.
    Features(FeaturesArgs),
    /// Run the stepwise pipeline over every trial.
    Analyze(AnalyzeArgs),
    /// Score a run directory or prediction CSV.
    Evaluate(EvaluateArgs),
    /// Run the five ablation configurations and compare them.
    Ablate(AnalyzeArgs),
    /// Write the bundled synthetic trials and literature corpus.
    GenSynthetic(GenArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSONL manifest; document paths resolve against its directory.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub trials: PathBuf,
    /// JSONL output, one panel per line.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mock,
    Fixture,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Retrospective,
    Causal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum T3Arg {
    Valence,
    Vagal,
}

impl From<T3Arg> for T3Mode {
    fn from(a: T3Arg) -> Self {
        match a {
            T3Arg::Valence => T3Mode::Valence,
            T3Arg::Vagal => T3Mode::Vagal,
        }
    }
}

/// Run settings shared by `analyze` and `ablate`. Flags override the
/// config file, which overrides the defaults.
#[derive(Debug, Args, Default)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub trials: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub population_stats: Option<PathBuf>,
    #[arg(long)]
    pub no_rag: bool,
    #[arg(long)]
    pub no_guardrails: bool,
    #[arg(long)]
    pub no_delta_z: bool,
    #[arg(long, value_enum)]
    pub baseline_mode: Option<BaselineArg>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long)]
    pub backend_url: Option<String>,
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct EvaluateArgs {
    /// Run directory or `subject,trial,gt,pred` CSV.
    pub source: PathBuf,
    /// Ground-truth CSV replacing the `gt` column.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Run directory or CSV to compute state agreement (C1) against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub t3: Option<T3Arg>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Where to write metrics.json and metrics.txt; defaults to the run
    /// directory, or the CSV's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

/// Reads a TOML run configuration. Relative paths inside it resolve
/// against the file's directory.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(base, &mut cfg.paths.store);
    resolve(base, &mut cfg.paths.population_stats);
    resolve(base, &mut cfg.paths.lexicon);
    resolve(base, &mut cfg.backend.fixtures);
    Ok(cfg)
}

/// Layers the environment and command-line flags over the file config.
pub fn effective_config(args: &AnalyzeArgs, env_url: Option<String>) -> Result<RunConfig> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(u) = env_url.filter(|u| !u.trim().is_empty()) {
        cfg.backend.url = Some(u);
    }
    if args.no_rag {
        cfg.ablation.rag = false;
    }
    if args.no_guardrails {
        cfg.ablation.guardrails = false;
    }
    if args.no_delta_z {
        cfg.ablation.delta_z = false;
    }
    if let Some(m) = args.baseline_mode {
        cfg.baseline_mode = match m {
            BaselineArg::Retrospective => BaselineMode::Retrospective,
            BaselineArg::Causal => BaselineMode::Causal,
        };
    }
    if let Some(b) = args.backend {
        cfg.backend.kind = match b {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Fixture => BackendKind::Fixture,
            BackendArg::Http => BackendKind::Http,
        };
    }
    if let Some(u) = &args.backend_url {
        cfg.backend.url = Some(u.clone());
    }
    if let Some(f) = &args.fixtures {
        cfg.backend.fixtures = Some(f.clone());
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = &args.store {
        cfg.paths.store = Some(s.clone());
    }
    if let Some(p) = &args.population_stats {
        cfg.paths.population_stats = Some(p.clone());
    }
    Ok(cfg)
}

pub struct IngestSummary {
    pub documents: usize,
    pub chunks: usize,
}

pub fn cmd_ingest_kb(args: &IngestArgs) -> Result<IngestSummary> {
    let cfg = load_config(args.config.as_deref())?;
    let text = fs::read_to_string(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    let entries = parse_manifest(&text).with_context(|| format!("in manifest {}", args.manifest.display()))?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let embedder = cfg.embedder.build()?;
    let store = index_corpus(&entries, base, embedder.as_ref(), &cfg.pipeline.retrieval)?;
    store.save(&args.out)?;
    Ok(IngestSummary {
        documents: entries.len(),
        chunks: store.len(),
    })
}

pub struct FeaturesSummary {
    pub panels: Vec<FeaturePanel>,
    pub failures: Vec<(String, String)>,
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<FeaturesSummary> {
    let cfg = load_config(args.config.as_deref())?;
    let trials = load_trials(&args.trials)?;
    let mut panels = Vec::new();
    let mut failures = Vec::new();
    let mut jsonl = Vec::new();
    for t in &trials {
        match extract_features(&t.rr_series(), t.resp.as_ref(), &cfg.features) {
            Ok(p) => {
                serde_json::to_writer(&mut jsonl, &p)?;
                jsonl.push(b'\n');
                panels.push(p);
            }
            Err(e) => failures.push((t.key(), e.to_string())),
        }
    }
    run::write_atomic(&args.out, &jsonl)?;
    Ok(FeaturesSummary { panels, failures })
}

struct Loaded {
    trials: Vec<Trial>,
    cfg: RunConfig,
    store: Option<VectorStore>,
    embedder: Box<dyn hrvguard_core::knowledge::Embedder>,
    client: Box<dyn hrvguard_core::reasoning::CompletionClient>,
}

fn load_run(args: &AnalyzeArgs, all_rows: bool) -> Result<Loaded> {
    let cfg = effective_config(args, std::env::var(BACKEND_URL_ENV).ok())?;
    let trials = load_trials(&args.trials)?;
    let needs_store = cfg.ablation.rag || all_rows;
    let store = match (&cfg.paths.store, needs_store) {
        (Some(p), true) => Some(VectorStore::load(p).with_context(|| format!("loading store {}", p.display()))?),
        (None, true) => bail!("retrieval is enabled but no --store was given (use --no-rag to run without it)"),
        (_, false) => None,
    };
    let embedder = cfg.embedder.build()?;
    let client = cfg.backend.build()?;
    Ok(Loaded {
        trials,
        cfg,
        store,
        embedder,
        client,
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<RunSummary> {
    let l = load_run(args, false)?;
    let k = l.store.as_ref().map(|s| Knowledge {
        store: s,
        embedder: l.embedder.as_ref(),
    });
    Ok(analyze(&l.trials, &l.cfg, k, l.client.as_ref(), &args.out, &run_timestamp())?)
}

pub fn cmd_ablate(args: &AnalyzeArgs) -> Result<AblationReport> {
    let l = load_run(args, true)?;
    let k = l.store.as_ref().map(|s| Knowledge {
        store: s,
        embedder: l.embedder.as_ref(),
    });
    Ok(ablate(&l.trials, &l.cfg, k, l.client.as_ref(), &args.out, &run_timestamp())?)
}

/// Scores the source and writes `metrics.json` / `metrics.txt`.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<MetricSummary> {
    let opts = EvaluateOptions {
        gt: args.gt.clone(),
        baseline: args.baseline.clone(),
        t3: args.t3.map(T3Mode::from).unwrap_or_default(),
        lexicon: args.lexicon.clone(),
    };
    let summary = evaluate_run(&args.source, &opts)?;
    let out = match &args.out {
        Some(o) => o.clone(),
        None if args.source.is_dir() => args.source.clone(),
        None => args.source.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    write_summary(&out, &summary)?;
    Ok(summary)
}

pub fn cmd_gen_synthetic(args: &GenArgs) -> Result<Vec<Trial>> {
    Ok(synthetic::write_synthetic(&args.out, args.seed)?)
}
