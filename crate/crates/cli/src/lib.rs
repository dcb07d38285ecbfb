//! Library side of the `quadkit` binary. [`run`] executes one parsed
//! command line; the binary only maps errors to exit codes.

mod commands;
mod io;
pub mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use quadkit::corpus::{ElementOrder, ImportOptions};

pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "quadkit",
    version,
    about = "Aspect sentiment quad data toolkit"
)]
pub struct Cli {
    /// Category labels, one per line [default: the 13 restaurant labels]
    #[arg(long, global = true, value_name = "FILE")]
    pub taxonomy: Option<PathBuf>,
    /// Worker threads for per-sentence work; 0 uses all cores
    #[arg(long, global = true, env = "QUADKIT_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import a legacy gold file, write canonical records and report statistics
    Import(ImportArgs),
    /// Build a corrector training corpus of single-error drafts
    Synthesize(SynthesizeArgs),
    /// Exact-match precision, recall and F1
    Evaluate(EvaluateArgs),
    /// Classify prediction errors against gold
    Analyze(AnalyzeArgs),
    /// Compare two prediction stages against shared gold
    Compare(CompareArgs),
    /// Run the noisy generator and oracle corrector over a corpus
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FormatArgs {
    /// Tuple field order in legacy files, as letter codes (acso) or names
    #[arg(long, default_value = "acso")]
    pub order: ElementOrder,
    /// Lowercase sentences and terms when importing legacy lines
    #[arg(long)]
    pub lowercase: bool,
}

impl FormatArgs {
    fn options(&self) -> ImportOptions {
        ImportOptions {
            order: self.order,
            lowercase: self.lowercase,
        }
    }
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Legacy file: `sentence####[[...], ...]` per line
    pub input: PathBuf,
    /// Canonical JSON-lines output
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Split name shown in the statistics [default: input file stem]
    #[arg(long)]
    pub name: Option<String>,
    /// Print statistics as JSON
    #[arg(long)]
    pub json: bool,
    /// Manifest path [default: next to --out]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArgs,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Gold corpus, legacy or canonical records
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight of identity pairs
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub w_cor: f64,
    /// Weight of error drafts
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub w_err: f64,
    /// Leave out identity pairs
    #[arg(long)]
    pub no_identity: bool,
    /// Longest replacement span in words
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_span_len: u64,
    #[command(flatten)]
    pub format: FormatArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Count duplicate quads instead of using set semantics
    #[arg(long)]
    pub multiset: bool,
    /// Print the report as JSON
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Print counts and records as JSON
    #[arg(long)]
    pub json: bool,
    /// Write `class,count` rows for plotting
    #[arg(long)]
    pub chart: Option<PathBuf>,
    /// Write one JSON record per aligned or unmatched quad
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub stage1: PathBuf,
    #[arg(long)]
    pub stage2: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Gold corpus, legacy or canonical records
    pub input: PathBuf,
    /// TOML file with `fix_prob` and a `[channel]` table; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Error rate for all four elements
    #[arg(long, value_parser = probability)]
    pub rate: Option<f64>,
    #[arg(long, value_parser = probability)]
    pub aspect_rate: Option<f64>,
    #[arg(long, value_parser = probability)]
    pub category_rate: Option<f64>,
    #[arg(long, value_parser = probability)]
    pub opinion_rate: Option<f64>,
    #[arg(long, value_parser = probability)]
    pub sentiment_rate: Option<f64>,
    /// Probability of dropping each gold quad
    #[arg(long, value_parser = probability)]
    pub drop: Option<f64>,
    /// Probability of adding a spurious quad per gold quad
    #[arg(long, value_parser = probability)]
    pub insert: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability that the oracle corrector repairs each error
    #[arg(long, value_parser = probability)]
    pub fix_prob: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_span_len: Option<u64>,
    /// Write stage1.txt, stage2.txt, report.json and manifest.json here
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub format: FormatArgs,
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

/// A problem with how the tool was invoked rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Runs one command. Data goes to `out`; warnings go to stderr.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let taxonomy = io::load_taxonomy(cli.taxonomy.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()?;
    let ctx = commands::Context {
        taxonomy,
        taxonomy_path: cli.taxonomy.clone(),
        pool,
    };
    match &cli.command {
        Command::Import(a) => commands::import(&ctx, a, out),
        Command::Synthesize(a) => commands::synthesize(&ctx, a, out),
        Command::Evaluate(a) => commands::evaluate(&ctx, a, out),
        Command::Analyze(a) => commands::analyze(&ctx, a, out),
        Command::Compare(a) => commands::compare(&ctx, a, out),
        Command::Simulate(a) => commands::simulate(&ctx, a, out),
    }
}
