use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "qbe-lexica",
    version,
    about = "Query-by-example lexical reranking, fusion and evaluation",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file whose keys mirror the command-line flags. Flags given on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "QBE_LEXICA_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and persist an inverted index.
    Index(IndexArgs),
    /// Score every candidate pool with one scorer and write a TREC run.
    Rerank(RerankArgs),
    /// Interpolate a BM25 run with a contextualized run.
    Fuse(FuseArgs),
    /// Evaluate every grid alpha and the per-query oracle.
    Sweep(SweepArgs),
    /// Compute per-query and aggregate metrics of a run.
    Evaluate(EvaluateArgs),
    /// Compute document expansion additions from a TILDE store.
    Expand(ExpandArgs),
    /// Sample training triplets from the training split of the judgments.
    Triplets(TripletsArgs),
    /// Paired t-tests with Bonferroni correction between runs.
    Significance(SignificanceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzerArg {
    Sa,
    Stm1,
    Stm2,
    Subword,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Bm25,
    Lmjm,
    Tilde,
    Tildev2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Map,
    Ndcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TitleOrderArg {
    TitleFirst,
    AbstractFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZScopeArg {
    Query,
    Global,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    #[arg(long, value_enum, default_value = "sa")]
    pub analyzer: AnalyzerArg,

    /// WordPiece vocabulary, one token per line.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "title-first")]
    pub title_order: TitleOrderArg,

    /// Keep case during subword analysis.
    #[arg(long)]
    pub cased: bool,

    /// Keep accents during subword analysis.
    #[arg(long)]
    pub keep_accents: bool,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[command(flatten)]
    pub analysis: AnalysisArgs,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub pools: PathBuf,

    #[arg(long, value_enum)]
    pub scorer: ScorerArg,

    #[command(flatten)]
    pub analysis: AnalysisArgs,

    /// Prebuilt index for bm25/lmjm; built from the corpus when absent.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,

    #[arg(long)]
    pub k1: Option<f64>,

    #[arg(long)]
    pub b: Option<f64>,

    /// Weight BM25 terms by their number of occurrences in the query.
    #[arg(long)]
    pub query_multiplicity: bool,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[arg(long, value_name = "FILE")]
    pub tilde_store: Option<PathBuf>,

    /// Impact files; weights for the same document and token merge by maximum.
    #[arg(long, value_name = "FILE")]
    pub impact_store: Vec<PathBuf>,

    #[arg(long, allow_negative_numbers = true)]
    pub floor_logprob: Option<f64>,

    /// Run tag; defaults to the scorer name.
    #[arg(long)]
    pub tag: Option<String>,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FusionInputs {
    #[arg(long, value_name = "FILE")]
    pub bm25_run: PathBuf,

    /// Run of the contextualized scorer.
    #[arg(long, value_name = "FILE")]
    pub ctx_run: PathBuf,

    #[arg(long, value_enum, default_value = "query")]
    pub z_scope: ZScopeArg,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub inputs: FusionInputs,

    /// Fixed weight of BM25. Without it alpha is tuned on a validation split
    /// of the judged queries.
    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long, value_name = "FILE")]
    pub qrels: Option<PathBuf>,

    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,

    #[arg(long, value_enum, default_value = "map")]
    pub metric: MetricArg,

    /// Share of queries held out from tuning.
    #[arg(long, default_value_t = 0.85)]
    pub train_fraction: f64,

    #[arg(long, default_value = "fused")]
    pub tag: String,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: FusionInputs,

    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,

    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,

    #[arg(long, value_enum, default_value = "map")]
    pub metric: MetricArg,

    /// Per-alpha fusion report.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,

    /// Per-query oracle report.
    #[arg(long, value_name = "FILE")]
    pub oracle_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,

    #[arg(long, value_enum, default_value = "map")]
    pub metric: MetricArg,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub tilde_store: PathBuf,

    #[arg(long, allow_negative_numbers = true)]
    pub floor_logprob: Option<f64>,

    #[arg(long)]
    pub expansion_m: usize,

    #[arg(long)]
    pub include_continuation_pieces: bool,

    #[arg(long, value_enum, default_value = "title-first")]
    pub title_order: TitleOrderArg,

    #[arg(long)]
    pub cased: bool,

    #[arg(long)]
    pub keep_accents: bool,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TripletsArgs {
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,

    /// Restrict judgments to pool members.
    #[arg(long, value_name = "FILE", requires = "corpus")]
    pub pools: Option<PathBuf>,

    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,

    #[arg(long, default_value_t = 2)]
    pub negatives_per_positive: usize,

    #[arg(long, default_value_t = 0.85)]
    pub train_fraction: f64,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    /// Runs to compare, as `name=path` or a path whose stem names the system.
    #[arg(long = "run", value_name = "RUN", required = true, num_args = 1)]
    pub runs: Vec<String>,

    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,

    #[arg(long, value_enum, default_value = "map")]
    pub metric: MetricArg,

    /// Bonferroni factor; defaults to the number of run pairs.
    #[arg(long)]
    pub num_comparisons: Option<usize>,

    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}
