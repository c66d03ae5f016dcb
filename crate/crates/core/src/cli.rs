//! Command-line interface wiring the library stages end to end: turning
//! issue-timeline archives into supervised corpora, filtering and splitting
//! them, generating candidate fix descriptions, training and evaluating the
//! timing classifier, running the combined pipeline, and rendering reports.
//!
//! Exit codes: 0 on success, 1 for validation/usage problems (bad flags,
//! malformed or inconsistent data), 2 for I/O failures (unreadable or
//! unwritable files, network errors).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};
use crate::corpus::jsonl::{self, CorpusError};
use crate::corpus::{
    CorpusSplit, Example, GeneratorOutput, RawTimeline, SplitPart, ValidationError,
    WhenPrediction,
};
use crate::filters::{
    apply_filters, build_iwf_table, corpus_stats, drop_attribution, niwf, niwf_threshold,
    split_by_time, FilterError, SplitOutcome, StatsBundle,
};
use crate::generators::{
    build_tfidf_index, generate_corpus, GeneratorError, GeneratorSpec, SpanKind, SpanSource,
    StepChoice, TfidfField, TfidfIndex, TfidfScope,
};
use crate::ingest::github::{FetchError, GithubClient};
use crate::ingest::{
    extract_archive, extract_discussion, reject_histogram, IngestConfig, IngestError, RejectCode,
};
use crate::metrics::{
    bootstrap_compare, overlap_report, score_pair, when_accuracy, BootstrapOutcome, Metric,
    MetricError, MetricReport,
};
use crate::pipeline::{
    check_resources, evaluate_pipeline, run_pipeline, ClassifierChoice, PipelineConfig,
    PipelineError, StepCap,
};
use crate::report;
use crate::text::stopwords::STOPWORDS;
use crate::when::{infer_tp, load_model, save_model, train_when, Discussion, WhenError};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// Everything a subcommand can fail with, reduced to the two exit classes.
#[derive(Debug)]
enum CliError {
    /// Bad input: malformed files, inconsistent data, invalid flag values.
    Validation(String),
    /// The environment failed us: filesystem or network.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Io(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<WhenError> for CliError {
    fn from(e: WhenError) -> Self {
        match e {
            WhenError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::Malformed(_) => CliError::Validation(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::When(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Flag value types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    CopyTitle,
    Lead,
    Last,
    FullUtterance,
    Lexrank,
    Retrieval,
    OracleExtractive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    /// The first utterance.
    U1,
    /// The utterance at the cut step.
    Utg,
}

impl From<SourceArg> for SpanSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::U1 => SpanSource::First,
            SourceArg::Utg => SpanSource::Final,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Title,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Global,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ClassifierArg {
    Forest,
    First,
    Second,
    RandUniform,
    RandDist,
    GoldOracle,
}

impl From<ClassifierArg> for ClassifierChoice {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Forest => ClassifierChoice::Forest,
            ClassifierArg::First => ClassifierChoice::First,
            ClassifierArg::Second => ClassifierChoice::Second,
            ClassifierArg::RandUniform => ClassifierChoice::RandUniform,
            ClassifierArg::RandDist => ClassifierChoice::RandDist,
            ClassifierArg::GoldOracle => ClassifierChoice::GoldOracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CapArg {
    /// Scan up to the gold step (evaluation setting).
    Tg,
    /// Scan the whole discussion (deployment setting).
    T,
}

impl From<CapArg> for StepCap {
    fn from(c: CapArg) -> Self {
        match c {
            CapArg::Tg => StepCap::Tg,
            CapArg::T => StepCap::T,
        }
    }
}

/// Where to cut the context a generator reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AtChoice {
    /// The gold step.
    Tg,
    /// The step the timing classifier picks.
    Tp,
    /// A fixed step for every example.
    Fixed(usize),
}

fn parse_at(s: &str) -> Result<AtChoice, String> {
    match s.to_ascii_lowercase().as_str() {
        "tg" | "t_g" => Ok(AtChoice::Tg),
        "tp" | "t_p" => Ok(AtChoice::Tp),
        other => match other.parse::<usize>() {
            Ok(t) if t >= 1 => Ok(AtChoice::Fixed(t)),
            _ => Err(format!("expected tg, tp, or a step number >= 1 (got {s:?})")),
        },
    }
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated fractions (got {s:?})"));
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("{part:?} is not a number"))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers (got {s:?})"));
    }
    let a = parts[0].trim().parse::<f64>().map_err(|_| format!("{:?} is not a number", parts[0]))?;
    let b = parts[1].trim().parse::<f64>().map_err(|_| format!("{:?} is not a number", parts[1]))?;
    Ok((a, b))
}

/// A comma-separated metric list, order-preserving and de-duplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
struct MetricList(Vec<Metric>);

fn parse_metrics(s: &str) -> Result<MetricList, String> {
    let mut metrics = Vec::new();
    for part in s.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        let metric = Metric::parse(name).ok_or_else(|| format!("unknown metric {name:?}"))?;
        if !metrics.contains(&metric) {
            metrics.push(metric);
        }
    }
    if metrics.is_empty() {
        return Err("metric list is empty".to_string());
    }
    Ok(MetricList(metrics))
}

fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.trim().is_empty() && !path.trim().is_empty() => {
            Ok((name.trim().to_string(), PathBuf::from(path.trim())))
        }
        _ => Err(format!("expected NAME=FILE (got {s:?})")),
    }
}

// ---------------------------------------------------------------------------
// Command tree
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "fixdesc",
    version,
    about = "Build bug-report corpora, generate fix descriptions, and evaluate when \
             a discussion first supports them.",
    arg_required_else_help = true
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Print the built-in stopword list (one word per line) and exit.
    #[arg(long)]
    print_stopwords: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn an issue-timeline archive into a corpus of supervised examples.
    Ingest(IngestArgs),
    /// Download issue timelines from the GitHub API into an archive.
    Fetch(FetchArgs),
    /// Drop examples with generic or uninformative descriptions.
    Filter(FilterArgs),
    /// Split a corpus chronologically into train/valid/test parts.
    Split(SplitArgs),
    /// Print corpus statistics, optionally per split part and after filtering.
    Stats(StatsArgs),
    /// Run a description generator over a corpus.
    Gen(GenArgs),
    /// Train the enough-context timing classifier.
    TrainWhen(TrainWhenArgs),
    /// Score generated descriptions against reference descriptions.
    EvalGen(EvalGenArgs),
    /// Score timing predictions against gold steps.
    EvalWhen(EvalWhenArgs),
    /// Predict a cut step per example, generate there, and compare to the gold cut.
    Pipeline(PipelineArgs),
    /// Render the composite report: statistics, overlap, timing accuracy.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Issue-timeline archive (JSONL).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Corpus of extracted examples (JSONL).
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Also write rejected timelines with reasons (JSONL).
    #[arg(long, value_name = "FILE")]
    rejects: Option<PathBuf>,
    /// Also write unlabeled discussions from non-accepted timelines (JSONL),
    /// usable as negative-only training augmentation.
    #[arg(long, value_name = "FILE")]
    discussions: Option<PathBuf>,
    /// Minimum distinct participants per timeline.
    #[arg(long, value_name = "N")]
    min_actors: Option<usize>,
    /// Keep timelines that lack a bug label and bug-keyword commits.
    #[arg(long)]
    no_require_bug_label: bool,
    /// Keep timelines whose issue is still open.
    #[arg(long)]
    no_require_closed: bool,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Repository as owner/name.
    #[arg(long)]
    project: String,
    /// Issue number to fetch; repeat the flag for several.
    #[arg(long = "issue", value_name = "N", required = true)]
    issues: Vec<u64>,
    /// Timeline archive to write (JSONL).
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// API root (override for mirrors or tests).
    #[arg(long, value_name = "URL", default_value = GithubClient::DEFAULT_BASE_URL)]
    base_url: String,
    /// Retries per issue on transient failures.
    #[arg(long, value_name = "N", default_value_t = 3)]
    retries: u32,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Split file; word statistics and derived thresholds then come from the
    /// training part only.
    #[arg(long, value_name = "FILE")]
    split: Option<PathBuf>,
    /// Surviving examples (JSONL).
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Also write per-example filter decisions (JSONL).
    #[arg(long, value_name = "FILE")]
    reports: Option<PathBuf>,
    /// Absolute specificity cutoff (overrides the config value).
    #[arg(long, value_name = "X", conflicts_with = "niwf_percentile")]
    niwf_threshold: Option<f64>,
    /// Derive the specificity cutoff as this percentile of training scores.
    #[arg(long, value_name = "P")]
    niwf_percentile: Option<f64>,
    /// Title-overlap cutoff (overrides the config value).
    #[arg(long, value_name = "X")]
    overlap_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Split file to write (single-line JSON).
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Train,valid,test fractions summing to 1, e.g. 0.8,0.1,0.1
    /// (overrides the config value).
    #[arg(long, value_name = "A,B,C", value_parser = parse_fractions)]
    fractions: Option<(f64, f64, f64)>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    split: Option<PathBuf>,
    /// Filtered corpus to report alongside the full one.
    #[arg(long, value_name = "FILE")]
    filtered: Option<PathBuf>,
    /// Also write the numbers as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

/// Flags shared by every command that runs a generator.
#[derive(Debug, Args)]
struct GeneratorFlags {
    /// Description generator.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Which utterance span generators read.
    #[arg(long, value_enum, default_value = "utg")]
    source: SourceArg,
    /// Sentence count for lead/last/lexrank.
    #[arg(long, value_name = "N", default_value_t = 1)]
    k: usize,
    /// Ranking field for the retrieval generator.
    #[arg(long, value_enum, default_value = "title")]
    retrieval_field: FieldArg,
    /// Candidate pool for the retrieval generator.
    #[arg(long, value_enum, default_value = "global")]
    retrieval_scope: ScopeArg,
    /// Training corpus backing the retrieval index.
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,
}

impl GeneratorFlags {
    fn spec(&self, cfg: &RunConfig) -> GeneratorSpec {
        let source: SpanSource = self.source.into();
        match self.method {
            MethodArg::CopyTitle => GeneratorSpec::CopyTitle,
            MethodArg::Lead => GeneratorSpec::Span { source, span: SpanKind::Lead, k: self.k },
            MethodArg::Last => GeneratorSpec::Span { source, span: SpanKind::Last, k: self.k },
            MethodArg::FullUtterance => {
                GeneratorSpec::Span { source, span: SpanKind::Full, k: 1 }
            }
            MethodArg::Lexrank => GeneratorSpec::LexRank {
                threshold: cfg.lexrank_threshold,
                n_extract: self.k,
                damping: cfg.lexrank_damping,
            },
            MethodArg::Retrieval => GeneratorSpec::Retrieval {
                field: match self.retrieval_field {
                    FieldArg::Title => TfidfField::Title,
                    FieldArg::Desc => TfidfField::Description,
                },
                scope: match self.retrieval_scope {
                    ScopeArg::Global => TfidfScope::Global,
                    ScopeArg::Project => TfidfScope::Project,
                },
            },
            MethodArg::OracleExtractive => GeneratorSpec::OracleExtractive,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    #[command(flatten)]
    gen: GeneratorFlags,
    /// Context cut: the gold step (tg), the classifier's step (tp), or a
    /// fixed step number.
    #[arg(long, value_name = "CUT", value_parser = parse_at, default_value = "tg")]
    at: AtChoice,
    /// Trained timing model (required for --at tp).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Positive-probability threshold for --at tp (overrides the config value).
    #[arg(long, value_name = "X")]
    threshold: Option<f64>,
    /// Generated descriptions (JSONL).
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TrainWhenArgs {
    /// Training corpus (JSONL).
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    /// Unlabeled discussions mixed in as negative-only instances (JSONL).
    #[arg(long, value_name = "FILE")]
    aug: Option<PathBuf>,
    /// Trees in the forest (overrides the config value).
    #[arg(long, value_name = "N")]
    trees: Option<usize>,
    /// Training seed (overrides the config value).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Instance weight for augmentation rows (overrides the config value).
    #[arg(long, value_name = "X")]
    aug_weight: Option<f64>,
    /// Positive,negative class weights, e.g. 1.543,0.740
    /// (default: inverse class proportions of the training instances).
    #[arg(long, value_name = "P,N", value_parser = parse_pair)]
    class_weights: Option<(f64, f64)>,
    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalGenArgs {
    /// Generated descriptions to score (JSONL).
    #[arg(long, value_name = "FILE")]
    hyp: PathBuf,
    /// Corpus holding the reference descriptions (JSONL).
    #[arg(long = "ref", value_name = "FILE")]
    reference: PathBuf,
    /// Comma-separated metrics to report.
    #[arg(long, value_name = "LIST", value_parser = parse_metrics,
          default_value = "bleu4,meteor,rouge1,rouge2,rougel")]
    metrics: MetricList,
    /// Second output file to put beside the first.
    #[arg(long, value_name = "FILE")]
    compare: Option<PathBuf>,
    /// Paired-bootstrap significance of the comparison.
    #[arg(long, requires = "compare")]
    bootstrap: bool,
    /// Bootstrap resampling seed.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Also write the numbers as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["pred", "model"])))]
struct EvalWhenArgs {
    /// Pre-computed predictions to score (JSONL).
    #[arg(long, value_name = "FILE", requires = "gold")]
    pred: Option<PathBuf>,
    /// Gold corpus for --pred.
    #[arg(long, value_name = "FILE", requires = "pred")]
    gold: Option<PathBuf>,
    /// Trained model to run over --test.
    #[arg(long, value_name = "FILE", requires = "test")]
    model: Option<PathBuf>,
    /// Corpus to infer over with --model.
    #[arg(long, value_name = "FILE", requires = "model")]
    test: Option<PathBuf>,
    /// Write the inferred predictions (JSONL; --model mode).
    #[arg(long, value_name = "FILE", requires = "model")]
    out: Option<PathBuf>,
    /// Positive-probability threshold (--model mode; overrides the config value).
    #[arg(long, value_name = "X", requires = "model")]
    threshold: Option<f64>,
    /// How far the scan may look: the gold step or the whole discussion.
    #[arg(long, value_enum, default_value = "tg", requires = "model")]
    cap: CapArg,
    /// Column label in the printed table (default: the corpus file stem).
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
    /// Also write the numbers as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Timing classifier picking the cut step.
    #[arg(long, value_enum, default_value = "forest")]
    classifier: ClassifierArg,
    /// Trained model (required for the forest classifier).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[command(flatten)]
    gen: GeneratorFlags,
    /// Positive-probability threshold (overrides the config value).
    #[arg(long, value_name = "X")]
    threshold: Option<f64>,
    /// Seed for the random classifiers and the bootstrap (overrides the config value).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// How far the scan may look: the gold step or the whole discussion.
    #[arg(long, value_enum, default_value = "tg")]
    cap: CapArg,
    /// Write per-example predictions and generated descriptions (JSONL).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write the numbers as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    split: Option<PathBuf>,
    /// Filtered corpus to report alongside the full one.
    #[arg(long, value_name = "FILE")]
    filtered: Option<PathBuf>,
    /// Generated descriptions for the overlap section (repeat for several).
    #[arg(long = "outputs", value_name = "FILE")]
    outputs: Vec<PathBuf>,
    /// Timing predictions for the accuracy section as NAME=FILE (repeat for several).
    #[arg(long = "preds", value_name = "NAME=FILE", value_parser = parse_named_path)]
    preds: Vec<(String, PathBuf)>,
    /// Also write the numbers as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Parses `std::env::args_os()` and runs; the binary's whole `main`.
pub fn run() -> ExitCode {
    run_from(std::env::args_os())
}

/// Like [`run`], but over explicit arguments (first one is the program name).
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = clap_exit_code(err.kind());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    if cli.print_stopwords {
        let mut list = String::new();
        for word in STOPWORDS {
            list.push_str(word);
            list.push('\n');
        }
        print!("{list}");
        return ExitCode::SUCCESS;
    }

    let Some(command) = cli.command else {
        let mut cmd = Cli::command();
        eprintln!("{}", cmd.render_usage());
        eprintln!("\nRun with --help for details.");
        return ExitCode::from(1);
    };

    let config_path = cli.config.clone();
    let outcome = match cli.threads {
        Some(0) => Err(CliError::Validation("--threads must be at least 1".to_string())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(command, config_path.as_deref())),
            Err(e) => Err(CliError::Validation(format!("cannot build thread pool: {e}"))),
        },
        None => dispatch(command, config_path.as_deref()),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Usage and help-ish clap outcomes exit 0; every other parse problem
/// (unknown subcommand or flag, bad value, missing argument) exits 1.
fn clap_exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
        _ => 1,
    }
}

fn dispatch(command: Command, config_path: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    match command {
        Command::Ingest(args) => cmd_ingest(&args),
        Command::Fetch(args) => cmd_fetch(&args),
        Command::Filter(args) => cmd_filter(&args, &cfg),
        Command::Split(args) => cmd_split(&args, &cfg),
        Command::Stats(args) => cmd_stats(&args),
        Command::Gen(args) => cmd_gen(&args, &cfg),
        Command::TrainWhen(args) => cmd_train_when(&args, &cfg),
        Command::EvalGen(args) => cmd_eval_gen(&args, &cfg),
        Command::EvalWhen(args) => cmd_eval_when(&args, &cfg),
        Command::Pipeline(args) => cmd_pipeline(&args, &cfg),
        Command::Report(args) => cmd_report(&args),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn read_split_for(path: &Path, corpus: &[Example]) -> Result<CorpusSplit, CliError> {
    let split = jsonl::read_split(path)?;
    split.verify_covers(corpus)?;
    Ok(split)
}

/// Restricts a split to the ids present in `corpus` (a filtered subset of the
/// corpus the split was made for). Every example must belong to some part.
fn restrict_split(split: &CorpusSplit, corpus: &[Example]) -> Result<CorpusSplit, CliError> {
    for e in corpus {
        if split.part_of(e.id()).is_none() {
            return Err(CliError::Validation(format!(
                "example {} is not covered by the split",
                e.id()
            )));
        }
    }
    let ids: BTreeSet<&str> = corpus.iter().map(Example::id).collect();
    let keep = |part: SplitPart| -> Vec<String> {
        split.ids(part).iter().filter(|id| ids.contains(id.as_str())).cloned().collect()
    };
    CorpusSplit::new(keep(SplitPart::Train), keep(SplitPart::Valid), keep(SplitPart::Test))
        .map_err(Into::into)
}

fn stats_json(bundle: &StatsBundle) -> Value {
    json!({
        "total": bundle.total,
        "train": bundle.train,
        "valid": bundle.valid,
        "test": bundle.test,
    })
}

/// Loads the candidate pool and builds the ranking index when the generator
/// needs one; other generators ignore `--train`.
fn retrieval_index(
    spec: &GeneratorSpec,
    train: Option<&Path>,
) -> Result<Option<TfidfIndex>, CliError> {
    let GeneratorSpec::Retrieval { field, scope } = spec else {
        return Ok(None);
    };
    let path = train.ok_or_else(|| {
        CliError::Validation("--method retrieval needs --train as the candidate pool".to_string())
    })?;
    let pool = jsonl::read_examples(path)?;
    Ok(Some(build_tfidf_index(&pool, *field, *scope)?))
}

/// Reads one generated-output file and scores it against the references.
/// Returns the display label (the single generator name, or the file stem
/// when the file mixes generators) and the per-example report.
fn score_outputs(
    path: &Path,
    refs: &BTreeMap<&str, &Example>,
) -> Result<(String, MetricReport), CliError> {
    let outputs: Vec<GeneratorOutput> = jsonl::read_jsonl(path)?;
    let mut scores = BTreeMap::new();
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for output in &outputs {
        let example = refs.get(output.id()).ok_or_else(|| {
            CliError::Validation(format!(
                "{}: output id {:?} is not in the reference corpus",
                path.display(),
                output.id()
            ))
        })?;
        let prior = scores.insert(
            output.id().to_string(),
            score_pair(output.tokens(), example.description_tokens())?,
        );
        if prior.is_some() {
            return Err(CliError::Validation(format!(
                "{}: duplicate output id {:?}",
                path.display(),
                output.id()
            )));
        }
        names.insert(output.generator());
    }
    let label = match names.len() {
        1 => names.iter().next().expect("non-empty").to_string(),
        _ => file_stem(path),
    };
    Ok((label, MetricReport::from_scores(scores)?))
}

fn dedupe_labels(a: String, b: String, path_a: &Path, path_b: &Path) -> (String, String) {
    if a != b {
        return (a, b);
    }
    let (sa, sb) = (file_stem(path_a), file_stem(path_b));
    if sa != sb {
        (sa, sb)
    } else {
        (format!("{a} (A)"), format!("{b} (B)"))
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    let timelines: Vec<RawTimeline> = jsonl::read_jsonl(&args.input)?;
    let mut ingest_cfg = IngestConfig::default();
    if let Some(m) = args.min_actors {
        ingest_cfg.min_actors = m;
    }
    if args.no_require_bug_label {
        ingest_cfg.require_bug_label = false;
    }
    if args.no_require_closed {
        ingest_cfg.require_closed = false;
    }

    let outcome = extract_archive(&timelines, &ingest_cfg)?;
    jsonl::write_jsonl(&outcome.examples, &args.output)?;
    println!(
        "accepted {} of {} timelines -> {}",
        outcome.examples.len(),
        timelines.len(),
        args.output.display()
    );
    for (code, n) in reject_histogram(&outcome.rejects) {
        println!("  {code}: {n}");
    }

    if let Some(path) = &args.rejects {
        #[derive(Serialize)]
        struct RejectRecord<'a> {
            id: &'a str,
            code: RejectCode,
            detail: &'a str,
        }
        let records: Vec<RejectRecord> = outcome
            .rejects
            .iter()
            .map(|(id, reason)| RejectRecord { id, code: reason.code, detail: &reason.detail })
            .collect();
        jsonl::write_jsonl(&records, path)?;
    }

    if let Some(path) = &args.discussions {
        let accepted: BTreeSet<&str> = outcome.examples.iter().map(Example::id).collect();
        let mut discussions: Vec<Discussion> = timelines
            .iter()
            .filter(|tl| !accepted.contains(tl.example_id().as_str()))
            .filter_map(extract_discussion)
            .collect();
        discussions.sort_by(|a, b| a.id().cmp(b.id()));
        jsonl::write_jsonl(&discussions, path)?;
        println!("wrote {} augmentation discussions -> {}", discussions.len(), path.display());
    }
    Ok(())
}

fn cmd_fetch(args: &FetchArgs) -> Result<(), CliError> {
    let token = std::env::var("GITHUB_TOKEN").ok().filter(|t| !t.is_empty());
    let client = GithubClient::new(args.base_url.clone(), token);
    let mut timelines = Vec::with_capacity(args.issues.len());
    for &issue in &args.issues {
        let timeline = client.fetch_issue_with_backoff(
            &args.project,
            issue,
            args.retries,
            Duration::from_millis(500),
        )?;
        timelines.push(timeline);
    }
    jsonl::write_jsonl(&timelines, &args.output)?;
    println!("fetched {} timelines -> {}", timelines.len(), args.output.display());
    Ok(())
}

fn cmd_filter(args: &FilterArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.corpus)?;
    let basis: Vec<&Example> = match &args.split {
        Some(path) => {
            let split = read_split_for(path, &corpus)?;
            corpus.iter().filter(|e| split.part_of(e.id()) == Some(SplitPart::Train)).collect()
        }
        None => corpus.iter().collect(),
    };
    let descriptions: Vec<Vec<String>> =
        basis.iter().map(|e| e.description_tokens().to_vec()).collect();
    let table = build_iwf_table(&descriptions)?;

    let niwf_cutoff = if let Some(t) = args.niwf_threshold {
        t
    } else if let Some(p) = args.niwf_percentile {
        let scores: Vec<f64> = basis
            .iter()
            .map(|e| niwf(e.description_tokens(), &table))
            .collect::<Result<_, _>>()?;
        niwf_threshold(&scores, p)?
    } else {
        cfg.niwf_threshold
    };
    let overlap_cutoff = args.overlap_threshold.unwrap_or(cfg.overlap_threshold);

    let (reports, kept) = apply_filters(&corpus, &table, niwf_cutoff, overlap_cutoff)?;
    let counts = drop_attribution(&reports);
    jsonl::write_jsonl(&kept, &args.output)?;
    if let Some(path) = &args.reports {
        jsonl::write_jsonl(&reports, path)?;
    }
    println!("niwf threshold {niwf_cutoff:.6}, overlap threshold {overlap_cutoff:.3}");
    println!(
        "kept {} of {} (generic {}, uninformative {}, insufficient {}) -> {}",
        counts.kept,
        corpus.len(),
        counts.generic,
        counts.uninformative,
        counts.insufficient,
        args.output.display()
    );
    Ok(())
}

fn cmd_split(args: &SplitArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.corpus)?;
    let fractions = args.fractions.unwrap_or(cfg.split_fractions);
    let SplitOutcome { split, strict } = split_by_time(&corpus, fractions)?;
    if !strict {
        eprintln!(
            "warning: tied resolution times moved a boundary; parts deviate from the requested sizes"
        );
    }
    println!(
        "train {}  valid {}  test {}  -> {}",
        split.train().len(),
        split.valid().len(),
        split.test().len(),
        args.output.display()
    );
    jsonl::write_jsonl(&[split], &args.output)?;
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.corpus)?;
    let split = match &args.split {
        Some(path) => Some(read_split_for(path, &corpus)?),
        None => None,
    };
    let full = corpus_stats(&corpus, split.as_ref())?;

    let filtered = match &args.filtered {
        Some(path) => {
            let filtered_corpus = jsonl::read_examples(path)?;
            let sub = match &split {
                Some(s) => Some(restrict_split(s, &filtered_corpus)?),
                None => None,
            };
            Some(corpus_stats(&filtered_corpus, sub.as_ref())?)
        }
        None => None,
    };

    print!("{}", report::stats_table(&full, filtered.as_ref()));
    if let Some(path) = &args.json {
        let value = json!({
            "full": stats_json(&full),
            "filtered": filtered.as_ref().map(stats_json),
        });
        write_json(path, &value)?;
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.corpus)?;
    let spec = args.gen.spec(cfg);
    let index = retrieval_index(&spec, args.gen.train.as_deref())?;

    let outputs = match args.at {
        AtChoice::Tg => generate_corpus(&corpus, &spec, StepChoice::Gold, index.as_ref())?,
        AtChoice::Fixed(t) => {
            generate_corpus(&corpus, &spec, StepChoice::Fixed(t), index.as_ref())?
        }
        AtChoice::Tp => {
            let model_path = args.model.as_deref().ok_or_else(|| {
                CliError::Validation("--at tp needs --model".to_string())
            })?;
            let model = load_model(model_path)?;
            let pipeline_cfg = PipelineConfig {
                classifier: ClassifierChoice::Forest,
                generator: spec.clone(),
                threshold: args.threshold.unwrap_or(cfg.rf.threshold),
                seed: cfg.rf.seed,
                cap: StepCap::Tg,
            };
            check_resources(&pipeline_cfg, Some(&model), index.as_ref())?;
            use rayon::prelude::*;
            let mut outputs: Vec<GeneratorOutput> = corpus
                .par_iter()
                .map(|e| {
                    run_pipeline(e, &pipeline_cfg, Some(&model), index.as_ref())
                        .map(|r| r.output)
                })
                .collect::<Result<_, _>>()?;
            outputs.sort_by(|a, b| a.id().cmp(b.id()));
            outputs
        }
    };

    jsonl::write_jsonl(&outputs, &args.output)?;
    println!("wrote {} outputs ({}) -> {}", outputs.len(), spec.name(), args.output.display());
    Ok(())
}

fn cmd_train_when(args: &TrainWhenArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.train)?;
    let augmentation: Vec<Discussion> = match &args.aug {
        Some(path) => jsonl::read_jsonl(path)?,
        None => Vec::new(),
    };
    let mut forest_cfg = cfg.forest_config();
    if let Some(trees) = args.trees {
        forest_cfg.n_trees = trees;
    }
    if let Some(seed) = args.seed {
        forest_cfg.seed = seed;
    }
    let aug_weight = args.aug_weight.unwrap_or(cfg.aug_weight);
    let class_weights = args.class_weights.or(cfg.class_weights);

    let model = train_when(&corpus, &augmentation, aug_weight, class_weights, &forest_cfg)?;
    save_model(&model, &args.out)?;
    println!(
        "trained {} trees on {} examples (+{} discussions), vocabulary {} -> {}",
        forest_cfg.n_trees,
        corpus.len(),
        augmentation.len(),
        model.vectorizer.vocab_size(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval_gen(args: &EvalGenArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let references = jsonl::read_examples(&args.reference)?;
    let ref_map: BTreeMap<&str, &Example> = references.iter().map(|e| (e.id(), e)).collect();
    let metrics = &args.metrics.0;

    let (mut label_a, report_a) = score_outputs(&args.hyp, &ref_map)?;
    let mut significance: Vec<(Metric, BootstrapOutcome)> = Vec::new();

    let compared: Option<(String, MetricReport)> = match &args.compare {
        Some(path) => {
            let (raw_label_b, report_b) = score_outputs(path, &ref_map)?;
            let ids_a: Vec<&String> = report_a.per_example().keys().collect();
            let ids_b: Vec<&String> = report_b.per_example().keys().collect();
            if ids_a != ids_b {
                return Err(CliError::Validation(
                    "--compare needs both files to cover the same example ids".to_string(),
                ));
            }
            let (deduped_a, label_b) = dedupe_labels(label_a, raw_label_b, &args.hyp, path);
            label_a = deduped_a;
            if args.bootstrap {
                let bootstrap_cfg = cfg.bootstrap_config(args.seed);
                for &metric in metrics {
                    let outcome = bootstrap_compare(
                        &report_a.metric_vector(metric),
                        &report_b.metric_vector(metric),
                        &bootstrap_cfg,
                    )?;
                    significance.push((metric, outcome));
                }
            }
            Some((label_b, report_b))
        }
        None => None,
    };
    let label_b = compared.as_ref().map(|(l, _)| l.clone()).unwrap_or_default();

    let mut rows: Vec<(&str, &MetricReport)> = vec![(label_a.as_str(), &report_a)];
    if let Some((_, report_b)) = &compared {
        rows.push((label_b.as_str(), report_b));
    }
    print!("{}", report::generation_table(&rows, metrics));
    if !significance.is_empty() {
        println!();
        print!("{}", report::significance_table(&significance, &label_a, &label_b));
    }

    if let Some(path) = &args.json {
        let sig = if significance.is_empty() {
            None
        } else {
            Some((label_a.as_str(), label_b.as_str(), significance.as_slice()))
        };
        write_json(path, &report::gen_json(&rows, sig))?;
    }
    Ok(())
}

fn cmd_eval_when(args: &EvalWhenArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let (corpus, corpus_path, predictions) = if let Some(pred_path) = &args.pred {
        let gold_path = args.gold.as_ref().expect("clap enforces --gold with --pred");
        let corpus = jsonl::read_examples(gold_path)?;
        let predictions: Vec<WhenPrediction> = jsonl::read_jsonl(pred_path)?;
        (corpus, gold_path.clone(), predictions)
    } else {
        let model_path = args.model.as_ref().expect("clap enforces the mode group");
        let test_path = args.test.as_ref().expect("clap enforces --test with --model");
        let corpus = jsonl::read_examples(test_path)?;
        let model = load_model(model_path)?;
        let threshold = args.threshold.unwrap_or(cfg.rf.threshold);
        use rayon::prelude::*;
        let predictions: Vec<WhenPrediction> = corpus
            .par_iter()
            .map(|e| {
                let max_t = match args.cap {
                    CapArg::Tg => e.t_g(),
                    CapArg::T => e.n_steps(),
                };
                infer_tp(&model, e, threshold, max_t)
            })
            .collect::<Result<_, _>>()?;
        if let Some(path) = &args.out {
            jsonl::write_jsonl(&predictions, path)?;
        }
        (corpus, test_path.clone(), predictions)
    };

    let golds: BTreeMap<String, usize> =
        corpus.iter().map(|e| (e.id().to_string(), e.t_g())).collect();
    let table = when_accuracy(&predictions, &golds)?;
    let label = args.name.clone().unwrap_or_else(|| file_stem(&corpus_path));
    print!("{}", report::when_table(&[(label.as_str(), &table)]));
    if let Some(path) = &args.json {
        write_json(path, &report::when_json(&table))?;
    }
    Ok(())
}

fn cmd_pipeline(args: &PipelineArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.corpus)?;
    let spec = args.gen.spec(cfg);
    let index = retrieval_index(&spec, args.gen.train.as_deref())?;
    let model = match &args.model {
        Some(path) => Some(load_model(path)?),
        None => None,
    };
    let pipeline_cfg = PipelineConfig {
        classifier: args.classifier.into(),
        generator: spec,
        threshold: args.threshold.unwrap_or(cfg.rf.threshold),
        seed: args.seed.unwrap_or(cfg.rf.seed),
        cap: args.cap.into(),
    };
    let bootstrap_cfg = cfg.bootstrap_config(pipeline_cfg.seed);
    let evaluation =
        evaluate_pipeline(&corpus, &pipeline_cfg, model.as_ref(), index.as_ref(), &bootstrap_cfg)?;

    if let Some(path) = &args.out {
        #[derive(Serialize)]
        struct Record<'a> {
            id: &'a str,
            t_p: Option<usize>,
            probs: &'a [f64],
            generator: &'a str,
            tokens: &'a [String],
            at_step: usize,
        }
        let mut records: Vec<Record> = evaluation
            .outputs
            .iter()
            .map(|o| Record {
                id: o.prediction.id(),
                t_p: o.prediction.t_p(),
                probs: o.prediction.probs(),
                generator: o.output.generator(),
                tokens: o.output.tokens(),
                at_step: o.output.at_step(),
            })
            .collect();
        records.sort_by(|a, b| a.id.cmp(b.id));
        jsonl::write_jsonl(&records, path)?;
    }

    print!(
        "{}",
        report::pipeline_tables(&evaluation.at_tp, &evaluation.at_tg, &evaluation.significance)
    );
    if let Some(path) = &args.json {
        write_json(
            path,
            &report::pipeline_json(&evaluation.at_tp, &evaluation.at_tg, &evaluation.significance),
        )?;
    }
    Ok(())
}

/// Mean n-gram overlap of generated tokens with the title and with the
/// readable utterances, over the examples where the output is long enough.
fn overlap_row(
    name: &str,
    items: &[(&GeneratorOutput, &Example)],
) -> Result<report::OverlapRow, CliError> {
    let mut sums = [[0.0f64; 2]; 2];
    let mut counts = [0usize; 2];
    for (output, example) in items {
        let cut = output.at_step().min(example.n_steps());
        let context: Vec<&[String]> =
            example.utterances()[..cut].iter().map(|u| u.tokens()).collect();
        for (slot, n) in [1usize, 2].iter().enumerate() {
            if let Some((in_title, in_utterances)) =
                overlap_report(output.tokens(), example.title_tokens(), &context, *n)
            {
                sums[slot][0] += in_title;
                sums[slot][1] += in_utterances;
                counts[slot] += 1;
            }
        }
    }
    let mean = |slot: usize, which: usize| {
        if counts[slot] == 0 {
            0.0
        } else {
            sums[slot][which] / counts[slot] as f64
        }
    };
    Ok(report::OverlapRow {
        name: name.to_string(),
        title: (mean(0, 0), mean(1, 0)),
        utterances_only: (mean(0, 1), mean(1, 1)),
    })
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let corpus = jsonl::read_examples(&args.corpus)?;
    let corpus_map: BTreeMap<&str, &Example> = corpus.iter().map(|e| (e.id(), e)).collect();
    let split = match &args.split {
        Some(path) => Some(read_split_for(path, &corpus)?),
        None => None,
    };

    let full = corpus_stats(&corpus, split.as_ref())?;
    let filtered = match &args.filtered {
        Some(path) => {
            let filtered_corpus = jsonl::read_examples(path)?;
            let sub = match &split {
                Some(s) => Some(restrict_split(s, &filtered_corpus)?),
                None => None,
            };
            Some(corpus_stats(&filtered_corpus, sub.as_ref())?)
        }
        None => None,
    };

    let mut text = String::new();
    let mut json_value = json!({
        "stats": {
            "full": stats_json(&full),
            "filtered": filtered.as_ref().map(stats_json),
        },
    });
    text.push_str("== Corpus ==\n\n");
    text.push_str(&report::stats_table(&full, filtered.as_ref()));

    if !args.outputs.is_empty() {
        let mut rows: Vec<report::OverlapRow> = Vec::new();
        for path in &args.outputs {
            let outputs: Vec<GeneratorOutput> = jsonl::read_jsonl(path)?;
            let mut items: Vec<(&GeneratorOutput, &Example)> = Vec::new();
            let mut names: BTreeSet<&str> = BTreeSet::new();
            for output in &outputs {
                let example = corpus_map.get(output.id()).ok_or_else(|| {
                    CliError::Validation(format!(
                        "{}: output id {:?} is not in the corpus",
                        path.display(),
                        output.id()
                    ))
                })?;
                items.push((output, example));
                names.insert(output.generator());
            }
            let label = match names.len() {
                1 => names.iter().next().expect("non-empty").to_string(),
                _ => file_stem(path),
            };
            rows.push(overlap_row(&label, &items)?);
        }
        let reference_items: Vec<(GeneratorOutput, &Example)> = corpus
            .iter()
            .map(|e| {
                let output = GeneratorOutput::new(
                    e.id(),
                    "reference",
                    e.description_tokens().to_vec(),
                    e.t_g(),
                )
                .expect("gold step is a valid cut");
                (output, e)
            })
            .collect();
        let borrowed: Vec<(&GeneratorOutput, &Example)> =
            reference_items.iter().map(|(o, e)| (o, *e)).collect();
        rows.push(overlap_row("Reference", &borrowed)?);

        text.push_str("\n== Overlap with the discussion ==\n\n");
        text.push_str(&report::overlap_table(&rows));
        json_value["overlap"] = Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "title": [r.title.0, r.title.1],
                        "utterances_only": [r.utterances_only.0, r.utterances_only.1],
                    })
                })
                .collect(),
        );
    }

    if !args.preds.is_empty() {
        let golds: BTreeMap<String, usize> =
            corpus.iter().map(|e| (e.id().to_string(), e.t_g())).collect();
        let mut tables = Vec::new();
        for (name, path) in &args.preds {
            let predictions: Vec<WhenPrediction> = jsonl::read_jsonl(path)?;
            tables.push((name.clone(), when_accuracy(&predictions, &golds)?));
        }
        let columns: Vec<(&str, &crate::metrics::WhenAccuracyTable)> =
            tables.iter().map(|(name, table)| (name.as_str(), table)).collect();
        text.push_str("\n== Timing accuracy ==\n\n");
        text.push_str(&report::when_table(&columns));
        let mut when_values = serde_json::Map::new();
        for (name, table) in &tables {
            when_values.insert(name.clone(), report::when_json(table));
        }
        json_value["when"] = Value::Object(when_values);
    }

    print!("{text}");
    if let Some(path) = &args.json {
        write_json(path, &json_value)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
