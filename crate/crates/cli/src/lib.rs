//! `divkit` command-line interface.
//!
//! Exit codes: 0 success, 1 partial result (some metrics skipped), 2 fatal
//! error, 64 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divkit_core::pairwise::{RemoteEmbedder, StubEmbedder};
use divkit_core::patterns::{
    check_ui_n, match_patterns_with, DEFAULT_EXACT_MIN_DOCS, DEFAULT_PATTERN_MIN_DOCS,
    DEFAULT_TOP_N,
};
use divkit_core::tagger::ExternalTransport;
use divkit_core::{
    compute_all_metrics, correlate, exact_matches, extract_patterns, truncate_to_shortest,
    BoundaryMode, CompressionConfig, Compressor, Corpus, CorrelationMethod, Embedder, Format,
    Metric, MetricReport, MetricsConfig, Normalization, PatternIndex, SystemGroup, Tagger,
    TaggerSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_FATAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "divkit",
    version,
    about = "Corpus-level text diversity analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every diversity metric for one corpus
    Metrics(MetricsArgs),
    /// Extract the most frequent part-of-speech templates
    Patterns(PatternsArgs),
    /// Find template matches inside one document
    Match(MatchArgs),
    /// Find token strings repeated across documents
    Exact(ExactArgs),
    /// Truncate aligned system outputs to the shortest per input
    Truncate(TruncateArgs),
    /// Correlate metrics across system reports
    Correlate(CorrelateArgs),
    /// Run the HTTP API
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Corpus file
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted
    #[arg(long, value_name = "FORMAT", value_parser = ["lines", "jsonl", "csv", "pretagged"])]
    pub input_format: Option<String>,
    /// JSONL key or CSV column holding the text
    #[arg(long, default_value = "text")]
    pub field: String,
}

impl InputArgs {
    fn format(&self) -> Format {
        match &self.input_format {
            Some(f) => f.parse().expect("restricted by clap"),
            None => Format::from_path(&self.input),
        }
    }

    fn load(&self) -> divkit_core::Result<Corpus> {
        Corpus::load(&self.input, self.format(), Some(&self.field))
    }
}

#[derive(Debug, Clone, Args)]
pub struct TaggerArgs {
    /// POS tagger: auto, builtin, pretagged, a rules JSON path, cmd:PROGRAM or an http(s) URL
    #[arg(long, default_value = "auto")]
    pub tagger: String,
}

impl TaggerArgs {
    fn spec(&self, format: Format) -> TaggerSpec {
        let t = self.tagger.as_str();
        match t {
            "auto" if format == Format::Pretagged => TaggerSpec::Pretagged,
            "auto" | "builtin" => TaggerSpec::default(),
            "pretagged" => TaggerSpec::Pretagged,
            _ if t.starts_with("http://") || t.starts_with("https://") => TaggerSpec::External {
                transport: ExternalTransport::Http { url: t.to_string() },
                concurrent: false,
            },
            _ => match t.strip_prefix("cmd:") {
                Some(cmd) => {
                    let mut parts = cmd.split_whitespace().map(str::to_string);
                    TaggerSpec::External {
                        transport: ExternalTransport::Command {
                            program: parts.next().unwrap_or_default(),
                            args: parts.collect(),
                        },
                        concurrent: false,
                    }
                }
                None => TaggerSpec::Builtin {
                    lexicon: Some(PathBuf::from(t)),
                },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    MeanPairs,
    Literal,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    /// Comma-separated subset of metrics (cr, cr_pos, ngd, mattr, hdd, self_rep, self_bleu, hom_rougel, hom_embed, remote_clique, chamfer)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Print the effective configuration as JSON and exit
    #[arg(long)]
    pub print_config: bool,
    /// Seed for the stub embedder
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the deterministic stub embedder with this dimension when no endpoint is configured (0 = off)
    #[arg(long, default_value_t = 0)]
    pub stub_embed_dim: usize,
    /// Worker threads for pairwise metrics (0 = all CPUs)
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Largest n-gram order for n-gram diversity
    #[arg(long, default_value_t = 4)]
    pub ngd_max_n: usize,
    /// MATTR window size
    #[arg(long, default_value_t = 50)]
    pub mattr_window: usize,
    /// HD-D sample size
    #[arg(long, default_value_t = 42)]
    pub hdd_sample: usize,
    /// n-gram length for self-repetition
    #[arg(long, default_value_t = 4)]
    pub selfrep_n: usize,
    /// ROUGE-L recall weight
    #[arg(long, default_value_t = 1.0)]
    pub rouge_beta: f64,
    /// Let n-grams and MATTR windows cross document boundaries
    #[arg(long)]
    pub concat_strict: bool,
    /// Lowercase tokens before counting
    #[arg(long)]
    pub lowercase: bool,
    /// Homogenization normalization
    #[arg(long, value_enum, default_value = "mean-pairs")]
    pub normalization: NormArg,
    /// Compressor for compression ratios
    #[arg(long, default_value = "gzip", value_parser = ["gzip", "zstd"])]
    pub compressor: String,
    /// Compression level
    #[arg(long, default_value_t = 6)]
    pub level: u32,
    /// Skip pairwise metrics above this many document pairs
    #[arg(long, default_value_t = 1_000_000)]
    pub pair_budget: usize,
    /// Run pairwise metrics regardless of the pair budget
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PatternsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    /// Template length in tags
    #[arg(short, default_value_t = 4)]
    pub n: usize,
    /// Number of templates to keep
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub top: usize,
    /// Minimum number of documents a template must appear in
    #[arg(long, default_value_t = DEFAULT_PATTERN_MIN_DOCS)]
    pub min_docs: usize,
    /// Restrict n to the explorer's 2..=10 range
    #[arg(long)]
    pub ui_bounds: bool,
    /// Write the index here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    /// Zero-based document position
    #[arg(long)]
    pub doc: usize,
    /// Template index written by `patterns`
    #[arg(long)]
    pub index: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// String length in tokens
    #[arg(short, default_value_t = 4)]
    pub n: usize,
    /// Minimum number of documents a string must appear in
    #[arg(long, default_value_t = DEFAULT_EXACT_MIN_DOCS)]
    pub min_docs: usize,
    /// Compare tokens case-insensitively
    #[arg(long)]
    pub lowercase: bool,
    /// Restrict n to the explorer's 2..=10 range
    #[arg(long)]
    pub ui_bounds: bool,
    /// Write the index here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TruncateArgs {
    /// System output as NAME=PATH; repeat for each system
    #[arg(long = "system", value_name = "NAME=PATH", required = true)]
    pub systems: Vec<String>,
    /// Directory receiving NAME.jsonl per system
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Input format; guessed from each extension when omitted
    #[arg(long, value_name = "FORMAT", value_parser = ["lines", "jsonl", "csv", "pretagged"])]
    pub input_format: Option<String>,
    /// JSONL key or CSV column holding the text
    #[arg(long, default_value = "text")]
    pub field: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    /// JSON reports written by `metrics --format json`
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Correlation coefficient
    #[arg(long, default_value = "pearson", value_parser = ["pearson", "spearman"])]
    pub method: String,
    /// Comma-separated metrics to include (default: all shared by every report)
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: MatrixFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Interface to bind
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Port to bind
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of read-only demo corpora
    #[arg(long)]
    pub demo: Option<PathBuf>,
    /// Session lifetime in minutes
    #[arg(long, default_value_t = 60)]
    pub ttl_minutes: u64,
    /// Upload size limit in megabytes
    #[arg(long, default_value_t = 20)]
    pub max_upload_mb: usize,
    /// Allowed UI origin for CORS (default: any)
    #[arg(long)]
    pub cors_origin: Option<String>,
    /// Worker threads for pairwise metrics (0 = all CPUs)
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Failure carrying the exit code to use.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<divkit_core::Error> for CliError {
    fn from(e: divkit_core::Error) -> Self {
        fatal(e)
    }
}

fn fatal(e: impl ToString) -> CliError {
    CliError {
        code: EXIT_FATAL,
        message: e.to_string(),
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: e.to_string(),
    }
}

type CliResult = Result<i32, CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Metrics(a) => cmd_metrics(&a, out),
        Command::Patterns(a) => cmd_patterns(&a, out),
        Command::Match(a) => cmd_match(&a, out),
        Command::Exact(a) => cmd_exact(&a, out),
        Command::Truncate(a) => cmd_truncate(&a, out),
        Command::Correlate(a) => cmd_correlate(&a, out),
        Command::Serve(a) => cmd_serve(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(fatal)
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

impl MetricsArgs {
    pub fn config(&self) -> Result<MetricsConfig, CliError> {
        let only = if self.only.is_empty() {
            None
        } else {
            Some(
                self.only
                    .iter()
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Metric>())
                    .collect::<Result<BTreeSet<_>, _>>()
                    .map_err(usage)?,
            )
        };
        Ok(MetricsConfig {
            only,
            lowercase: self.lowercase,
            compression: CompressionConfig {
                algorithm: self.compressor.parse::<Compressor>().map_err(usage)?,
                level: self.level,
                ..Default::default()
            },
            tagger: self.tagger.spec(self.input.format()),
            ngd_max_n: self.ngd_max_n,
            boundary: if self.concat_strict {
                BoundaryMode::Concatenated
            } else {
                BoundaryMode::PerDocument
            },
            mattr_window: self.mattr_window,
            hdd_sample: self.hdd_sample,
            selfrep_n: self.selfrep_n,
            rouge_beta: self.rouge_beta,
            normalization: match self.normalization {
                NormArg::MeanPairs => Normalization::MeanPairs,
                NormArg::Literal => Normalization::Literal,
            },
            workers: self.workers,
            pair_budget: self.pair_budget,
            force: self.force,
            ..Default::default()
        })
    }

    /// Remote provider from the environment, else the stub when requested.
    pub fn embedder(&self) -> Option<Embedder> {
        if let Some(remote) = RemoteEmbedder::from_env() {
            return Some(Embedder::new(Arc::new(remote)));
        }
        (self.stub_embed_dim > 0)
            .then(|| Embedder::new(Arc::new(StubEmbedder::new(self.stub_embed_dim, self.seed))))
    }
}

pub fn cmd_metrics(args: &MetricsArgs, out: &mut dyn Write) -> CliResult {
    let config = args.config()?;
    if args.print_config {
        let echo = serde_json::json!({
            "input": args.input.input,
            "input_format": args.input.format(),
            "field": args.input.field,
            "format": format!("{:?}", args.format).to_lowercase(),
            "seed": args.seed,
            "stub_embed_dim": args.stub_embed_dim,
            "embedding_endpoint": std::env::var(divkit_core::pairwise::ENV_ENDPOINT).ok(),
            "metrics": config,
        });
        emit(out, &to_json(&echo))?;
        return Ok(EXIT_OK);
    }
    let corpus = args.input.load()?;
    let embedder = args.embedder();
    let report = compute_all_metrics(&corpus, &config, embedder.as_ref());
    let rendered = match args.format {
        OutputFormat::Table => report.to_table(),
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => report.to_csv(),
    };
    emit(out, &rendered)?;
    Ok(if report.is_partial() {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    })
}

fn check_n(n: usize, ui_bounds: bool) -> Result<(), CliError> {
    if ui_bounds {
        check_ui_n(n).map_err(usage)
    } else if !(1..=10).contains(&n) {
        Err(usage(format!("n = {n} outside 1..=10")))
    } else {
        Ok(())
    }
}

fn write_or_print(path: Option<&Path>, body: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| fatal(format!("{}: {e}", p.display()))),
        None => emit(out, body),
    }
}

pub fn cmd_patterns(args: &PatternsArgs, out: &mut dyn Write) -> CliResult {
    check_n(args.n, args.ui_bounds)?;
    let corpus = args.input.load()?;
    let tagger = Tagger::from_spec(&args.tagger.spec(args.input.format()))?;
    let index = extract_patterns(&corpus, &tagger, args.n, args.top, args.min_docs)?;
    write_or_print(args.out.as_deref(), &to_json(&index), out)?;
    Ok(EXIT_OK)
}

pub fn cmd_match(args: &MatchArgs, out: &mut dyn Write) -> CliResult {
    let corpus = args.input.load()?;
    let body = std::fs::read_to_string(&args.index)
        .map_err(|e| fatal(format!("{}: {e}", args.index.display())))?;
    let index: PatternIndex =
        serde_json::from_str(&body).map_err(|e| fatal(format!("{}: {e}", args.index.display())))?;
    let doc = corpus.documents().get(args.doc).ok_or_else(|| {
        usage(format!(
            "--doc {} out of range: corpus has {} documents",
            args.doc,
            corpus.len()
        ))
    })?;
    let tagger = Tagger::from_spec(&args.tagger.spec(args.input.format()))?;
    let matches = match_patterns_with(doc, &index, &tagger)?;
    let pairs: Vec<serde_json::Value> = matches
        .iter()
        .map(|m| {
            serde_json::json!({
                "pattern": m.pattern.join(" "),
                "text": m.text,
                "start": m.start,
                "end": m.end,
            })
        })
        .collect();
    emit(out, &to_json(&pairs))?;
    Ok(EXIT_OK)
}

pub fn cmd_exact(args: &ExactArgs, out: &mut dyn Write) -> CliResult {
    check_n(args.n, args.ui_bounds)?;
    let corpus = args.input.load()?;
    let index = exact_matches(&corpus, args.n, args.min_docs, args.lowercase)?;
    write_or_print(args.out.as_deref(), &to_json(&index), out)?;
    Ok(EXIT_OK)
}

pub fn cmd_truncate(args: &TruncateArgs, out: &mut dyn Write) -> CliResult {
    let mut systems = BTreeMap::new();
    for spec in &args.systems {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--system expects NAME=PATH, got `{spec}`")))?;
        let path = PathBuf::from(path);
        let format = match &args.input_format {
            Some(f) => f.parse::<Format>()?,
            None => Format::from_path(&path),
        };
        if systems
            .insert(
                name.to_string(),
                Corpus::load(&path, format, Some(&args.field))?,
            )
            .is_some()
        {
            return Err(usage(format!("system `{name}` given twice")));
        }
    }
    let group = truncate_to_shortest(&SystemGroup::new(systems)?)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| fatal(format!("{}: {e}", args.out_dir.display())))?;
    let mut summary = String::from("system\tdocuments\tavg_length\tpath\n");
    for (name, corpus) in group.systems() {
        let path = args.out_dir.join(format!("{name}.jsonl"));
        let mut body = String::new();
        for d in corpus.documents() {
            body.push_str(&serde_json::json!({"id": d.id(), "text": d.text()}).to_string());
            body.push('\n');
        }
        std::fs::write(&path, body).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
        summary.push_str(&format!(
            "{name}\t{}\t{:.4}\t{}\n",
            corpus.len(),
            divkit_core::avg_length(corpus),
            path.display()
        ));
    }
    emit(out, &summary)?;
    Ok(EXIT_OK)
}

pub fn cmd_correlate(args: &CorrelateArgs, out: &mut dyn Write) -> CliResult {
    let mut reports = Vec::new();
    for path in &args.reports {
        let body =
            std::fs::read_to_string(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
        let report: MetricReport =
            serde_json::from_str(&body).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    let method: CorrelationMethod = args.method.parse()?;
    let metrics = (!args.metrics.is_empty()).then_some(args.metrics.as_slice());
    let matrix = correlate(&reports, metrics, method)?;
    match args.format {
        MatrixFormat::Csv => emit(out, &matrix.to_csv())?,
        MatrixFormat::Json => emit(out, &to_json(&matrix))?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_serve(args: &ServeArgs, out: &mut dyn Write) -> CliResult {
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| usage(format!("bad address {}:{}: {e}", args.host, args.port)))?;
    let config = divkit_service::ServiceConfig {
        demo_dir: args.demo.clone(),
        ttl: Duration::from_secs(args.ttl_minutes * 60),
        max_upload_bytes: args.max_upload_mb * 1024 * 1024,
        metrics: MetricsConfig {
            workers: args.workers,
            ..Default::default()
        },
        embedder: RemoteEmbedder::from_env().map(|r| Arc::new(Embedder::new(Arc::new(r)))),
        cors_origin: args.cors_origin.clone(),
    };
    emit(out, &format!("listening on http://{addr}\n"))?;
    let _ = out.flush();
    let runtime = tokio::runtime::Runtime::new().map_err(fatal)?;
    runtime
        .block_on(divkit_service::serve(addr, config))
        .map_err(|e| fatal(format!("{addr}: {e}")))?;
    Ok(EXIT_OK)
}
