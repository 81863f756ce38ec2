//! Command-line front end. [`run`] is the whole program minus process
//! exit, so tests can drive it in-process.
//!
//! Exit codes: 0 on success, 1 when the data or files are at fault, 2 for
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{decompose_for, preprocess, AnalysisRequest, Defaults, Preprocessing};
use crate::category::Category;
use crate::config::{Config, CACHE_ENV, CONFIG_ENV};
use crate::correlate::CorrelationSign;
use crate::dataset::Dataset;
use crate::series::{DateRange, FillPolicy, Source, Strategy};
use crate::synth::{generate, write_fixture, SynthSpec};
use crate::Error;

/// How many rejected rows `ingest` lists before summarizing.
const MAX_LISTED_REJECTIONS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "coupling", version, about = "Coupling analysis of call-centre and social-media topics")]
struct Cli {
    /// Config file (TOML).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Dataset cache directory.
    #[arg(long, global = true, env = CACHE_ENV)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and categorize source files into the cache.
    Ingest(IngestArgs),
    /// Print the daily series for a category.
    Series(SeriesArgs),
    /// Print the additive decomposition of one series.
    Decompose(SeriesArgs),
    /// Lagged cross-correlation and delay between social and call series.
    Correlate(AnalysisArgs),
    /// Weekly SAX words and trend comparison.
    Sax(AnalysisArgs),
    /// Generate a synthetic coupled fixture.
    Synth(SynthArgs),
    /// Serve the HTTP API over the cached dataset.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Call-centre record files.
    #[arg(long = "calls", num_args = 1..)]
    calls: Vec<PathBuf>,
    /// Social-media post files (`.jsonl` for JSON lines).
    #[arg(long = "posts", num_args = 1..)]
    posts: Vec<PathBuf>,
    /// Rule file overriding the config.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Fail if any row is rejected.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    #[arg(long)]
    category: Category,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    preprocessing: Option<Preprocessing>,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    min_overlap: Option<usize>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    word_length: Option<usize>,
    #[arg(long)]
    alphabet_size: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    fill: Option<FillPolicy>,
    /// Print the JSON report served by the HTTP API instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Restrict text output to one source.
    #[arg(long)]
    source: Option<Source>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Positive,
    Negative,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Full JSON spec; the other generation flags are ignored.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "2014-01-01")]
    from: NaiveDate,
    #[arg(long, default_value = "2014-12-31")]
    to: NaiveDate,
    #[arg(long, default_value = "work")]
    category: Category,
    /// Days by which calls trail posts.
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    lag: i64,
    #[arg(long, value_enum, default_value = "positive")]
    sign: SignArg,
    #[arg(long, default_value_t = 0.95)]
    strength: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    /// Persistence of the latent driver, in `[0, 1)`.
    #[arg(long, default_value_t = 0.5)]
    ar: f64,
    /// Keep the call centre open at weekends.
    #[arg(long)]
    no_weekend_closure: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory of static UI assets served outside `/v1`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<crate::AnalysisError> for Failure {
    fn from(e: crate::AnalysisError) -> Self {
        match e {
            crate::AnalysisError::BadRequest(m) => Failure::Usage(m),
            other => Failure::Data(other.to_string()),
        }
    }
}

/// Runs the CLI with `args` (including the program name), writing to
/// `out` and `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    match path {
        Some(p) => Ok(Config::from_path(p)?),
        None => Ok(Config::default()),
    }
}

fn cache_dir(cli_cache: Option<&Path>) -> Result<&Path, Failure> {
    cli_cache.ok_or_else(|| Failure::Usage(format!("no cache directory: pass --cache or set {CACHE_ENV}")))
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(args) => ingest(args, config, cache_dir(cli.cache.as_deref())?, out, err),
        Command::Synth(args) => synth(args, out),
        Command::Series(args) => {
            let dataset = Dataset::load_cache(cache_dir(cli.cache.as_deref())?)?;
            series(&dataset, &config.defaults, args, out)
        }
        Command::Decompose(args) => {
            let dataset = Dataset::load_cache(cache_dir(cli.cache.as_deref())?)?;
            decompose(&dataset, &config.defaults, args, out)
        }
        Command::Correlate(args) => {
            let dataset = Dataset::load_cache(cache_dir(cli.cache.as_deref())?)?;
            correlate(&dataset, &config.defaults, args, out)
        }
        Command::Sax(args) => {
            let dataset = Dataset::load_cache(cache_dir(cli.cache.as_deref())?)?;
            sax(&dataset, &config.defaults, args, out)
        }
        Command::Serve(args) => {
            let dataset = Dataset::load_cache(cache_dir(cli.cache.as_deref())?)?;
            let router = crate::service::router(dataset, config.defaults, args.static_dir);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::service::serve(args.addr, router))?;
            Ok(())
        }
    }
}

fn ingest(args: IngestArgs, mut config: Config, cache: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    if args.calls.is_empty() && args.posts.is_empty() {
        return Err(Failure::Usage("nothing to ingest: pass --calls and/or --posts".into()));
    }
    if args.rules.is_some() {
        config.rules = args.rules;
    }
    let (dataset, rejections) = Dataset::ingest_files(&args.calls, &args.posts, &config)?;
    for r in rejections.iter().take(MAX_LISTED_REJECTIONS) {
        writeln!(err, "{}: line {}: {}", r.path.display(), r.error.line, r.error.message)?;
    }
    if rejections.len() > MAX_LISTED_REJECTIONS {
        writeln!(err, "... and {} more rejected rows", rejections.len() - MAX_LISTED_REJECTIONS)?;
    }
    if args.strict && !rejections.is_empty() {
        return Err(Failure::Data(format!("{} rows rejected (--strict)", rejections.len())));
    }
    dataset.write_cache(cache)?;
    let m = &dataset.manifest;
    let span = |s: &Option<DateRange>| match s {
        Some(r) => format!("{}..{}", r.start(), r.end()),
        None => "empty".into(),
    };
    writeln!(out, "calls: {} records, {}", m.call_records, span(&m.call_span))?;
    writeln!(out, "posts: {} records, {}", m.post_records, span(&m.post_span))?;
    writeln!(out, "rejected: {}", rejections.len())?;
    writeln!(out, "cache: {}", cache.display())?;
    Ok(())
}

fn request(args: &AnalysisArgs, defaults: &Defaults) -> Result<AnalysisRequest, Failure> {
    let mut req = AnalysisRequest::new(args.category.clone(), defaults);
    req.strategy = args.strategy.unwrap_or(req.strategy);
    req.preprocessing = args.preprocessing.unwrap_or(req.preprocessing);
    req.from = args.from;
    req.to = args.to;
    req.max_lag = args.max_lag.unwrap_or(req.max_lag);
    req.min_overlap = args.min_overlap.unwrap_or(req.min_overlap);
    req.period = args.period.unwrap_or(req.period);
    req.word_length = args.word_length.or(req.word_length);
    req.alphabet_size = args.alphabet_size.unwrap_or(req.alphabet_size);
    req.threshold = args.threshold.unwrap_or(req.threshold);
    req.fill = args.fill.or(req.fill);
    req.validate()?;
    Ok(req)
}

fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn csv_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn series(dataset: &Dataset, defaults: &Defaults, args: SeriesArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let req = request(&args.analysis, defaults)?;
    if args.analysis.json {
        return write_json(out, &dataset.series(&req)?);
    }
    let (_, social, call) = dataset.raw_pair(&req)?;
    let social = preprocess(&social, &req)?;
    let call = preprocess(&call, &req)?;
    match args.source {
        Some(Source::Social) => social.write_csv(&mut *out).map_err(csv_failure),
        Some(Source::Call) => call.write_csv(&mut *out).map_err(csv_failure),
        None => {
            writeln!(out, "date,social,call")?;
            for (i, day) in social.dates().enumerate() {
                writeln!(out, "{day},{},{}", fmt_opt(social.values[i].get()), fmt_opt(call.values[i].get()))?;
            }
            Ok(())
        }
    }
}

fn decompose(dataset: &Dataset, defaults: &Defaults, args: SeriesArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let req = request(&args.analysis, defaults)?;
    if args.analysis.json {
        return write_json(out, &dataset.decomposition(&req)?);
    }
    let (_, social, call) = dataset.raw_pair(&req)?;
    let series = match args.source.unwrap_or(Source::Call) {
        Source::Social => social,
        Source::Call => call,
    };
    let decomposed = decompose_for(&series, &req)?;
    let figures: Vec<String> = decomposed.figures.iter().map(|f| format!("{f:.4}")).collect();
    writeln!(out, "# {} {}, period {}, seasonal figures: {}", series.source, series.category, req.period, figures.join(" "))?;
    decomposed.write_csv(&mut *out).map_err(csv_failure)
}

fn correlate(dataset: &Dataset, defaults: &Defaults, args: AnalysisArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let req = request(&args, defaults)?;
    let report = dataset.correlation(&req)?;
    if args.json {
        return write_json(out, &report);
    }
    writeln!(
        out,
        "# {}, {}, {}, {}..{}",
        req.category,
        req.strategy,
        req.preprocessing,
        report.range.start(),
        report.range.end()
    )?;
    writeln!(out, "# {}", report.orientation)?;
    report.ccf.write_csv(&mut *out).map_err(csv_failure)?;
    for o in &report.ccf.omitted {
        writeln!(out, "# lag {} omitted: {}", o.lag, o.reason)?;
    }
    writeln!(out, "delay: {} ({})", report.delay.delay, report.summary)?;
    Ok(())
}

fn sax(dataset: &Dataset, defaults: &Defaults, args: AnalysisArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let req = request(&args, defaults)?;
    let report = dataset.sax(&req)?;
    if args.json {
        return write_json(out, &report);
    }
    writeln!(out, "weeks: {} from {}", report.weeks.len(), report.weeks.first().map(|d| d.to_string()).unwrap_or_default())?;
    writeln!(out, "social: {}", report.social.letters)?;
    writeln!(out, "call:   {}", report.call.letters)?;
    let c = &report.comparison;
    match c.pearson_on_indices {
        Some(r) => writeln!(out, "pearson: {r:.4}")?,
        None => writeln!(out, "pearson: undefined")?,
    }
    writeln!(out, "trend: {} (threshold {})", c.label, c.threshold)?;
    if let Some(note) = &c.note {
        writeln!(out, "note: {note}")?;
    }
    Ok(())
}

fn synth(args: SynthArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<SynthSpec>(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        }
        None => {
            let range = DateRange::new(args.from, args.to).map_err(|e| Failure::Usage(e.to_string()))?;
            let sign = match args.sign {
                SignArg::Positive => CorrelationSign::Positive,
                SignArg::Negative => CorrelationSign::Negative,
            };
            let mut spec = SynthSpec::coupled(range, args.category.clone(), args.lag, sign, args.strength, args.seed);
            spec.weekend_closure = !args.no_weekend_closure;
            spec.noise_std = args.noise_std;
            spec.latent.ar = args.ar;
            spec
        }
    };
    let output = generate(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    write_fixture(&args.out, &spec, &output).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(out, "calls: {}", output.calls.len())?;
    writeln!(out, "posts: {}", output.posts.len())?;
    writeln!(out, "written to {}", args.out.display())?;
    Ok(())
}
