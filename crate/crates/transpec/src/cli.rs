//! `transpec` command line.
//!
//! Exit codes: 0 success, 1 usage (bad flags, unreadable input files, bad
//! config), 2 validation, 3 provider or fixture failure, 4 persistence.
//! Reports go to stdout; everything else goes to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use transpec_core::{
    default_target_culture, parse_spec, render, ExemplarPair, PromptStrategy, ReportFormat, SourceSegment,
};

use crate::config::{Config, ConfigError, Mode, Sampling, CONFIG_ENV};
use crate::diagnostics;
use crate::fixtures::FixtureStore;
use crate::gateway::{Gateway, ProviderError};
use crate::pipeline::{ErrorClass, Pipeline, PipelineError, ReferenceInput, SessionRequest};
use crate::store::{SessionStore, StoreError};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_PERSISTENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "transpec",
    version,
    about = "Specification-conditioned translation candidates ranked by embedding similarity"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Fixture directory for replay and record modes.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, global = true)]
    pub sessions: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Table)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Baseline,
    Spec,
    Dynamic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate, rank and store candidate translations for one segment.
    Translate(TranslateArgs),
    /// Rank one sentence frame filled with each of several entities.
    Substitute(SubstituteArgs),
    /// Record the chosen candidate of a session.
    Select(SelectArgs),
    /// Print the ranked report of a stored session.
    Report { session_id: String },
    /// List stored sessions, newest first.
    Sessions,
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Re-embed the pot-idiom comparison set with the live provider and
    /// report rank agreement. Never fails on disagreement.
    DiagnoseLive,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    /// JSON translation spec.
    pub spec_file: PathBuf,
    /// Source text; use --source-file for a file.
    #[arg(conflicts_with = "source_file", required_unless_present = "source_file")]
    pub source: Option<String>,
    #[arg(long)]
    pub source_file: Option<PathBuf>,
    #[arg(long, default_value = "seg-1")]
    pub segment_id: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::Spec)]
    pub strategy: StrategyArg,
    /// Number of candidates; defaults to 1 for baseline and 3 otherwise.
    #[arg(long)]
    pub n: Option<usize>,
    /// JSON array of {"label", "text"} reference translations.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// JSON array of {"source_phrase", "target_phrase", "rationale"}; dynamic only.
    #[arg(long)]
    pub exemplars: Option<PathBuf>,
    /// Culture named in the dynamic-equivalence instruction.
    #[arg(long)]
    pub target_culture: Option<String>,
    /// One call per candidate instead of one call asking for all of them.
    #[arg(long)]
    pub independent: bool,
}

#[derive(Debug, Args)]
pub struct SubstituteArgs {
    /// Sentence with exactly one {ENTITY} slot.
    #[arg(long)]
    pub frame: String,
    /// JSON array of strings, or one entity per line.
    #[arg(long)]
    pub entities: PathBuf,
    #[arg(long)]
    pub source: String,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub session_id: String,
    pub label: String,
    /// File holding a post-edited version of the chosen candidate.
    #[arg(long)]
    pub edit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => EXIT_USAGE,
            Self::Bind { .. } => EXIT_PROVIDER,
            Self::Pipeline(e) => match e.class() {
                ErrorClass::Validation | ErrorClass::UnknownLabel | ErrorClass::NotFound => EXIT_VALIDATION,
                ErrorClass::Provider => EXIT_PROVIDER,
                ErrorClass::Persistence => EXIT_PERSISTENCE,
            },
        }
    }
}

/// Reads a UTF-8 input file; unreadable files are usage errors.
fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_input(path)?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::invalid("request.invalid", format!("{}: {e}", path.display())).into())
}

fn strip_trailing_newlines(s: &str) -> &str {
    s.trim_end_matches(['\n', '\r'])
}

/// A JSON array of strings, or else one non-blank line per entity.
pub fn parse_entities(text: &str) -> Vec<String> {
    match serde_json::from_str::<Vec<String>>(text) {
        Ok(v) => v,
        Err(_) => text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect(),
    }
}

pub fn resolve_config(global: &GlobalArgs) -> Result<Config, CliError> {
    let mut config = match &global.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(mode) = global.mode {
        config.mode = mode;
    }
    if let Some(dir) = &global.fixtures {
        config.fixtures_dir = dir.clone();
    }
    if let Some(dir) = &global.sessions {
        config.sessions_dir = dir.clone();
    }
    Ok(config.with_env_api_key())
}

fn build_pipeline(config: &Config) -> Result<Pipeline, CliError> {
    let gateway = Gateway::new(config)?;
    let store = SessionStore::open(&config.sessions_dir)?;
    Ok(Pipeline::new(config, gateway, Arc::new(store)))
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start async runtime: {e}")))
}

fn translate_request(args: &TranslateArgs) -> Result<SessionRequest, CliError> {
    let spec_text = read_input(&args.spec_file)?;
    let source = match (&args.source, &args.source_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => strip_trailing_newlines(&read_input(p)?).to_owned(),
        (None, None) => return Err(CliError::Usage("a source text or --source-file is required".into())),
    };
    let spec = parse_spec(&spec_text).map_err(PipelineError::from)?;
    let segment = SourceSegment::new(args.segment_id.clone(), source).map_err(PipelineError::from)?;
    if args.strategy != StrategyArg::Dynamic && (args.exemplars.is_some() || args.target_culture.is_some()) {
        return Err(CliError::Usage("--exemplars and --target-culture apply to --strategy dynamic only".into()));
    }
    let strategy = match args.strategy {
        StrategyArg::Baseline => PromptStrategy::Baseline,
        StrategyArg::Spec => PromptStrategy::SpecConditioned,
        StrategyArg::Dynamic => {
            let exemplars = match &args.exemplars {
                Some(p) => read_json::<Vec<ExemplarPair>>(p)?,
                None => vec![ExemplarPair::lamb_of_god()],
            };
            let target_culture = args.target_culture.clone().unwrap_or_else(|| default_target_culture(&spec.pair));
            PromptStrategy::DynamicEquivalence { exemplars, target_culture }
        }
    };
    let n = args.n.unwrap_or(if args.strategy == StrategyArg::Baseline { 1 } else { 3 });
    let references = match &args.refs {
        Some(p) => read_json::<Vec<ReferenceInput>>(p)?,
        None => Vec::new(),
    };
    Ok(SessionRequest { spec, segment, strategy, n, references, idempotency_key: None })
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

async fn serve(pipeline: Pipeline, args: &ServeArgs) -> Result<(), CliError> {
    let addr = format!("{}:{}", args.host, args.port);
    let listener =
        tokio::net::TcpListener::bind(&addr).await.map_err(|source| CliError::Bind { addr: addr.clone(), source })?;
    let local = listener.local_addr().map_err(|source| CliError::Bind { addr: addr.clone(), source })?;
    eprintln!("listening on http://{local}");
    let app = crate::api::router(crate::api::AppState::new(pipeline));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            eprintln!("shutting down");
        })
        .await
        .map_err(|source| CliError::Bind { addr, source })
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let mut config = resolve_config(&cli.global)?;
    let format = ReportFormat::from(cli.global.format);
    match cli.command {
        Command::Translate(args) => {
            if args.independent {
                config.sampling = Sampling::Independent;
            }
            let request = translate_request(&args)?;
            let pipeline = build_pipeline(&config)?;
            let record = runtime()?.block_on(pipeline.run_session(request))?;
            eprintln!("session {}", record.session_id);
            print!("{}", render(&record.report, format));
        }
        Command::Substitute(args) => {
            let entities = parse_entities(&read_input(&args.entities)?);
            let pipeline = build_pipeline(&config)?;
            let report = runtime()?.block_on(pipeline.substitution_analysis(&args.frame, &entities, &args.source))?;
            print!("{}", render(&report, format));
        }
        Command::Select(args) => {
            let edited = match &args.edit {
                Some(p) => Some(strip_trailing_newlines(&read_input(p)?).to_owned()),
                None => None,
            };
            let store = SessionStore::open(&config.sessions_dir)?;
            let pipeline =
                Pipeline::new(&config, Gateway::replay(FixtureStore::new(&config.fixtures_dir)), Arc::new(store));
            let record = pipeline.record_selection(&args.session_id, &args.label, edited)?;
            match format {
                ReportFormat::Json => print_json(&record.selection),
                ReportFormat::Table => eprintln!("selected {} in session {}", args.label, record.session_id),
            }
        }
        Command::Report { session_id } => {
            let store = SessionStore::open(&config.sessions_dir)?;
            print!("{}", render(&store.load(&session_id)?.report, format));
        }
        Command::Sessions => {
            let entries = SessionStore::open(&config.sessions_dir)?.list()?;
            match format {
                ReportFormat::Json => print_json(&entries),
                ReportFormat::Table => {
                    for e in entries {
                        println!(
                            "{}\t{}\t{}\t{}",
                            e.session_id,
                            e.created_at.to_rfc3339(),
                            e.strategy,
                            e.source.replace('\n', " ")
                        );
                    }
                }
            }
        }
        Command::Serve(args) => {
            let pipeline = build_pipeline(&config)?;
            runtime()?.block_on(serve(pipeline, &args))?;
        }
        Command::DiagnoseLive => {
            if config.mode == Mode::Replay {
                config.mode = Mode::Live;
            }
            let pipeline = build_pipeline(&config)?;
            let agreement = runtime()?.block_on(diagnostics::pot_idiom_agreement(&pipeline))?;
            match format {
                ReportFormat::Json => print_json(&agreement),
                ReportFormat::Table => print!("{}", agreement.summary()),
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Pipeline(p) = &e {
                eprintln!("code: {}", p.code());
            }
            e.exit_code()
        }
    }
}
