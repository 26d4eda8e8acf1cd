//! The `capforge` command line: every pipeline stage as a subcommand over
//! line-delimited JSON files, plus the annotation HTTP server.

pub mod commands;
pub mod config;
pub mod error;
pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::LazyLock;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

pub use error::CliError;

static VERSION: LazyLock<String> =
    LazyLock::new(|| format!("{} (format {})", env!("CARGO_PKG_VERSION"), capforge_core::FORMAT_VERSION));

#[derive(Debug, Parser)]
#[command(name = "capforge", about = "Build and score context-assisted captioning datasets", args_override_self = true)]
pub struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file with one table of flag defaults per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusIn {
    #[arg(long)]
    pub articles: PathBuf,
    #[arg(long)]
    pub captions: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TagTarget {
    Captions,
    Articles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderTask {
    Caption,
    Entailment,
    Keywords,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fidelity,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalTask {
    Caption,
    Keywords,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsFormat {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate raw articles and captions and write them back normalized.
    Ingest {
        #[command(flatten)]
        input: CorpusIn,
        #[arg(long)]
        out_articles: PathBuf,
        #[arg(long)]
        out_captions: PathBuf,
    },
    /// Drop image-less, too short, too long and duplicate captions.
    Clean {
        #[command(flatten)]
        input: CorpusIn,
        #[arg(long)]
        out_articles: PathBuf,
        #[arg(long)]
        out_captions: PathBuf,
        /// Per-rule removal counts.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Assign train/val/test splits.
    Split {
        #[command(flatten)]
        input: CorpusIn,
        #[arg(long)]
        seed: u64,
        /// train,val,test fractions summing to 1.
        #[arg(long, default_value = "0.8,0.1,0.1")]
        fractions: String,
        #[arg(long)]
        out_captions: PathBuf,
    },
    /// Tag named entities with a gazetteer or import external annotations.
    Tag {
        #[command(flatten)]
        input: CorpusIn,
        /// Lines of `surface<TAB>TYPE`.
        #[arg(long, conflicts_with = "external_tags", required_unless_present = "external_tags")]
        gazetteer: Option<PathBuf>,
        /// Line-delimited `{"record_id","surface","type","start","end"}`.
        #[arg(long)]
        external_tags: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "captions")]
        target: TagTarget,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit positive and synthetic negative entailment instances.
    GenEntailment {
        #[command(flatten)]
        input: CorpusIn,
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        seed: u64,
        /// positives:negatives
        #[arg(long, default_value = "1:1")]
        ratio: String,
        /// N1,N2,N3 class weights.
        #[arg(long, default_value = "1,1,1")]
        weights: String,
        #[arg(long, default_value_t = 20)]
        max_retries: usize,
        /// Splits to draw sources and donors from.
        #[arg(long, default_value = "train,unassigned")]
        splits: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        skips: Option<PathBuf>,
    },
    /// One keyword-extraction instance per article with gold keywords.
    BuildKeywords {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render instruction prompts and targets.
    Render {
        #[arg(long, value_enum)]
        task: RenderTask,
        /// Captions for `caption`, entailment instances or keyword instances otherwise.
        #[arg(long)]
        input: PathBuf,
        /// Article bodies used as caption context.
        #[arg(long, required_if_eq("task", "caption"))]
        articles: Option<PathBuf>,
        /// Article entity tags; switches captioning to the names prompt.
        #[arg(long)]
        entities: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fidelity")]
        mode: Mode,
        #[arg(long, default_value_t = 512)]
        context_max: usize,
        #[arg(long, default_value_t = 30)]
        caption_max: usize,
        #[arg(long, default_value_t = 64)]
        entity_max: usize,
        /// Subword vocabulary, one piece per line; whitespace tokens otherwise.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score generated captions or keywords against references.
    Eval {
        #[arg(long, value_enum, default_value = "caption")]
        task: EvalTask,
        /// `{"instance_id","caption"}` or `{"instance_id","keywords"}` lines.
        #[arg(long)]
        generated: PathBuf,
        /// Captions file, or keyword instances for `keywords`.
        #[arg(long)]
        references: PathBuf,
        /// Enables named-entity precision and recall.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dataset sizes per split.
    Stats {
        #[command(flatten)]
        input: CorpusIn,
        #[arg(long)]
        entailment: Option<PathBuf>,
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: StatsFormat,
    },
    /// Serve the annotation API over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Event log; created if missing.
        #[arg(long)]
        store: PathBuf,
        /// Entailment instances whose positives become annotation tasks.
        #[arg(long)]
        tasks: Option<PathBuf>,
        #[arg(long, default_value_t = 1800)]
        claim_timeout_secs: u64,
    },
    /// Write peer-verified manual negatives as entailment instances.
    ExportAnnotations {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also emit the untouched caption as a positive.
        #[arg(long)]
        pair_positives: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Clean { .. } => "clean",
            Command::Split { .. } => "split",
            Command::Tag { .. } => "tag",
            Command::GenEntailment { .. } => "gen-entailment",
            Command::BuildKeywords { .. } => "build-keywords",
            Command::Render { .. } => "render",
            Command::Eval { .. } => "eval",
            Command::Stats { .. } => "stats",
            Command::Serve { .. } => "serve",
            Command::ExportAnnotations { .. } => "export-annotations",
        }
    }
}

fn parse(args: &[OsString]) -> Result<Result<Cli, String>, CliError> {
    let command = Cli::command().version(VERSION.as_str());
    match command.try_get_matches_from(args) {
        Ok(matches) => Cli::from_arg_matches(&matches)
            .map(Ok)
            .map_err(|e| CliError::Usage(e.to_string())),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(Err(e.to_string())),
            _ => Err(CliError::Usage(e.render().to_string().trim().to_owned())),
        },
    }
}

/// Parse `args` (including argv[0]) and run the command. Summaries and help
/// text go to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Some(path) = config::config_path(&args) {
        args = config::apply(args, &path)?;
    }
    let cli = match parse(&args)? {
        Ok(cli) => cli,
        Err(text) => {
            let _ = out.write_all(text.as_bytes());
            return Ok(());
        }
    };

    match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) if !matches!(cli.command, Command::Serve { .. }) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::runtime(e.to_string()))?;
            let mut buf = Vec::new();
            let result = pool.install(|| commands::dispatch(&cli.command, &mut buf));
            let _ = out.write_all(&buf);
            result
        }
        Some(_) => commands::dispatch(&cli.command, out),
        None => commands::dispatch(&cli.command, out),
    }
}
