use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dialogforge_core::generator::RevisionDocument;
use serde::Serialize;

use crate::api::{self, AppState, DEFAULT_JOB_WORKERS};
use crate::artifacts::ArtifactDir;
use crate::bot_server;
use crate::config::PipelineConfig;
use crate::error::PipelineError;
use crate::pipeline::{self, ParseInput};
use crate::serve::serve_until_signal;
use crate::store::Store;

#[derive(Parser, Debug)]
#[command(name = "dialogforge", version, about = "Generate, simulate and remediate task-oriented dialog bots")]
pub struct Cli {
    /// Pipeline config (JSON); defaults apply to missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct OutDir {
    /// Artifact directory of the run.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a bot definition into dialog-act maps, ontology and graph.
    Parse {
        definition: PathBuf,
        #[command(flatten)]
        out: OutDir,
        /// Replace an existing run in the output directory.
        #[arg(long)]
        force: bool,
        /// Intent utterance sidecar merged into the definition.
        #[arg(long)]
        utterances: Option<PathBuf>,
        /// Held-out utterances for retraining; `<definition stem>.eval.json`
        /// is picked up automatically.
        #[arg(long)]
        eval: Option<PathBuf>,
    },
    /// Apply a revision document (or accept the maps as parsed) and mark
    /// the maps revised.
    Revise {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        revision: Option<PathBuf>,
    },
    /// Paraphrase intent queries and write simulation goals.
    Generate {
        #[command(flatten)]
        out: OutDir,
    },
    /// Run every goal against the bot.
    Simulate {
        #[command(flatten)]
        out: OutDir,
        /// Chat-protocol endpoint; the embedded runtime is used otherwise.
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Analyse episodes and write the health report.
    Remediate {
        #[command(flatten)]
        out: OutDir,
        #[arg(long, default_value = "cli")]
        session_id: String,
    },
    /// Augment training data with failing queries, retrain and compare.
    Retrain {
        #[command(flatten)]
        out: OutDir,
    },
    /// Serve the application API.
    Serve {
        #[arg(long, env = "DIALOGFORGE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "DIALOGFORGE_DB", default_value = "dialogforge.db")]
        db: PathBuf,
        /// Session artifact root; defaults to `sessions/` next to the store.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_JOB_WORKERS)]
        workers: usize,
    },
    /// Serve the reference runtime for a parsed run over the chat protocol.
    ServeBot {
        #[command(flatten)]
        out: OutDir,
        #[arg(long, env = "DIALOGFORGE_BOT_PORT", default_value_t = 8081)]
        port: u16,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("summary serializes"));
}

fn read_revision(path: Option<&PathBuf>) -> Result<RevisionDocument, PipelineError> {
    match path {
        None => Ok(RevisionDocument::default()),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
            serde_json::from_slice(&bytes).map_err(|e| PipelineError::InvalidInput(format!("{}: {e}", p.display())))
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, PipelineError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| PipelineError::Internal(e.to_string()))
}

pub fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Parse { definition, out, force, utterances, eval } => {
            let (bytes, sidecar, eval) = pipeline::load_parse_input(&definition, utterances.as_deref(), eval.as_deref())?;
            let input = ParseInput { definition: &bytes, utterances: sidecar, eval_utterances: eval };
            print(&pipeline::parse(&input, &ArtifactDir::new(out.out), force, &cfg)?);
        }
        Command::Revise { out, revision } => {
            let rev = read_revision(revision.as_ref())?;
            let dialogs = pipeline::revise(&ArtifactDir::new(out.out), &rev)?;
            print(&serde_json::json!({ "revised": dialogs }));
        }
        Command::Generate { out } => print(&pipeline::generate(&ArtifactDir::new(out.out), &cfg)?),
        Command::Simulate { out, endpoint } => {
            if endpoint.is_some() {
                cfg.endpoint = endpoint;
            }
            print(&pipeline::simulate(&ArtifactDir::new(out.out), &cfg)?);
        }
        Command::Remediate { out, session_id } => {
            let report = pipeline::remediate_stage(&ArtifactDir::new(out.out), &session_id, &[], &cfg)?;
            print(&report.summary);
        }
        Command::Retrain { out } => {
            let cmp = pipeline::retrain(&ArtifactDir::new(out.out), &cfg)?;
            print!("{}", cmp.table());
        }
        Command::Serve { port, db, data_dir, workers } => {
            let store = Store::open(&db)?;
            let data_dir = data_dir.unwrap_or_else(|| {
                db.parent().map(|p| p.join("sessions")).unwrap_or_else(|| PathBuf::from("sessions"))
            });
            let state = AppState::new(store, data_dir, cfg, workers);
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            runtime()?
                .block_on(serve_until_signal(api::router(state), addr))
                .map_err(|e| PipelineError::Internal(format!("bind {addr}: {e}")))?;
        }
        Command::ServeBot { out, port } => {
            let def = pipeline::load_bot(&ArtifactDir::new(out.out))?;
            let rt = pipeline::embedded_runtime(def, &cfg, cfg.runtime.injection.clone())?;
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            runtime()?
                .block_on(serve_until_signal(bot_server::router(rt), addr))
                .map_err(|e| PipelineError::Internal(format!("bind {addr}: {e}")))?;
        }
    }
    Ok(())
}

/// Runs the CLI; failures are reported as JSON on stderr.
pub fn main_with(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
