//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ucds_core::analysis::{Dataset, DatasetReport};
use ucds_core::urls::UrlPipelineConfig;
use ucds_core::UrlPipeline;

use crate::http::{self, AppState};
use crate::session::{Importer, ReviewSession};
use crate::store::Store;
use crate::submit::{Dispatcher, Target};

#[derive(Debug, Parser)]
#[command(name = "ucds", version, about = "Extract, review and submit chat metadata")]
pub struct Cli {
    /// Session directory (default: $UCDS_HOME, $XDG_DATA_HOME/ucds or ~/.local/share/ucds).
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    /// Never contact URL shorteners; shortened links keep the shortener's domain.
    #[arg(long, global = true)]
    pub offline: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract metadata from an exported chat text file.
    Import { file: PathBuf },
    /// List imported chats.
    List,
    /// Print the exact payload that would be submitted for a chat.
    Show { chat: String },
    /// Remove one URL (by its index in the payload's `urls`) from a chat.
    DeleteUrl { chat: String, index: usize },
    /// Send a chat's payload to one or more targets.
    Submit {
        chat: String,
        /// HTTP endpoint to POST the payload to. Repeatable.
        #[arg(long, value_name = "URL")]
        target: Vec<String>,
        /// File (or existing directory) to write the payload to.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Serve the review API on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = http::DEFAULT_PORT)]
        port: u16,
        /// Default submission target for API clients. Repeatable.
        #[arg(long, value_name = "URL|FILE")]
        target: Vec<String>,
    },
    /// Summarize a directory of submitted payloads (one subdirectory per participant).
    Analyze {
        dir: PathBuf,
        /// Also write the report as JSON.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
}

fn store(cli: &Cli) -> anyhow::Result<Store> {
    match cli.data_dir.clone().or_else(Store::default_dir) {
        Some(dir) => Ok(Store::new(dir)),
        None => bail!("no session directory; pass --data-dir or set UCDS_HOME"),
    }
}

fn pipeline(offline: bool) -> anyhow::Result<UrlPipeline> {
    if offline {
        return Ok(UrlPipeline::offline());
    }
    UrlPipeline::with_http(UrlPipelineConfig::default()).context("setting up the redirect resolver")
}

fn parse_targets(raw: &[String]) -> anyhow::Result<Vec<Target>> {
    raw.iter()
        .map(|t| Target::parse(t).map_err(anyhow::Error::msg))
        .collect()
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match &cli.command {
        Command::Import { file } => {
            let mut session = ReviewSession::open(store(&cli)?)?;
            let imported = Importer::new(Arc::new(pipeline(cli.offline)?)).import_file(file)?;
            let report = session.add(imported)?;
            for w in &report.warnings {
                log::warn!("{}: {w}", file.display());
            }
            writeln!(out, "imported chat {} ({})", report.chat_label, report.chat_id)?;
            if report.unparseable_urls + report.degraded_urls > 0 {
                writeln!(
                    out,
                    "  {} link(s) dropped as unparseable, {} shortened link(s) kept as the shortener",
                    report.unparseable_urls, report.degraded_urls
                )?;
            }
        }
        Command::List => {
            let session = ReviewSession::open(store(&cli)?)?;
            let chats = session.list();
            if chats.is_empty() {
                writeln!(out, "no chats")?;
            }
            for c in chats {
                writeln!(
                    out,
                    "{:<3} {}  {:<9} users={} messages={} urls={} {}..{}{}",
                    c.chat_label,
                    c.chat_id,
                    format!("{:?}", c.state).to_lowercase(),
                    c.num_users,
                    c.messages,
                    c.urls,
                    c.start_date,
                    c.end_date,
                    if c.edited { " edited" } else { "" }
                )?;
            }
        }
        Command::Show { chat } => {
            let mut session = ReviewSession::open(store(&cli)?)?;
            out.write_all(&session.preview(chat)?)?;
        }
        Command::DeleteUrl { chat, index } => {
            let mut session = ReviewSession::open(store(&cli)?)?;
            let removed = session.delete_url(chat, *index)?;
            writeln!(out, "removed url {index} ({}) from chat {chat}", removed.domain)?;
        }
        Command::Submit { chat, target, out: file } => {
            let mut targets = parse_targets(target)?;
            targets.extend(file.iter().cloned().map(Target::File));
            let mut session = ReviewSession::open(store(&cli)?)?;
            let receipt = session.submit(chat, targets, &Dispatcher::default())?;
            writeln!(out, "submitted chat {} to {}", receipt.chat_label, receipt.targets.join(", "))?;
            writeln!(out, "sha256 {} ({} bytes)", receipt.sha256, receipt.bytes)?;
        }
        Command::Serve { port, target } => {
            let session = ReviewSession::open(store(&cli)?)?;
            let importer = Importer::new(Arc::new(pipeline(cli.offline)?));
            let state = AppState::new(session, importer, Dispatcher::default(), parse_targets(target)?);
            let runtime = tokio::runtime::Runtime::new()?;
            // `state` outlives the runtime: its blocking HTTP clients must not
            // be dropped on an async thread.
            runtime.block_on(async {
                let listener = http::bind(*port).await.with_context(|| format!("binding 127.0.0.1:{port}"))?;
                writeln!(out, "listening on http://{}", listener.local_addr()?)?;
                out.flush()?;
                http::serve(listener, state.clone()).await?;
                anyhow::Ok(())
            })?;
            drop(runtime);
            drop(state);
        }
        Command::Analyze { dir, json } => {
            let dataset = Dataset::load(dir)?;
            let report = DatasetReport::build(&dataset);
            if let Some(path) = json {
                std::fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            out.write_all(report.render_text().as_bytes())?;
        }
    }
    Ok(())
}
