use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dixit_core::tournament::{Tournament, TournamentConfig};
use dixit_core::transcript::Transcript;
use dixit_server::ServerConfig;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "dixit", version, about = "Dixit self-play tournaments, transcript replay and the game server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded tournament and print the report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `games` in the config.
        #[arg(long)]
        games: Option<usize>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for per-game transcripts and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Play games one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Replay a transcript and check its recorded scores.
    Replay { transcript: PathBuf },
    /// Serve lobbies and live games.
    Serve {
        /// Defaults to $DIXIT_SERVER_CONFIG, then ./server.toml.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn simulate(
    config: PathBuf,
    games: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    sequential: bool,
) -> anyhow::Result<()> {
    let mut cfg = TournamentConfig::load(&config)?;
    if let Some(g) = games {
        cfg.games = g;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if sequential {
        cfg.execution = dixit_core::Execution::Sequential;
    }
    let outcome = Tournament::new(cfg)?.run(out.as_deref())?;
    print!("{}", outcome.report);
    if let Some(dir) = out {
        println!("wrote {} transcripts and report.json to {}", outcome.transcripts.len(), dir.display());
    }
    Ok(())
}

fn replay(path: PathBuf) -> anyhow::Result<()> {
    let transcript = Transcript::load(&path)?;
    let state = transcript.replay()?;
    println!(
        "{}: {} rounds replayed, final scores {:?}, winners {:?}",
        path.display(),
        state.round_number(),
        state.scores(),
        state.winners()
    );
    Ok(())
}

fn serve(config: Option<PathBuf>) -> anyhow::Result<()> {
    let path = ServerConfig::resolve_path(config.as_deref());
    let cfg = ServerConfig::load(&path)?;
    let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    runtime.block_on(dixit_server::transport::serve(cfg))?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            games,
            seed,
            out,
            sequential,
        } => simulate(config, games, seed, out, sequential),
        Command::Replay { transcript } => replay(transcript),
        Command::Serve { config } => serve(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
