use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod corpus_cmd;
mod eval_cmd;
mod forge;
mod fuse_cmd;
mod run;

use run::Failure;

#[derive(Parser)]
#[command(name = "forgekit", version, about = "Synthetic forgery generation, evaluation and score fusion")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training images from a manifest of real images.
    Forge(forge::ForgeArgs),
    /// Score a detector against manifest labels.
    Eval(eval_cmd::EvalArgs),
    /// Combine per-model score files.
    Fuse(fuse_cmd::FuseArgs),
    /// Manifest statistics and transformations.
    Corpus(corpus_cmd::CorpusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForgeMode {
    Aim,
    AimShadow,
    SelfBlend,
    ParsingBlend,
    ParsingCut,
    Srm,
}

/// Flags shared by every subcommand.
#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Input manifest (JSONL).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Global seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Parameter file, JSON or TOML (by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Forge(args) => forge::run(args),
        Command::Eval(args) => eval_cmd::run(args),
        Command::Fuse(args) => fuse_cmd::run(args),
        Command::Corpus(args) => corpus_cmd::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
