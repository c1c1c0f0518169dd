use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod advantage;
mod curriculum;
mod geneval;
mod io;
mod score;
mod stratify;
mod validate;

use temporal_reward::{EngineConfig, Phase, Stage};

#[derive(Parser)]
#[command(name = "treward", version, about = "Score temporal-reasoning rollouts and audit datasets")]
struct Cli {
    /// TOML file overriding engine defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Suppress the human summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score responses against records (JSONL in, JSONL out).
    Score(score::ScoreArgs),
    /// Group-relative advantages over scored rows.
    Advantage(advantage::AdvantageArgs),
    /// Assign easy / normal-hard difficulty from baseline inference errors.
    Stratify(stratify::StratifyArgs),
    /// Show the decay-coefficient schedule.
    Curriculum(curriculum::CurriculumArgs),
    /// AvgMaxSim of generated news against real news per month.
    Geneval(geneval::GenevalArgs),
    /// Check a dataset file and print its manifest.
    Validate(validate::ValidateArgs),
}

/// Shared output switch.
#[derive(Args, Clone)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
pub struct ContextArgs {
    /// Training stage; must agree with each record's task.
    #[arg(long)]
    stage: Option<Stage>,
    /// Curriculum phase (p1, p2, p3, eval).
    #[arg(long, default_value = "eval")]
    phase: Phase,
    /// Step within the phase.
    #[arg(long, default_value_t = 0)]
    step: u32,
}

pub struct Ctx {
    pub config: EngineConfig,
    pub quiet: bool,
}

impl Ctx {
    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Exit status for runs that completed but left some rows unprocessed.
pub const PARTIAL: u8 = 2;

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<EngineConfig> {
    let config: EngineConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", p.display()))?
        }
        None => EngineConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = load_config(cli.config.as_ref())?;
    eprintln!("config sha256 {}", config.config_hash());
    let ctx = Ctx {
        config,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Score(a) => score::run(&ctx, a),
        Command::Advantage(a) => advantage::run(&ctx, a),
        Command::Stratify(a) => stratify::run(&ctx, a),
        Command::Curriculum(a) => curriculum::run(&ctx, a),
        Command::Geneval(a) => geneval::run(&ctx, a),
        Command::Validate(a) => validate::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
