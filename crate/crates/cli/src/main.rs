use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use schwarz_rom::config::{ExperimentConfig, Scale};
use schwarz_rom::pipeline::{Pipeline, PipelineOutput, Stage};

/// Exit code for a config that cannot be read or is invalid.
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "schwarz-rom", version, about = "Schwarz-coupled FOM/ROM/HROM experiments on a 1D bar")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for snapshots, bases, sample sets and CSV reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Stage to run. Later stages read the artifacts of earlier ones from --out.
    #[arg(long, value_enum)]
    stage: Option<StageArg>,

    /// Replace the config's discretization with a preset.
    #[arg(long, global = true, value_enum)]
    scale: Option<ScaleArg>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Every stage in order.
    Run,
    /// Coupled FOM-FOM training run.
    Snapshots,
    /// POD bases from saved snapshots.
    TrainPod,
    /// ECSW sample sets from saved snapshots and bases.
    TrainEcsw,
    /// Coupled runs of every configured variant.
    Couple,
    /// Pareto table, projection errors and summary.
    Report,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum StageArg {
    All,
    Snapshots,
    Pod,
    Ecsw,
    Couple,
    Report,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ScaleArg {
    Paper,
    Desk,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::All => Stage::All,
            StageArg::Snapshots => Stage::Snapshots,
            StageArg::Pod => Stage::Pod,
            StageArg::Ecsw => Stage::Ecsw,
            StageArg::Couple => Stage::Couple,
            StageArg::Report => Stage::Report,
        }
    }
}

impl From<Command> for Stage {
    fn from(c: Command) -> Self {
        match c {
            Command::Run => Stage::All,
            Command::Snapshots => Stage::Snapshots,
            Command::TrainPod => Stage::Pod,
            Command::TrainEcsw => Stage::Ecsw,
            Command::Couple => Stage::Couple,
            Command::Report => Stage::Report,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let path = cli.config.as_ref().ok_or("--config is required")?;
    let cfg = ExperimentConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match cli.scale {
        None => Ok(cfg),
        Some(s) => {
            let scale = match s {
                ScaleArg::Paper => Scale::Paper,
                ScaleArg::Desk => Scale::Desk,
            };
            cfg.with_scale(scale).map_err(|e| e.to_string())
        }
    }
}

fn print_summary(out: &PipelineOutput) {
    if out.records.is_empty() {
        return;
    }
    println!("{:<24} {:>12} {:>12} {:>8} {:>10}", "variant", "mse u (1)", "mse u (2)", "N_S", "cpu [s]");
    for r in &out.records {
        println!(
            "{:<24} {:>12.3e} {:>12.3e} {:>8} {:>10.3}",
            r.label, r.mse[0][0], r.mse[1][0], r.schwarz_iterations, r.cpu_seconds
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    let stage = match (cli.stage, cli.command) {
        (Some(_), Some(_)) => {
            error!("give either --stage or a subcommand, not both");
            return ExitCode::from(2);
        }
        (Some(s), None) => Stage::from(s),
        (None, Some(c)) => Stage::from(c),
        (None, None) => Stage::All,
    };

    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            error!("config: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let pipeline = match Pipeline::new(&cfg, &cli.out) {
        Ok(p) => p,
        Err(e) => {
            error!("{}: {e}", cli.out.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    info!("running stage '{}' into {}", stage.name(), cli.out.display());
    match pipeline.run(stage) {
        Ok(out) => {
            print_summary(&out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
