use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dnls_cli::config::Kind;
use dnls_cli::{configure_threads, load_config, run, sweep, CliError, GridSpec};

#[derive(Parser)]
#[command(name = "dnls", version, about = "Damped driven discrete NLS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a trajectory and record diagnostics.
    Simulate(RunArgs),
    /// Solve for a standing-wave profile.
    StandingWave(RunArgs),
    /// Probe the fixed-point map on a ball.
    ContractionProbe(RunArgs),
    /// Check the mountain-pass rim and ray.
    GeometryCheck(RunArgs),
    /// Audit tail decay against the asymptotic bound.
    TailAudit(RunArgs),
    /// Compare truncated boxes against a reference box.
    TruncationSweep(RunArgs),
    /// Audit boundedness in an exponentially weighted space.
    WeightAudit(RunArgs),
    /// Run a grid of experiments into one CSV.
    Sweep {
        /// Grid spec (JSON) with `base` and `axes`.
        #[arg(long)]
        grid: PathBuf,
        /// Overrides the base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
    },
}

fn run_kind(kind: Kind, args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(&args.config, args.seed, args.out.as_deref())?;
    if config.kind != kind {
        return Err(CliError::Config(format!(
            "config kind is {} but the subcommand runs {}",
            config.kind.name(),
            kind.name()
        )));
    }
    let outcome = run(&config)?;
    if let Some(err) = outcome.report.get("error").and_then(|e| e.as_str()) {
        eprintln!("{err}");
    }
    println!(
        "{}: {:?} ({})",
        kind.name(),
        outcome.status,
        outcome.artifacts.report_json.display()
    );
    Ok(outcome.exit_code())
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (Kind::Simulate, a),
        Command::StandingWave(a) => (Kind::StandingWave, a),
        Command::ContractionProbe(a) => (Kind::ContractionProbe, a),
        Command::GeometryCheck(a) => (Kind::GeometryCheck, a),
        Command::TailAudit(a) => (Kind::TailAudit, a),
        Command::TruncationSweep(a) => (Kind::TruncationSweep, a),
        Command::WeightAudit(a) => (Kind::WeightAudit, a),
        Command::Sweep { grid, seed, out } => {
            let text = std::fs::read_to_string(grid).map_err(|e| CliError::io(grid, e))?;
            let mut spec = GridSpec::from_json_str(&text)?;
            if let Some(seed) = seed {
                spec.base.insert("seed".into(), (*seed).into());
            }
            let outcome = sweep(&spec, out)?;
            println!(
                "sweep: {} points, {} failed ({})",
                outcome.rows,
                outcome.failed,
                outcome.csv_path.display()
            );
            return Ok(outcome.exit_code());
        }
    };
    run_kind(kind, args)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
