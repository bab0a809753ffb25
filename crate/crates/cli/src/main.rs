use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use laminate_hum_cli::{cmd_control, cmd_observability, cmd_simulate, cmd_sweep, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "laminate-hum", version, about = "Boundary null control of laminated beams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free or damped trajectory with energy bookkeeping.
    Simulate(Common),
    /// Observability constant of the filtered problem.
    Observability(Common),
    /// Null control by the Hilbert uniqueness method.
    Control(Common),
    /// Control runs over a Cartesian grid of sweep_* ranges.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    /// Horizon T.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Switch on the structural damping (needs beta > 0).
    #[arg(long)]
    damped: bool,
}

fn run(cmd: Command) -> Result<(), CliError> {
    let (kind, common) = match cmd {
        Command::Simulate(c) => ("simulate", c),
        Command::Observability(c) => ("observability", c),
        Command::Control(c) => ("control", c),
        Command::Sweep(c) => ("sweep", c),
    };
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        n: common.n,
        nt: common.nt,
        horizon: common.horizon,
        m: common.m,
        tol: common.tol,
        max_iter: common.max_iter,
        damped: common.damped,
    });
    let resolved = cfg.resolve()?;
    let outcome = match kind {
        "simulate" => cmd_simulate(&resolved, &common.out)?,
        "observability" => cmd_observability(&resolved, &common.out)?,
        "control" => cmd_control(&resolved, &common.out)?,
        _ => {
            let (outcome, rows) = cmd_sweep(&resolved, &common.out)?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} sweep cells failed; see sweep.csv", rows.len());
            }
            outcome
        }
    };
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
