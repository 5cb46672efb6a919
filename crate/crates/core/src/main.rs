use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use laserlab::cli::{emit_report, exit_code, parse_config, run_command, summary_lines, Command, Overrides, RunError};

#[derive(Parser)]
#[command(name = "laserlab", version, about = "Seeded simulations of phase-mixed laser light")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Phase-averaged coherent state vs Poisson mixture, packet correlation,
    /// Fock vs Gaussian log-negativity
    IdentityCheck(Common),
    /// Relative-phase collapse when two independent beams interfere
    Molmer(Common),
    /// Phase locking across packets, against independent-phase controls
    PhaseLock(Common),
    /// Phase-averaged two-mode squeezed light is separable
    Separability(Common),
    /// Entanglement restored by measuring the local oscillator
    Distill(Common),
    /// Coherent-state teleportation with laser-derived phase references
    Teleport(Common),
}

#[derive(Args)]
struct Common {
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the JSON report and CSV traces
    #[arg(long, default_value = "laserlab-out")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    /// Fock truncation
    #[arg(long)]
    dim: Option<usize>,
    /// Override any config key, e.g. `--set r=0.5`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Use the small CI preset
    #[arg(long)]
    smoke: bool,
}

fn run(cmd: Command, c: Common) -> Result<i32, RunError> {
    let ov = Overrides {
        seed: c.seed,
        config: c.config,
        out_dir: Some(c.out.clone()),
        trials: c.trials,
        dim: c.dim,
        set: c.set,
        smoke: c.smoke,
    };
    let cfg = parse_config(cmd, &ov)?;
    let report = run_command(&cfg)?;
    for line in summary_lines(&report) {
        eprintln!("{line}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for path in emit_report(&report, &c.out)? {
        println!("{}", path.display());
    }
    Ok(exit_code(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::IdentityCheck(c) => (Command::IdentityCheck, c),
        Sub::Molmer(c) => (Command::Molmer, c),
        Sub::PhaseLock(c) => (Command::PhaseLock, c),
        Sub::Separability(c) => (Command::Separability, c),
        Sub::Distill(c) => (Command::Distill, c),
        Sub::Teleport(c) => (Command::Teleport, c),
    };
    let code = match run(cmd, common) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
