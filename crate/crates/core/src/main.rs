use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ci2d_core::cli::{cmd_check, cmd_diagnose, cmd_init, cmd_step, RunConfig};
use ci2d_core::CiError;

#[derive(Parser)]
#[command(name = "ci2d", version, about = "One convex-integration step for 2D hypoviscous Navier-Stokes on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every invariant suite and print a JSON report.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate the initial state.
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Advance a state by one iteration.
    Step {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norms, spectrum and residual of a state.
    Diagnose {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_dir(cfg: &RunConfig, out: Option<PathBuf>) -> Result<PathBuf, CiError> {
    out.or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| CiError::Config("no output directory: pass --out or set \"output\"".into()))
}

fn run(cli: Cli) -> Result<i32, CiError> {
    match cli.command {
        Command::Check { config } => {
            let cfg = RunConfig::load(&config)?;
            let report = cmd_check(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.all_passed() { 0 } else { 1 })
        }
        Command::Init { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = output_dir(&cfg, out)?;
            let s = cmd_init(&cfg, &out)?;
            eprintln!("wrote {} slices to {}", s.axis().len(), out.display());
            Ok(0)
        }
        Command::Step { config, state, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = output_dir(&cfg, out)?;
            let r = cmd_step(&cfg, &state, &out)?;
            eprintln!("wrote q = {} to {}", r.state.q, out.display());
            print!("{}", r.diagnostics.to_csv());
            Ok(0)
        }
        Command::Diagnose { config: _, state, out } => {
            let report = cmd_diagnose(&state, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("CI2D_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
