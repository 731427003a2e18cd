use clap::{Parser, ValueEnum};
use mssflow::config::{Mode, RunConfig};
use mssflow::driver::{self, RunOptions, EXIT_CONFIG};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Solve,
    Check,
    Density,
    Exterior,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Solve => Mode::Solve,
            Command::Check => Mode::CheckHypothesis,
            Command::Density => Mode::DensityOracle,
            Command::Exterior => Mode::Exterior,
        }
    }
}

/// Mean curvature flow solver for the minimal surface system.
///
/// Exit codes: 0 ok, 1 configuration error, 2 hypothesis failed,
/// 3 blow-up, 4 step limit, 5 invariant or oracle violation,
/// 6 exterior shells disagree more under refinement.
#[derive(Debug, Parser)]
#[command(name = "mssflow", version)]
struct Cli {
    /// Run mode; overrides `mode` in the configuration file.
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Flow even if the hypothesis check fails.
    #[arg(long)]
    force: bool,
    /// Output directory; overrides `output` in the configuration file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("MSSFLOW_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(format!("MSSFLOW_THREADS must be a positive integer, got {s:?}")),
        },
    }
}

fn main() -> ExitCode {
    // clap's own usage-error code 2 would collide with the hypothesis exit
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let fail = |msg: String| {
        eprintln!("mssflow: {msg}");
        ExitCode::from(EXIT_CONFIG as u8)
    };
    match threads_from_env() {
        Ok(Some(k)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                return fail(e.to_string());
            }
        }
        Ok(None) => {}
        Err(e) => return fail(e),
    }
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    cfg.mode = cli.command.mode();
    if let Err(e) = cfg.validate() {
        return fail(e.to_string());
    }
    let opts = RunOptions {
        force: cli.force,
        out: cli.out,
    };
    match driver::run(&cfg, &opts) {
        Ok(report) => {
            println!("{}", report.summary);
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("mssflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
