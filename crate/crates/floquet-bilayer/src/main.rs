use clap::{Parser, Subcommand};
use floquet_bilayer::cli;
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact finite-length Floquet solutions of a driven magnetic bilayer.
#[derive(Parser)]
#[command(name = "floquet-bilayer", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the expansion coefficients and write them as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct, then run every verification oracle and write a report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the fields over the configured (z, t) grid as CSV.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify across a range of one scalar parameter, one CSV row per
    /// point.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// One of: omega, J1, U0, b, Omega, alpha_kx, beta_ky.
        #[arg(long)]
        param: String,
        /// lo:hi:steps (inclusive endpoints).
        #[arg(long)]
        range: String,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Solve { config, out } => cli::cmd_solve(&config, out.as_deref()),
        Command::Verify { config, out } => cli::cmd_verify(&config, out.as_deref()),
        Command::Sample { config, out } => cli::cmd_sample(&config, out.as_deref()),
        Command::Sweep {
            config,
            out,
            param,
            range,
        } => match cli::parse_range(&range) {
            Ok(r) => cli::cmd_sweep(&config, out.as_deref(), &param, r),
            Err(e) => {
                eprintln!("error: {e}");
                cli::EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
