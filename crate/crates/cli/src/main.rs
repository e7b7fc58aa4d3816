//! `selfsim` command-line front end.
//!
//! Exit codes: 0 success / PASS, 1 usage or I/O error, 2 verification FAIL,
//! 3 numerical failure (the library error name is printed).

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::io::{write_out, CliError, CliResult};

#[derive(Parser)]
#[command(name = "selfsim", version, about = "Steady self-similar solutions near a supersonic constant state")]
struct Cli {
    /// Worker threads for residual sampling (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default system file (Euler, gamma 1.4, Mach 2, eps 0.05).
    Init {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the shock and simple-wave curves of one family.
    Curves {
        #[arg(long)]
        system: Option<PathBuf>,
        /// Family number, starting at 1.
        #[arg(long)]
        family: usize,
        /// Parameter range `a:b`.
        #[arg(long, allow_hyphen_values = true)]
        s_range: String,
        #[arg(long, default_value_t = 33)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a forward Riemann problem between two states.
    Solve {
        #[arg(long)]
        system: Option<PathBuf>,
        /// Lower state for x>0 (upper for x<0).
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        halfplane: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak-form, entropy and structure checks; exit 2 on FAIL.
    Verify {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        profile: PathBuf,
        /// Override the halfplane stored in the profile (`x>0` or `x<0`).
        #[arg(long)]
        halfplane: Option<String>,
        /// Number of residual sample pairs.
        #[arg(long)]
        pairs: Option<usize>,
        /// Also write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Per-sector structural verdict; exit 2 on FAIL.
    Classify {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        halfplane: Option<String>,
    },
    /// Build a fixture profile from a named preset.
    Generate {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        preset: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Jump / Lipschitz split, total variation.
    Decompose {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sector intervals, widths and the Mach angle.
    Sectors {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Apply a corruption to a profile.
    Mutate {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        profile: PathBuf,
        /// speed-shift, side-flip, duplicate-wave, rh-violation or adjacent-fans.
        #[arg(long)]
        mutation: String,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Component for rh-violation, starting at 1.
        #[arg(long)]
        component: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a profile on a uniform xi grid as CSV.
    Sample {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        profile: PathBuf,
        /// Range `a:b`; defaults to the profile extent plus a margin.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long, default_value_t = 513)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    use Command::*;
    match cli.command {
        Init { out } => {
            write_out(out.as_deref(), &commands::default_system())?;
            Ok(0)
        }
        Curves { system, family, s_range, n, out } => commands::curves(system.as_deref(), family, &s_range, n, out.as_deref()),
        Solve { system, left, right, halfplane, out } => {
            commands::solve(system.as_deref(), &left, &right, halfplane.as_deref(), out.as_deref())
        }
        Verify { system, profile, halfplane, pairs, report } => {
            commands::verify_cmd(system.as_deref(), &profile, halfplane.as_deref(), pairs, report.as_deref())
        }
        Classify { system, profile, halfplane } => commands::classify(system.as_deref(), &profile, halfplane.as_deref()),
        Generate { system, preset, n, seed, out } => commands::generate(system.as_deref(), &preset, n, seed, out.as_deref()),
        Decompose { system, profile, out } => commands::decompose(system.as_deref(), &profile, out.as_deref()),
        Sectors { system, json } => commands::sectors(system.as_deref(), json),
        Mutate { system, profile, mutation, delta, component, offset, gap, out } => {
            let m = commands::parse_mutation(&mutation, delta, component, offset, gap)?;
            commands::mutate_cmd(system.as_deref(), &profile, m, out.as_deref())
        }
        Sample { system, profile, range, n, out } => {
            commands::sample(system.as_deref(), &profile, range.as_deref(), n, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
