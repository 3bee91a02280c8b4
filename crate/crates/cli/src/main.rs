//! `incompat`: joint measurability and CHSH violations from the command line.

mod commands;
mod matrix_file;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use incompat_core::jm::MU_SEED;
use incompat_core::measurement::EFFECT_TOL;

use crate::commands::{MultiMode, Settings};
use crate::report::{Exit, Format};

#[derive(Debug, Parser)]
#[command(name = "incompat", version, about = "Joint measurability of quantum measurements and CHSH violations")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Tolerance for validating input effects.
    #[arg(long, global = true, env = "INCOMPAT_TOL_PSD", default_value_t = EFFECT_TOL)]
    tol_psd: f64,

    /// Relative duality-gap target of the SDP solver.
    #[arg(long, global = true, env = "INCOMPAT_TOL_GAP", default_value_t = 1e-8)]
    tol_gap: f64,

    /// Grid intervals of the CHSH angle scan.
    #[arg(long, global = true, env = "INCOMPAT_GRID", default_value_t = 2048)]
    grid: usize,

    /// Decision tolerance: the band around λ₀ = 1 (check-pair, chsh, multi),
    /// the commutator threshold (vn) or the signaling tolerance (nosignal).
    #[arg(long, global = true, env = "INCOMPAT_TOL")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide joint measurability of the effects Q and P.
    CheckPair {
        /// Matrix file, or `-` for standard input.
        file: PathBuf,
        /// Sampled noise effects for the robustness diagnostic (0 skips it).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, env = "INCOMPAT_SEED", default_value_t = MU_SEED)]
        seed: u64,
    },
    /// Maximal CHSH value of the effects Q and P.
    Chsh {
        file: PathBuf,
        /// Write the optimal state and observables to this matrix file.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Reduce the observables A1, A2 to ±1 observables and report their violation.
    Vn { file: PathBuf },
    /// Several measurements: POVMs Q1.., P1.. (nvalued) or effects T1.. (dichotomic).
    Multi {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: MultiMode,
    },
    /// Glue two no-signaling triple distributions into one joint distribution.
    Nosignal { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::Error.into() } else { ExitCode::SUCCESS };
        }
    };
    let settings = Settings {
        tol_psd: cli.tol_psd,
        tol_gap: cli.tol_gap,
        grid: cli.grid,
        tol: cli.tol,
    };
    let result = match &cli.command {
        Command::CheckPair { file, samples, seed } => commands::check_pair(file, &settings, *samples, *seed),
        Command::Chsh { file, witness } => commands::chsh(file, &settings, witness.as_deref()),
        Command::Vn { file } => commands::vn(file, &settings),
        Command::Multi { file, mode } => commands::multi(file, &settings, *mode),
        Command::Nosignal { file } => commands::nosignal(file, &settings),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.render(cli.format));
            if let Some(w) = &outcome.warning {
                eprintln!("{w}");
            }
            outcome.exit.into()
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            Exit::Error.into()
        }
    }
}
