//! `linkage`: analyses of planar linkage files.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input error.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "linkage", version, about = "Nambu vector fields on planar linkage configuration spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Linkage JSON file.
    input: PathBuf,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct FieldChoice {
    /// Use the lifted field of this decomposition piece.
    #[arg(long)]
    piece: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Counts, pinning, dimension, redundant bars and decomposition type.
    Describe {
        #[command(flatten)]
        common: Common,
    },
    /// Find a realization.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a Nambu field at a realization.
    Field {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        choice: FieldChoice,
    },
    /// Integrate a field and write the trajectory as CSV.
    Flow {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        choice: FieldChoice,
        #[arg(long, default_value_t = 1.0, value_parser = finite)]
        t: f64,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        dt: f64,
    },
    /// Commutation defects of the lifted fields of a decomposition.
    Commute {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1, value_parser = finite)]
        s: f64,
        #[arg(long, default_value_t = 0.1, value_parser = finite)]
        t: f64,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        dt: f64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        starts: u64,
        #[arg(long, default_value_t = 1e-6, value_parser = positive)]
        tol: f64,
    },
    /// Drift of the marked-diagonal first integrals along each field.
    Integrals {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0, value_parser = finite)]
        t: f64,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        dt: f64,
        #[arg(long, default_value_t = 1e-8, value_parser = positive)]
        tol: f64,
    },
    /// Critical values of a marked diagonal's length.
    Critical {
        #[command(flatten)]
        common: Common,
        /// Index of the marked diagonal.
        #[arg(long, default_value_t = 0)]
        diagonal: usize,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        starts: u64,
        #[arg(long, default_value_t = 1e-5, value_parser = positive)]
        tol: f64,
    },
    /// Draw a realization as SVG.
    Svg {
        #[command(flatten)]
        common: Common,
    },
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Describe { common } => commands::describe(&common),
        Command::Solve { common } => commands::solve(&common),
        Command::Field { common, choice } => commands::field(&common, choice.piece),
        Command::Flow { common, choice, t, dt } => commands::flow(&common, choice.piece, t, dt),
        Command::Commute {
            common,
            s,
            t,
            dt,
            starts,
            tol,
        } => commands::commute(&common, s, t, dt, starts as usize, tol),
        Command::Integrals { common, t, dt, tol } => commands::integrals(&common, t, dt, tol),
        Command::Critical {
            common,
            diagonal,
            starts,
            tol,
        } => commands::critical(&common, diagonal, starts as usize, tol),
        Command::Svg { common } => commands::svg(&common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
