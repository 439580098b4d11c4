//! `cclab`: run the comparison-geometry checks and write JSON/CSV reports.
//!
//! Exit status: 0 when every check passes, 1 when one fails (or a numerical
//! error aborts the run), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod report;

use report::Report;

#[derive(Debug, Parser, Serialize)]
#[command(name = "cclab", version, about = "Numerical checks of sub-Riemannian comparison theorems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// `hopf:k=..,m=..,n=..`, `base:k=..,n=..` or `heisenberg`.
    #[arg(long, global = true, default_value = "hopf:k=1,m=1,n=1")]
    manifold: String,

    /// Sample count (meaning depends on the subcommand).
    #[arg(long, global = true)]
    samples: Option<usize>,

    #[arg(long, global = true, env = "CCLAB_SEED", default_value_t = 7)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,

    /// Worker threads (0 = available parallelism).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Override the tolerance of the primary checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiccatiKind {
    Full,
    Holomorphic,
    Trace,
    Orbit,
    Symplectic,
    SymplecticBlock,
    SymplecticTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterKind {
    Holomorphic,
    Trace,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
enum Command {
    /// Contact-metric identity suite (samples default 200).
    Identities {
        /// Identity id or family prefix (repeatable; default all).
        #[arg(long = "select")]
        select: Vec<String>,
    },
    /// Curvature-hypothesis margins (samples default 200).
    Hypotheses {
        #[arg(long, default_value_t = 0.0)]
        k1: f64,
        #[arg(long, default_value_t = 0.0)]
        k2: f64,
    },
    /// Integrate one geodesic and tabulate it.
    Geodesic {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        t_max: f64,
        /// Start point, comma separated (default: the base point).
        #[arg(long)]
        point: Option<String>,
        /// Initial direction, comma separated (projected and normalized).
        #[arg(long)]
        direction: Option<String>,
        /// Table rows.
        #[arg(long, default_value_t = 101)]
        rows: usize,
    },
    /// Integrate a Riccati comparison equation along one geodesic.
    Riccati {
        #[arg(long, value_enum, default_value_t = RiccatiKind::Holomorphic)]
        mode: RiccatiKind,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
        /// Integration horizon (default: past the model blow-up, 20 otherwise).
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        rows: usize,
    },
    /// Riccati blow-up versus the diameter bound (samples default 8).
    Diameter {
        #[arg(long, value_enum, default_value_t = DiameterKind::Holomorphic)]
        mode: DiameterKind,
        /// Random point pairs for the empirical distance maximum.
        #[arg(long, default_value_t = 2)]
        pairs: usize,
    },
    /// Tube volumes around a closed Reeb orbit (samples = Monte-Carlo points, default 2000).
    Tube {
        #[arg(long, default_value_t = 0.1)]
        t_min: f64,
        #[arg(long, default_value_t = std::f64::consts::PI - 0.1)]
        t_max: f64,
        /// Number of radii.
        #[arg(long, default_value_t = 30)]
        grid: usize,
        /// Initial directions on the unit sphere.
        #[arg(long, default_value_t = 32)]
        angular: usize,
        #[arg(long, default_value_t = 64)]
        pieces: usize,
    },
    /// Focal-set structure at distance π/k₁ (samples default 50).
    Equality {
        /// Default: the measured holomorphic constant.
        #[arg(long)]
        k1: Option<f64>,
    },
    /// Conjugate times on CP^n (samples default 8).
    Symplectic,
}

/// A usage error: one line naming the offending flag.
#[derive(Debug)]
pub struct Usage(pub String);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("usage error").trim();
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(report) => finish(&cli, &report),
        Err(commands::Failure::Usage(Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn finish(cli: &Cli, report: &Report) -> ExitCode {
    let written = match cli.output {
        Format::Json => report.write_json(cli.out.as_deref()),
        Format::Csv => report.write_csv(cli.out.as_deref()),
    };
    if let Err(e) = written {
        eprintln!("error: --out: {e}");
        return ExitCode::from(2);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
