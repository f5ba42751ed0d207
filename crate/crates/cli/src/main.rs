//! `ebingeom`: distances, geodesics and isometries of discretized metric
//! fields, plus the invariant suites that check them.

mod commands;
mod oracle;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{Ctx, Failure, Format};
use suites::Suite;

#[derive(Parser)]
#[command(name = "ebingeom", version, about = "Geometry of metric fields under the L2 (Ebin) distance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two field files, with per-vertex contributions.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Field at parameter t on the geodesic from a to b, as JSON on stdout.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(allow_negative_numbers = true)]
        t: f64,
    },
    /// Apply an isometry file to a field file.
    Apply { field: PathBuf, isometry: PathBuf },
    /// Run invariant suites; exits 1 if any check fails.
    Invariants {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, env = "EBINGEOM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Grid-refinement table for a built-in analytic pair (constant, sin).
    Converge {
        pair: String,
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        levels: i64,
    },
    /// Distances from (1/j)·I to the cone tip, next to the closed form.
    DemoIncomplete {
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
        steps: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=8))]
        n: u64,
    },
}

fn run(command: Command, ctx: &mut Ctx) -> Result<(), Failure> {
    match command {
        Command::Dist { a, b, format } => commands::dist(ctx, &a, &b, format),
        Command::Geodesic { a, b, t } => commands::geodesic(ctx, &a, &b, t),
        Command::Apply { field, isometry } => commands::apply(ctx, &field, &isometry),
        Command::Invariants { suite, seed, format } => commands::invariants(ctx, suite, seed, format),
        Command::Converge { pair, levels } => commands::converge(ctx, &pair, levels.max(0) as usize),
        Command::DemoIncomplete { steps, n } => commands::demo_incomplete(ctx, steps as usize, n as usize),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let command = std::iter::once("ebingeom".to_string())
        .chain(std::env::args().skip(1))
        .collect::<Vec<_>>()
        .join(" ");
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let mut ctx = Ctx { command, out: &mut lock };
    let result = run(cli.command, &mut ctx);
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
