//! Command-line front end. Every command reads at most one JSON document
//! and writes one document to standard output.
//!
//! Exit status: 0 on success, 1 when a check fails or the input violates a
//! mathematical precondition, 2 on malformed input or arguments.

mod commands;
mod config;
mod error;
mod input;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BranchArg, DimArgs, Formula, GeodesicArgs, GromovArgs};
use config::{Config, ConfigFlags, CONFIG_ENV};
use error::CliError;
use output::{Format, Report};

#[derive(Parser)]
#[command(name = "supermoduli", version, about = "Genus-zero super Riemann surface computations")]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    #[command(flatten)]
    config: ConfigFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Superconformal map sending (0, 1_ε, ∞) to three points.
    Solve3pt {
        /// `{"points": [p1, p2, p3], "branch"?: "Plus" | "Minus"}`
        input: PathBuf,
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
    },
    /// Whether a map fixes (0, 1_ε, ∞) → (0, 1_ε', ∞), and how.
    Classify {
        /// `{"map": ..., "epsilon": ..., "epsilon_prime": ...}`
        input: PathBuf,
    },
    /// The pair {ε, −ε} of a triple of points.
    Pseudoinv {
        /// `{"points": [p1, p2, p3]}`
        input: PathBuf,
    },
    /// Moves three special points of a vertex to (0, 1_ε, ∞).
    Normalize {
        /// `{"curve": ..., "vertex": v, "triple": [...], "branch"?: ...}`
        input: PathBuf,
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
    },
    /// Decides whether two nodal curves differ by a reparametrization.
    Equiv {
        /// `{"first": curve, "second": curve}`
        input: PathBuf,
    },
    /// Dimension formulas.
    Dims {
        #[arg(long, value_enum)]
        formula: Formula,
        #[command(flatten)]
        args: DimArgs,
    },
    /// Stable labeled trees.
    Trees {
        #[command(subcommand)]
        command: TreesCommand,
    },
    /// Degree distributions over the vertices of a tree.
    Partitions {
        /// `{"tree": ..., "degree": d}`
        input: PathBuf,
    },
    /// Node matching and stability of a stable-map skeleton.
    CheckMap { input: PathBuf },
    /// Gromov convergence of a sequence of nodal curves.
    CheckGromov(GromovArgs),
    /// Integrates a geodesic over [−T, T].
    Geodesic(GeodesicArgs),
    /// Standard rank form of an even supermatrix.
    RankForm { input: PathBuf },
    /// Runs the built-in example cases.
    Selftest,
}

#[derive(Subcommand)]
enum TreesCommand {
    /// All stable trees with k labels, up to isomorphism.
    Enumerate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        max_vertices: Option<usize>,
    },
    /// Collapses unstable vertices.
    Stabilize {
        /// `{"tree": ..., "extra_special"?: {"v": count}}`
        input: PathBuf,
    },
    /// Canonical form of a tree.
    Canon { input: PathBuf },
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let cfg = Config::load(&cli.config, env.as_deref())?;
    cfg.apply();
    match &cli.command {
        Command::Solve3pt { input, branch } => commands::solve3pt(input, *branch),
        Command::Classify { input } => commands::classify(input, &cfg),
        Command::Pseudoinv { input } => commands::pseudoinv(input),
        Command::Normalize { input, branch } => commands::normalize(input, *branch),
        Command::Equiv { input } => commands::equiv(input),
        Command::Dims { formula, args } => commands::dims(*formula, args),
        Command::Trees { command } => match command {
            TreesCommand::Enumerate { k, max_vertices } => commands::trees_enumerate(*k, *max_vertices),
            TreesCommand::Stabilize { input } => commands::trees_stabilize(input),
            TreesCommand::Canon { input } => commands::trees_canon(input),
        },
        Command::Partitions { input } => commands::partitions(input),
        Command::CheckMap { input } => commands::check_map(input),
        Command::CheckGromov(args) => commands::check_gromov(args, &cfg),
        Command::Geodesic(args) => commands::geodesic(args, &cfg),
        Command::RankForm { input } => commands::rank_form(input),
        Command::Selftest => selftest::report(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli).and_then(|r| r.render(cli.format).map(|text| (text, r.passed))) {
        Ok((text, passed)) => {
            print!("{text}");
            ExitCode::from(if passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
