use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use treegibbs_cli::commands::{self, CommandOutcome};
use treegibbs_cli::output::{emit, Format};
use treegibbs_cli::range::LambdaRange;
use treegibbs_cli::CmdError;
use treegibbs_core::envelope::EnvelopeModel;

/// Solvers for multi-state hard-core models on Cayley trees: fixed-point
/// scans, period-2 bifurcations, path-indexed boundary fields, envelope
/// bounds, and exact small-tree consistency checks.
#[derive(Parser)]
#[command(name = "treegibbs", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundsModel {
    Hinge,
    Pipe,
}

#[derive(Subcommand)]
enum Command {
    /// Count and list translation-invariant fixed points over an activity range.
    TiScan {
        /// Builtin model: wrench, wand, hinge or pipe.
        #[arg(long)]
        model: Option<String>,
        /// JSON graph description as an alternative to --model.
        #[arg(long, value_name = "PATH")]
        graph_json: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Inclusive activity range min:max:steps.
        #[arg(long, value_parser = LambdaRange::from_str)]
        lambda: LambdaRange,
        /// Space the grid logarithmically.
        #[arg(long)]
        log: bool,
        /// Run the pipe uniqueness certificate at every grid point.
        #[arg(long)]
        certify: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Period-2 analysis of the hinge model: fixed point, slope condition, 2-cycle.
    Period2 {
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = LambdaRange::from_str)]
        lambda: LambdaRange,
        #[arg(long)]
        log: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Converged path-split boundary field on V_n for the hinge model at k = 2.
    PathField {
        #[arg(long)]
        lambda: f64,
        /// Path parameter in [0, 1].
        #[arg(long)]
        t: f64,
        /// Depth of the reported tree.
        #[arg(long)]
        n: usize,
        /// Sup-norm convergence tolerance on the log-field.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Override the deepening limit (defaults to the contraction bound).
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact small-tree consistency check and root marginals (JSON report).
    OracleCheck {
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_name = "PATH")]
        graph_json: Option<PathBuf>,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// First boundary-field component (default 1.0).
        #[arg(long)]
        z1: Option<f64>,
        /// Second boundary-field component (default 1.0).
        #[arg(long)]
        z2: Option<f64>,
        /// Deliberately break consistency by this much to exercise the failure path.
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Envelope systems bounding all boundary-field solutions.
    Bounds {
        #[arg(long, value_enum)]
        model: BoundsModel,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_parser = LambdaRange::from_str)]
        lambda: LambdaRange,
        #[arg(long)]
        log: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CmdError> {
    let (outcome, out): (CommandOutcome, Option<PathBuf>) = match cli.command {
        Command::TiScan { model, graph_json, k, lambda, log, certify, format, out } => {
            let (g, label) = commands::resolve_graph(model.as_deref(), graph_json.as_ref())?;
            (commands::ti_scan(&g, &label, k, lambda, log, certify, format)?, out)
        }
        Command::Period2 { k, lambda, log, format, out } => {
            (commands::period2(k, lambda, log, format)?, out)
        }
        Command::PathField { lambda, t, n, tol, max_depth, out } => {
            (commands::path_field(lambda, t, n, tol, max_depth)?, out)
        }
        Command::OracleCheck { model, graph_json, lambda, k, n, z1, z2, perturb, out } => {
            let (g, label) = commands::resolve_graph(model.as_deref(), graph_json.as_ref())?;
            let boundary = match (z1, z2) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(1.0), b.unwrap_or(1.0))),
            };
            (commands::oracle_check(&g, &label, lambda, k, n, boundary, perturb)?, out)
        }
        Command::Bounds { model, k, lambda, log, format, out } => {
            let model = match model {
                BoundsModel::Hinge => EnvelopeModel::Hinge,
                BoundsModel::Pipe => EnvelopeModel::Pipe,
            };
            (commands::bounds(model, k, lambda, log, format)?, out)
        }
    };
    emit(out.as_deref(), &outcome.text)?;
    match outcome.failure {
        Some(failure) => Err(failure),
        None => Ok(()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
