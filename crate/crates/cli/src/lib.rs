//! Command-line toolkit binding the rasterization library into a usable
//! whole: `rasterize` (mask export), `eval raster` / `eval chamfer`
//! (AP reports), and `fit` (mask-driven point optimization).
//!
//! All outputs are deterministic for identical inputs, configuration and
//! seed, regardless of worker count: floats are rounded to 9 significant
//! digits, JSON key order is fixed, and parallel work merges in a fixed
//! order.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod scene;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use maprast::metrics::MetricKind;

use crate::commands::fit::TargetMode;
use crate::commands::rasterize::RenderMode;
use crate::config::ToolConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "maprast",
    version,
    about = "Rasterization toolkit for vectorized map elements"
)]
struct Cli {
    /// Configuration file (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = logical CPU count); overrides the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Soft,
    Hard,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render each element of a scene into PGM (soft) or PBM (hard) masks.
    Rasterize {
        /// Scene JSON file.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth.
    Eval {
        #[command(subcommand)]
        metric: EvalCommand,
    },
    /// Fit an element's control points to a target mask.
    Fit {
        /// Scene file holding exactly the target element.
        #[arg(long)]
        target: PathBuf,
        /// Scene file holding exactly the initial element.
        #[arg(long)]
        init: PathBuf,
        /// Output path for the fitted element (scene JSON).
        #[arg(long)]
        out: PathBuf,
        /// Loss-trace CSV path (defaults to `<out>.trace.csv`).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Directory for per-iteration PGM frames.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Render the target softly (default) or as a hard mask.
        #[arg(long, value_enum, default_value = "soft")]
        target_mode: ModeArg,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Prediction scene files (repeatable).
    #[arg(long = "pred", required = true)]
    preds: Vec<PathBuf>,
    /// Ground-truth scene files (repeatable).
    #[arg(long = "gt", required = true)]
    gts: Vec<PathBuf>,
    /// Report JSON output path.
    #[arg(long)]
    out: PathBuf,
    /// PR-curve CSV path (defaults to `<out stem>.pr.csv`).
    #[arg(long)]
    pr_csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// IoU-of-rasterization average precision.
    Raster(EvalArgs),
    /// Chamfer-distance average precision baseline.
    Chamfer(EvalArgs),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = ToolConfig::load(cli.config.as_deref())?;
    let workers = cli.workers.unwrap_or(cfg.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::runtime(e.to_string()))?;

    pool.install(|| match &cli.command {
        Command::Rasterize { input, mode, out } => {
            let mode = match mode {
                ModeArg::Soft => RenderMode::Soft,
                ModeArg::Hard => RenderMode::Hard,
            };
            commands::rasterize::run(input, &cfg, mode, out)
        }
        Command::Eval { metric } => {
            let (kind, args) = match metric {
                EvalCommand::Raster(a) => (MetricKind::Raster, a),
                EvalCommand::Chamfer(a) => (MetricKind::Chamfer, a),
            };
            commands::eval::run(
                kind,
                &args.preds,
                &args.gts,
                &cfg,
                &args.out,
                args.pr_csv.as_deref(),
            )
        }
        Command::Fit {
            target,
            init,
            out,
            trace,
            frames,
            target_mode,
        } => {
            let mode = match target_mode {
                ModeArg::Soft => TargetMode::Soft,
                ModeArg::Hard => TargetMode::Hard,
            };
            commands::fit::run(
                target,
                init,
                &cfg,
                out,
                trace.as_deref(),
                frames.as_deref(),
                mode,
            )
        }
    })
}

/// Parses and runs a full invocation, returning the process exit code
/// (0 success, 1 usage, 2 validation, 3 runtime).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
