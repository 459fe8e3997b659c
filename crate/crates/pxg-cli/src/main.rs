//! `pxg`: configuration-driven front end for forbidden-region graphs.
//! Subcommands sample point clouds, build graphs, run Monte Carlo
//! experiments, and render diagnostic plots. Exit codes: 0 success,
//! 2 configuration error, 3 I/O error, 4 internal error.

mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pxg_core::PxgError;

#[derive(Parser)]
#[command(name = "pxg", version, about = "Forbidden-region graph toolkit")]
pub(crate) struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub(crate) config: Option<PathBuf>,
    /// Output directory; defaults to $PXG_OUT_DIR, then the working directory.
    #[arg(long, global = true)]
    pub(crate) out_dir: Option<PathBuf>,
    /// Master seed, overriding the seeds in the config.
    #[arg(long, global = true)]
    pub(crate) seed: Option<u64>,
    /// Worker threads (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    pub(crate) threads: usize,
    #[command(subcommand)]
    pub(crate) command: Command,
}

#[derive(Subcommand)]
pub(crate) enum Command {
    /// Sample a point cloud per the [sample] block and write it out.
    Sample,
    /// Build the graph for a points file (or a fresh sample) and emit
    /// an edge CSV plus an {"n","edges","L"} stats line on stdout.
    Build {
        /// Points file, CSV or binary; omitted = sample per config.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Run the Monte Carlo experiment named by the subcommand.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCmd,
    },
    /// Render an SVG from an experiment summary JSON.
    Plot {
        /// Summary JSON produced by `experiment`.
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Output SVG path; default <out-dir>/<stem>_<kind>.svg.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Clone, Copy)]
pub(crate) enum ExperimentCmd {
    /// Variance growth of the edge functional across the t grid.
    Variance,
    /// Normal-approximation distances of the standardized functional.
    Clt,
    /// Survival curves of the stabilization-radius estimate.
    Tails,
    /// Distribution of the radius estimate at a fixed base set.
    Stabilize,
}

#[derive(ValueEnum, Clone, Copy)]
pub(crate) enum PlotKind {
    /// log-log series (variance, distances) against t.
    Loglog,
    /// One survival polyline per t.
    Survival,
}

fn exit_for(err: &PxgError) -> u8 {
    match err {
        PxgError::Config(_) => 2,
        PxgError::Io(_) | PxgError::Format(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        let built = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
        if let Err(e) = built {
            eprintln!("pxg: thread pool: {e}");
            return ExitCode::from(4);
        }
    }
    match run::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pxg: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
