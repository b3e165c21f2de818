//! `voxelforge` — drives the full design pipeline from the shell: generate
//! a voxel population, label it with the condition evaluators, train the
//! conditional generator, decode a demand schedule, pick and validate the
//! optimum, and mesh any design for printing.
//!
//! Exit codes: 0 on success, 2 for bad inputs or artifacts, 3 when a
//! numerical routine aborted (diverged training, non-finite gradients).

mod commands;
mod config;
mod errors;
mod pca;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{OptimizeArgs, SweepArgs, TrainArgs};
use crate::errors::CliError;

#[derive(Parser)]
#[command(
    name = "voxelforge",
    version,
    about = "Voxel design pipeline: generate, label, train, sweep, optimize, mesh"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Condition branches feed every decoder layer
    DeepInput,
    /// Conditions enter once, concatenated to the latent
    FcBaseline,
}

impl From<ModeArg> for dcvae::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::DeepInput => dcvae::Mode::DeepInput,
            ModeArg::FcBaseline => dcvae::Mode::FcBaseline,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a population of printable voxel designs
    Gen {
        /// Pipeline config (JSON, `dims` required)
        #[arg(long)]
        config: PathBuf,
        /// Number of designs to generate
        #[arg(long)]
        n: usize,
        /// Dataset directory [default: from config paths]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root seed [default: config seed, then VOXELFORGE_SEED, then 42]
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads [default: all cores]
        #[arg(long)]
        jobs: Option<usize>,
    },

    /// Label a dataset with the condition evaluators and write stats
    Label {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory to label
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Label table to write (JSONL)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Normalization stats to write [default: next to the label table]
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Worker threads [default: all cores]
        #[arg(long)]
        jobs: Option<usize>,
    },

    /// Train the conditional generator and the condition-to-latent regressor
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Label table from `label`
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Normalization stats from `label`
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Decoder conditioning wiring
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Model directory to write
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Run one design through the trained model and report the voxel error
    Reconstruct {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model checkpoint (dcvae.nnp)
        #[arg(long)]
        model: PathBuf,
        /// Design grid to reconstruct (.vxg)
        #[arg(long)]
        design: PathBuf,
        /// Dataset directory the design belongs to (for its interface layout)
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Directory for the reconstruction artifacts [default: report only]
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Decode a ramped demand schedule and rank material change rates
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model checkpoint (dcvae.nnp)
        #[arg(long)]
        model: Option<PathBuf>,
        /// Regressor checkpoint (fnet.nnp)
        #[arg(long)]
        fnet: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Schedule rows to decode
        #[arg(long)]
        q: Option<usize>,
        /// Tail fraction searched for the optimum
        #[arg(long)]
        pmin: Option<f64>,
        /// Sweep directory to write
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Select the optimum design from a sweep and validate it
    Optimize {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sweep directory from `sweep`
        #[arg(long)]
        sweep: Option<PathBuf>,
        /// Dataset directory (for the interface layout)
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Raw label table from `label`
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Tail fraction searched for the optimum
        #[arg(long)]
        pmin: Option<f64>,
        /// Output directory [default: the sweep directory]
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Extract a triangle surface from a design grid and write STL
    Mesh {
        /// Design grid (.vxg)
        #[arg(long)]
        grid: PathBuf,
        /// Iso level in (0, 1)
        #[arg(long, default_value_t = 0.5)]
        iso: f64,
        /// STL file to write
        #[arg(long)]
        out: PathBuf,
        /// Also write a Wavefront OBJ copy
        #[arg(long)]
        obj: Option<PathBuf>,
    },

    /// Project per-design latent means to 2-D and write an SVG scatter
    Project {
        /// Latent table from `train` (latents.jsonl)
        #[arg(long)]
        latents: PathBuf,
        /// SVG file to write
        #[arg(long)]
        out: PathBuf,
        /// Color points by labeled performance (needs --stats)
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Gen { config, n, out, seed, jobs } => commands::gen(&config, n, out, seed, jobs),
        Cmd::Label { config, dataset, out, stats, jobs } => {
            commands::label(config.as_deref(), dataset, out, stats, jobs)
        }
        Cmd::Train { config, dataset, labels, stats, mode, out, seed } => {
            commands::train_cmd(TrainArgs {
                config,
                dataset,
                labels,
                stats,
                mode: mode.map(Into::into),
                out,
                seed,
            })
        }
        Cmd::Reconstruct { config, model, design, dataset, stats, out } => {
            commands::reconstruct(config.as_deref(), &model, &design, dataset, stats, out)
        }
        Cmd::Sweep { config, model, fnet, stats, q, pmin, out } => {
            commands::sweep(SweepArgs { config, model, fnet, stats, q, pmin, out })
        }
        Cmd::Optimize { config, sweep, dataset, labels, pmin, out } => {
            commands::optimize(OptimizeArgs { config, sweep, dataset, labels, pmin, out })
        }
        Cmd::Mesh { grid, iso, out, obj } => commands::mesh(&grid, iso, &out, obj),
        Cmd::Project { latents, out, labels, stats } => {
            commands::project(&latents, &out, labels, stats)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {}", e.msg);
        std::process::exit(i32::from(e.code));
    }
}
