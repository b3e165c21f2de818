//! Design optimization on top of a trained generator: a feedforward
//! regressor from condition vectors to latent codes, linearly ramped demand
//! schedules bounded by the labeled dataset, decoder sweeps along those
//! schedules, and selection of the design where the material distribution
//! still changes fastest near maximum demanded performance.

mod fnet;
mod schedule;
mod sweep;
mod validate;

pub use fnet::{
    align_pairs, load_fnet, save_fnet, train_fnet, FnetConfig, FnetEpoch, FnetModel, LatentPair,
};
pub use schedule::{build_schedule, default_policies, ConditionSchedule, Policy, LOWER_IS_BETTER};
pub use sweep::{
    generate_sweep, load_sweep, material_change_rate, run_sweep, save_sweep, select_optimum,
    Selection, StoredSweep, SweepResult,
};
pub use validate::{
    load_report, save_report, validate_optimum, ConditionComparison, OptimumReport,
};

use std::fmt;

#[derive(Debug)]
pub enum OptError {
    /// Configuration rejected before any allocation.
    BadConfig(String),
    /// Runtime input (pairs, series, grids) malformed.
    BadInput(String),
    /// Regression loss or a gradient went non-finite; the run aborts.
    TrainingDiverged { epoch: usize },
    /// Artifact on disk failed validation.
    Format(String),
    Nn(nn_core::NnError),
    Sim(surrogate_sim::SimError),
    Dcvae(dcvae::DcvaeError),
    Voxel(voxel_core::VoxelError),
    Json(serde_json::Error),
    Io(std::io::Error),
}

impl fmt::Display for OptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptError::BadConfig(msg) => write!(f, "bad optimizer config: {msg}"),
            OptError::BadInput(msg) => write!(f, "bad input: {msg}"),
            OptError::TrainingDiverged { epoch } => {
                write!(f, "regression loss became non-finite during epoch {epoch}")
            }
            OptError::Format(msg) => write!(f, "malformed artifact: {msg}"),
            OptError::Nn(e) => write!(f, "network error: {e}"),
            OptError::Sim(e) => write!(f, "label error: {e}"),
            OptError::Dcvae(e) => write!(f, "generator error: {e}"),
            OptError::Voxel(e) => write!(f, "voxel error: {e}"),
            OptError::Json(e) => write!(f, "json error: {e}"),
            OptError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for OptError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            OptError::Nn(e) => Some(e),
            OptError::Sim(e) => Some(e),
            OptError::Dcvae(e) => Some(e),
            OptError::Voxel(e) => Some(e),
            OptError::Json(e) => Some(e),
            OptError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<nn_core::NnError> for OptError {
    fn from(e: nn_core::NnError) -> Self {
        OptError::Nn(e)
    }
}

impl From<surrogate_sim::SimError> for OptError {
    fn from(e: surrogate_sim::SimError) -> Self {
        OptError::Sim(e)
    }
}

impl From<dcvae::DcvaeError> for OptError {
    fn from(e: dcvae::DcvaeError) -> Self {
        OptError::Dcvae(e)
    }
}

impl From<voxel_core::VoxelError> for OptError {
    fn from(e: voxel_core::VoxelError) -> Self {
        OptError::Voxel(e)
    }
}

impl From<serde_json::Error> for OptError {
    fn from(e: serde_json::Error) -> Self {
        OptError::Json(e)
    }
}

impl From<std::io::Error> for OptError {
    fn from(e: std::io::Error) -> Self {
        OptError::Io(e)
    }
}
