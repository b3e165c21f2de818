//! Conditional variational autoencoder over voxel designs.
//!
//! Two conditioning modes share one architecture skeleton. The deep-input
//! mode routes each category of the nine-entry condition vector through its
//! own small MLP and splices the concatenated embeddings into both the
//! encoder (before the Gaussian heads) and the decoder (alongside the
//! latent code). The fully-connected baseline skips the branches and
//! appends the raw conditions to the flattened voxel input and to the
//! latent code instead.

mod config;
mod data;
mod metrics;
mod model;
mod ops;
mod train;

pub use config::{DcvaeConfig, Mode, DEFAULT_BRANCH_WIDTHS, DEFAULT_PARTITION};
pub use data::{load_training_set, split_ids, TrainExample};
pub use metrics::{
    abs_design_error, condition_influence, interface_retention, mean_misrepresented,
};
pub use model::{load_model, save_model, DcvaeModel, ModelGrads};
// Re-exported so callers can match the network layer inside `DcvaeError::Nn`.
pub use nn_core::NnError;
pub use ops::LossParts;
pub use train::{
    read_history_csv, read_latent_table, train, train_model, write_history_csv,
    write_latent_table, EpochStats, LatentRow, TrainResult,
};

use std::fmt;

#[derive(Debug)]
pub enum DcvaeError {
    /// Configuration rejected before any allocation.
    BadConfig(String),
    /// Runtime input (grid, conditions, latent code) malformed.
    BadInput(String),
    /// Loss became non-finite; carries the last model state that completed
    /// an epoch cleanly.
    TrainingDiverged { epoch: usize, last_good: Box<DcvaeModel> },
    /// Artifact on disk failed validation.
    Format(String),
    Nn(nn_core::NnError),
    Sim(surrogate_sim::SimError),
    Gen(design_gen::GenError),
    Voxel(voxel_core::VoxelError),
    Json(serde_json::Error),
    Io(std::io::Error),
}

impl fmt::Display for DcvaeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DcvaeError::BadConfig(msg) => write!(f, "bad model config: {msg}"),
            DcvaeError::BadInput(msg) => write!(f, "bad input: {msg}"),
            DcvaeError::TrainingDiverged { epoch, .. } => {
                write!(f, "training loss became non-finite during epoch {epoch}")
            }
            DcvaeError::Format(msg) => write!(f, "malformed artifact: {msg}"),
            DcvaeError::Nn(e) => write!(f, "network error: {e}"),
            DcvaeError::Sim(e) => write!(f, "label error: {e}"),
            DcvaeError::Gen(e) => write!(f, "dataset error: {e}"),
            DcvaeError::Voxel(e) => write!(f, "voxel error: {e}"),
            DcvaeError::Json(e) => write!(f, "json error: {e}"),
            DcvaeError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for DcvaeError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DcvaeError::Nn(e) => Some(e),
            DcvaeError::Sim(e) => Some(e),
            DcvaeError::Gen(e) => Some(e),
            DcvaeError::Voxel(e) => Some(e),
            DcvaeError::Json(e) => Some(e),
            DcvaeError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<nn_core::NnError> for DcvaeError {
    fn from(e: nn_core::NnError) -> Self {
        DcvaeError::Nn(e)
    }
}

impl From<surrogate_sim::SimError> for DcvaeError {
    fn from(e: surrogate_sim::SimError) -> Self {
        DcvaeError::Sim(e)
    }
}

impl From<design_gen::GenError> for DcvaeError {
    fn from(e: design_gen::GenError) -> Self {
        DcvaeError::Gen(e)
    }
}

impl From<voxel_core::VoxelError> for DcvaeError {
    fn from(e: voxel_core::VoxelError) -> Self {
        DcvaeError::Voxel(e)
    }
}

impl From<serde_json::Error> for DcvaeError {
    fn from(e: serde_json::Error) -> Self {
        DcvaeError::Json(e)
    }
}

impl From<std::io::Error> for DcvaeError {
    fn from(e: std::io::Error) -> Self {
        DcvaeError::Io(e)
    }
}
