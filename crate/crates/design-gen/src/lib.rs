//! Design-population generation: band-limited gradient noise thresholded
//! into voxel occupancy, mandatory interface stamping, and deterministic
//! repair so every emitted design is a single printable body that air can
//! traverse.

mod dataset;
mod interface;
mod noise;
mod repair;

pub use dataset::{
    generate_dataset, DatasetManifest, ManifestEntry, DESIGNS_SUBDIR, MANIFEST_FILE,
    MANIFEST_VERSION,
};
pub use interface::{sample_design, stamp, InterfaceSpec, Region, RegionKind, VoxelBox};
pub use noise::{fbm3, perlin3, NoiseParams};
pub use repair::repair_connectivity;

use std::fmt;

/// Errors raised by parameter validation, repair, and dataset emission.
#[derive(Debug)]
pub enum GenError {
    /// A noise or generation parameter is outside its legal range.
    BadParams(String),
    /// An interface region violates the grid bounds or overlap rules.
    BadSpec(String),
    /// Mandatory geometry makes the single-body or flow constraint impossible.
    Unsatisfiable(String),
    /// Repair kept cycling between bridging and carving without converging.
    RepairDiverged { rounds: u32 },
    Voxel(voxel_core::VoxelError),
    Json(serde_json::Error),
    Io(std::io::Error),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::BadParams(msg) => write!(f, "bad generation parameters: {msg}"),
            GenError::BadSpec(msg) => write!(f, "bad interface spec: {msg}"),
            GenError::Unsatisfiable(msg) => write!(f, "constraints unsatisfiable: {msg}"),
            GenError::RepairDiverged { rounds } => {
                write!(f, "repair did not converge after {rounds} rounds")
            }
            GenError::Voxel(e) => write!(f, "voxel error: {e}"),
            GenError::Json(e) => write!(f, "json error: {e}"),
            GenError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for GenError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            GenError::Voxel(e) => Some(e),
            GenError::Json(e) => Some(e),
            GenError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<voxel_core::VoxelError> for GenError {
    fn from(e: voxel_core::VoxelError) -> Self {
        GenError::Voxel(e)
    }
}

impl From<serde_json::Error> for GenError {
    fn from(e: serde_json::Error) -> Self {
        GenError::Json(e)
    }
}

impl From<std::io::Error> for GenError {
    fn from(e: std::io::Error) -> Self {
        GenError::Io(e)
    }
}
