//! Fast deterministic condition evaluators. Each design receives nine
//! scalar labels: structural (c1 stress, c2 deformation), thermal (c3 mean
//! temperature, c4 heat density), aerodynamic (c5 outlet pressure, c6 air
//! resistance), manufacturability (c7 layer heat proxy, c8 overhang count),
//! and lightweighting (c9 fill fraction). Lower is better for every
//! condition. The evaluators are intentionally coarse; what matters
//! downstream is that they are pure, total, and order designs sensibly.

mod aero;
mod am;
mod conditions;
mod label;
mod mechanics;
mod normalize;
mod thermal;

pub use aero::{eval_aero, AeroFlow};
pub use am::{eval_am, eval_mass};
pub use conditions::{ConditionVector, CATEGORY_PARTITION, CONDITION_COUNT, CONDITION_NAMES};
pub use label::{label_dataset, label_design, read_labels, write_labels, LabelRecord, LABELS_SCHEMA};
pub use mechanics::{eval_mechanics, MechLoad};
pub use normalize::{
    load_stats, normalize_and_filter, save_stats, LabelStats, STATS_SCHEMA,
};
pub use thermal::{eval_thermal, ThermalOpts, ThermalOutcome};

use std::fmt;

/// Default structural load: 1 kN along the flow axis.
pub const DEFAULT_FORCE_N: f64 = 1_000.0;
/// Young's modulus of the build material, Pa (aluminium-like).
pub const E_MAT_PA: f64 = 7.0e10;
/// Engine-interface temperature, K.
pub const T_HOT_K: f64 = 400.0;
/// Ambient temperature, K.
pub const T_AMB_K: f64 = 288.0;
/// Dimensionless void-face coupling weight in the thermal stencil.
pub const H_COUPLING: f64 = 0.1;
/// Thermal conductivity, W/(m K) (aluminium-like).
pub const K_COND_W_MK: f64 = 200.0;
/// Free-stream dynamic pressure, Pa.
pub const Q_INF_PA: f64 = 200.0;
/// Drag coefficient applied to the blocked frontal area.
pub const C_D: f64 = 1.0;

/// Errors raised by the evaluators and the labeling pipeline.
#[derive(Debug)]
pub enum SimError {
    /// The design cannot carry the probe at all; it is labeled with a
    /// sentinel and excluded from training rather than failing the run.
    Infeasible(String),
    BadInput(String),
    /// Normalization needs at least two feasible rows.
    TooFewRows { got: usize },
    Gen(design_gen::GenError),
    Voxel(voxel_core::VoxelError),
    Json(serde_json::Error),
    Io(std::io::Error),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Infeasible(msg) => write!(f, "infeasible design: {msg}"),
            SimError::BadInput(msg) => write!(f, "bad input: {msg}"),
            SimError::TooFewRows { got } => {
                write!(f, "normalization needs at least 2 feasible rows, got {got}")
            }
            SimError::Gen(e) => write!(f, "dataset error: {e}"),
            SimError::Voxel(e) => write!(f, "voxel error: {e}"),
            SimError::Json(e) => write!(f, "json error: {e}"),
            SimError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for SimError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SimError::Gen(e) => Some(e),
            SimError::Voxel(e) => Some(e),
            SimError::Json(e) => Some(e),
            SimError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<design_gen::GenError> for SimError {
    fn from(e: design_gen::GenError) -> Self {
        SimError::Gen(e)
    }
}

impl From<voxel_core::VoxelError> for SimError {
    fn from(e: voxel_core::VoxelError) -> Self {
        SimError::Voxel(e)
    }
}

impl From<serde_json::Error> for SimError {
    fn from(e: serde_json::Error) -> Self {
        SimError::Json(e)
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e)
    }
}
