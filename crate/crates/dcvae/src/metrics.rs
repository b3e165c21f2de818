use design_gen::{InterfaceSpec, RegionKind};
use voxel_core::{binarize, hamming};

use crate::data::TrainExample;
use crate::model::DcvaeModel;
use crate::DcvaeError;

/// Mean voxel disagreement between each design and its thresholded
/// reconstruction (z = mu, cut at probability 0.5).
pub fn abs_design_error(
    model: &DcvaeModel,
    examples: &[TrainExample],
) -> Result<f64, DcvaeError> {
    if examples.is_empty() {
        return Err(DcvaeError::BadInput("no examples to evaluate".into()));
    }
    let mut sum = 0usize;
    for ex in examples {
        let (probs, _) = model.reconstruct(&ex.grid, &ex.c)?;
        let bin = binarize(&probs, 0.5)?;
        sum += hamming(&bin, &ex.grid)?;
    }
    Ok(sum as f64 / examples.len() as f64)
}

/// Same disagreement computed from the logits directly; agrees with
/// `abs_design_error` and skips the intermediate grids.
pub fn mean_misrepresented(
    model: &DcvaeModel,
    examples: &[TrainExample],
) -> Result<f64, DcvaeError> {
    if examples.is_empty() {
        return Err(DcvaeError::BadInput("no examples to evaluate".into()));
    }
    let mut sum = 0usize;
    for ex in examples {
        sum += model.misrepresented(&ex.grid, &ex.c)?;
    }
    Ok(sum as f64 / examples.len() as f64)
}

/// Fraction of examples whose reconstruction shifts by at least 1e-6 in
/// some voxel probability when condition `cond` moves by `delta` (one
/// normalized standard deviation is `delta = 1.0`).
pub fn condition_influence(
    model: &DcvaeModel,
    examples: &[TrainExample],
    cond: usize,
    delta: f64,
) -> Result<f64, DcvaeError> {
    if examples.is_empty() {
        return Err(DcvaeError::BadInput("no examples to evaluate".into()));
    }
    if cond >= surrogate_sim::CONDITION_COUNT {
        return Err(DcvaeError::BadInput(format!("condition index {cond} out of range")));
    }
    let mut influenced = 0usize;
    for ex in examples {
        let (base, _) = model.reconstruct(&ex.grid, &ex.c)?;
        let mut shifted = ex.c;
        shifted[cond] += delta;
        let (moved, _) = model.reconstruct(&ex.grid, &shifted)?;
        let max_shift = base
            .values()
            .iter()
            .zip(moved.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if max_shift >= 1e-6 {
            influenced += 1;
        }
    }
    Ok(influenced as f64 / examples.len() as f64)
}

/// Fraction of examples whose material-mandatory interface voxels all
/// reconstruct as filled (probability at least 0.5).
pub fn interface_retention(
    model: &DcvaeModel,
    examples: &[TrainExample],
    spec: &InterfaceSpec,
) -> Result<f64, DcvaeError> {
    if examples.is_empty() {
        return Err(DcvaeError::BadInput("no examples to evaluate".into()));
    }
    let dims = model.config().grid_dims()?;
    let mask = spec.mask(dims, RegionKind::MaterialMandatory);
    if !mask.iter().any(|&m| m) {
        return Err(DcvaeError::BadInput("interface spec has no mandatory material".into()));
    }
    let mut kept = 0usize;
    for ex in examples {
        let (probs, _) = model.reconstruct(&ex.grid, &ex.c)?;
        let all_filled = mask
            .iter()
            .zip(probs.values())
            .filter(|(m, _)| **m)
            .all(|(_, &p)| p >= 0.5);
        if all_filled {
            kept += 1;
        }
    }
    Ok(kept as f64 / examples.len() as f64)
}
