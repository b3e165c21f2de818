//! Decoder sweeps along a demand schedule: predict a latent code per row,
//! decode it, and measure how fast the binarized material distribution
//! changes from one row to the next. The optimum is the design just past
//! the largest change inside the high-performance tail of the schedule.

use std::fs;
use std::path::{Path, PathBuf};

use dcvae::DcvaeModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use voxel_core::{binarize, hamming, load_grid, save_grid, ProbGrid, VoxelGrid};

use crate::{ConditionSchedule, FnetModel, OptError};

const SWEEP_SCHEMA: &str = "sweep.v1";
const SWEEP_FILE: &str = "sweep.json";
const DESIGNS_SUBDIR: &str = "designs";

/// Decodes one probability field per schedule row, worst demand first.
/// Pure inference: identical rows decode to identical fields.
pub fn generate_sweep(
    schedule: &ConditionSchedule,
    fnet: &FnetModel,
    model: &DcvaeModel,
) -> Result<Vec<ProbGrid>, OptError> {
    schedule.validate()?;
    if fnet.config().latent_dim != model.config().latent_dim {
        return Err(OptError::BadInput(format!(
            "regressor predicts {}-wide latents but the decoder expects {}",
            fnet.config().latent_dim,
            model.config().latent_dim
        )));
    }
    schedule
        .normalized
        .par_iter()
        .map(|c| {
            let z = fnet.predict(c)?;
            let (probs, _) = model.decode(&z, c)?;
            Ok(probs)
        })
        .collect()
}

/// Per-adjacent-pair material change: changed voxels over total voxels,
/// plus the cumulative sum over the whole sweep.
pub fn material_change_rate(grids: &[VoxelGrid]) -> Result<(Vec<f64>, f64), OptError> {
    if grids.len() < 2 {
        return Err(OptError::BadInput(format!(
            "material change rate needs >= 2 designs, got {}",
            grids.len()
        )));
    }
    let dims = grids[0].dims();
    for g in &grids[1..] {
        if g.dims() != dims {
            return Err(OptError::BadInput("sweep designs disagree on grid dims".into()));
        }
    }
    let total = dims.total() as f64;
    let series: Vec<f64> = grids
        .windows(2)
        .map(|pair| Ok(hamming(&pair[0], &pair[1])? as f64 / total))
        .collect::<Result<_, OptError>>()?;
    let cumulative = series.iter().sum();
    Ok((series, cumulative))
}

/// The chosen change-rate position. `opt_index` is the 1-based position in
/// the series; the optimal design is the one just past that change, i.e.
/// `grids[opt_index]` with 0-based grid indexing.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub opt_index: usize,
    /// True when no series position reached the demanded performance tail
    /// and the global maximum was used instead.
    pub fallback: bool,
}

/// Picks the largest change-rate entry among positions in the
/// high-performance tail (1-based position >= p_min * q), ties resolved
/// toward higher performance. An empty tail falls back to the global
/// maximum under the same tie rule.
pub fn select_optimum(dm_series: &[f64], p_min: f64) -> Result<Selection, OptError> {
    if dm_series.is_empty() {
        return Err(OptError::BadInput("empty material-change series".into()));
    }
    if !(p_min.is_finite() && (0.0..=1.0).contains(&p_min)) {
        return Err(OptError::BadConfig(format!("p_min must be in [0, 1], got {p_min}")));
    }
    if dm_series.iter().any(|v| !v.is_finite()) {
        return Err(OptError::BadInput("material-change series has a non-finite entry".into()));
    }
    let q = dm_series.len() + 1;
    let threshold = p_min * q as f64;

    let mut best: Option<usize> = None;
    for (s, &v) in dm_series.iter().enumerate() {
        if ((s + 1) as f64) < threshold {
            continue;
        }
        if best.is_none_or(|b| v >= dm_series[b]) {
            best = Some(s);
        }
    }
    if let Some(s) = best {
        return Ok(Selection { opt_index: s + 1, fallback: false });
    }
    let mut global = 0;
    for (s, &v) in dm_series.iter().enumerate() {
        if v >= dm_series[global] {
            global = s;
        }
    }
    Ok(Selection { opt_index: global + 1, fallback: true })
}

/// A completed sweep: probability fields, their binarized designs, the
/// change-rate series, and the selected optimum.
#[derive(Clone, PartialEq, Debug)]
pub struct SweepResult {
    pub schedule: ConditionSchedule,
    pub probs: Vec<ProbGrid>,
    pub grids: Vec<VoxelGrid>,
    pub dm_series: Vec<f64>,
    pub dm_cumulative: f64,
    pub opt_index: usize,
    pub fallback: bool,
}

impl SweepResult {
    pub fn optimum(&self) -> &VoxelGrid {
        &self.grids[self.opt_index]
    }
}

/// Full sweep pipeline: decode, binarize at 0.5, measure change, select.
pub fn run_sweep(
    schedule: &ConditionSchedule,
    fnet: &FnetModel,
    model: &DcvaeModel,
    p_min: f64,
) -> Result<SweepResult, OptError> {
    let probs = generate_sweep(schedule, fnet, model)?;
    let grids: Vec<VoxelGrid> =
        probs.iter().map(|p| binarize(p, 0.5)).collect::<Result<_, _>>()?;
    let (dm_series, dm_cumulative) = material_change_rate(&grids)?;
    let sel = select_optimum(&dm_series, p_min)?;
    Ok(SweepResult {
        schedule: schedule.clone(),
        probs,
        grids,
        dm_series,
        dm_cumulative,
        opt_index: sel.opt_index,
        fallback: sel.fallback,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepManifest {
    schema: String,
    schedule: ConditionSchedule,
    dm_series: Vec<f64>,
    dm_cumulative: f64,
    opt_index: usize,
    fallback: bool,
    design_count: usize,
}

fn design_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(DESIGNS_SUBDIR).join(format!("sweep_{index:05}.vxg"))
}

/// Writes the binarized sweep designs plus `sweep.json` into `dir`.
/// Probability fields are not persisted; they are derived model output.
pub fn save_sweep(dir: &Path, sweep: &SweepResult) -> Result<(), OptError> {
    fs::create_dir_all(dir.join(DESIGNS_SUBDIR))?;
    for (i, g) in sweep.grids.iter().enumerate() {
        save_grid(g, design_file(dir, i))?;
    }
    let manifest = SweepManifest {
        schema: SWEEP_SCHEMA.to_string(),
        schedule: sweep.schedule.clone(),
        dm_series: sweep.dm_series.clone(),
        dm_cumulative: sweep.dm_cumulative,
        opt_index: sweep.opt_index,
        fallback: sweep.fallback,
        design_count: sweep.grids.len(),
    };
    fs::write(dir.join(SWEEP_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// A sweep reloaded from disk; carries everything but probability fields.
#[derive(Clone, PartialEq, Debug)]
pub struct StoredSweep {
    pub schedule: ConditionSchedule,
    pub grids: Vec<VoxelGrid>,
    pub dm_series: Vec<f64>,
    pub dm_cumulative: f64,
    pub opt_index: usize,
    pub fallback: bool,
}

impl StoredSweep {
    pub fn optimum(&self) -> &VoxelGrid {
        &self.grids[self.opt_index]
    }
}

/// Reloads a sweep directory and re-derives the change-rate series from
/// the stored designs; any disagreement with `sweep.json` is corruption.
pub fn load_sweep(dir: &Path) -> Result<StoredSweep, OptError> {
    let manifest_path = dir.join(SWEEP_FILE);
    let raw = fs::read_to_string(&manifest_path).map_err(|e| {
        OptError::Format(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: SweepManifest = serde_json::from_str(&raw)?;
    if manifest.schema != SWEEP_SCHEMA {
        return Err(OptError::Format(format!(
            "unsupported sweep schema {:?}, expected {SWEEP_SCHEMA:?}",
            manifest.schema
        )));
    }
    manifest.schedule.validate()?;
    if manifest.design_count != manifest.schedule.q {
        return Err(OptError::Format("sweep design count disagrees with schedule q".into()));
    }
    let grids: Vec<VoxelGrid> = (0..manifest.design_count)
        .map(|i| load_grid(design_file(dir, i)).map_err(OptError::from))
        .collect::<Result<_, _>>()?;

    let (series, cumulative) = material_change_rate(&grids)?;
    if series != manifest.dm_series || cumulative != manifest.dm_cumulative {
        return Err(OptError::Format(
            "stored change-rate series disagrees with the stored designs".into(),
        ));
    }
    if manifest.opt_index == 0 || manifest.opt_index >= manifest.design_count {
        return Err(OptError::Format(format!(
            "opt_index {} outside 1..{}",
            manifest.opt_index, manifest.design_count
        )));
    }
    Ok(StoredSweep {
        schedule: manifest.schedule,
        grids,
        dm_series: series,
        dm_cumulative: cumulative,
        opt_index: manifest.opt_index,
        fallback: manifest.fallback,
    })
}
