use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use voxel_core::{save_grid, Dims, VoxelGrid};

use crate::interface::{sample_design, InterfaceSpec};
use crate::noise::NoiseParams;
use crate::repair::repair_connectivity;
use crate::GenError;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DESIGNS_SUBDIR: &str = "designs";

/// One generated design file plus the inputs that produced it.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
    pub fill_fraction: f64,
}

/// Index of a generated dataset directory: `designs/NNNNN.vxg` files plus
/// this manifest at the directory root. Entry order matches design index.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    /// Grid extents as `[j_max, k_max, l_max]`.
    pub dims: [u32; 3],
    /// Base parameters; each entry overrides `seed`.
    pub params: NoiseParams,
    pub spec: InterfaceSpec,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load<P: AsRef<Path>>(dataset_dir: P) -> Result<Self, GenError> {
        let text = fs::read_to_string(dataset_dir.as_ref().join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn dims(&self) -> Result<Dims, GenError> {
        Dims::new(self.dims[0], self.dims[1], self.dims[2]).map_err(GenError::Voxel)
    }

    pub fn design_path<P: AsRef<Path>>(&self, dataset_dir: P, index: usize) -> PathBuf {
        dataset_dir.as_ref().join(DESIGNS_SUBDIR).join(&self.entries[index].file)
    }
}

/// Generates `n` repaired designs into `out_dir/designs/NNNNN.vxg` plus a
/// `manifest.json`. Design `i` uses seed `seed + i`; generation is pure per
/// design, so the population is reproducible and order-independent. If
/// anything fails, already-written design files are removed and no
/// manifest is left behind.
pub fn generate_dataset(
    n: usize,
    dims: Dims,
    params: &NoiseParams,
    spec: &InterfaceSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<DatasetManifest, GenError> {
    if n < 1 {
        return Err(GenError::BadParams("dataset size must be >= 1".to_string()));
    }
    params.validate()?;
    spec.validate(dims)?;

    let designs: Vec<(u64, VoxelGrid)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let design_seed = seed.wrapping_add(i as u64);
            let p = NoiseParams { seed: design_seed, ..params.clone() };
            let raw = sample_design(dims, &p, spec)?;
            let repaired = repair_connectivity(&raw, spec)?;
            Ok((design_seed, repaired))
        })
        .collect::<Result<_, GenError>>()?;

    let design_dir = out_dir.join(DESIGNS_SUBDIR);
    fs::create_dir_all(&design_dir)?;
    let mut written: Vec<PathBuf> = Vec::with_capacity(n);
    let result = write_all(&designs, &design_dir, &mut written);
    let entries = match result {
        Ok(entries) => entries,
        Err(e) => {
            for path in written {
                let _ = fs::remove_file(path);
            }
            return Err(e);
        }
    };

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        dims: [dims.j_max, dims.k_max, dims.l_max],
        params: NoiseParams { seed, ..params.clone() },
        spec: spec.clone(),
        entries,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    if let Err(e) = fs::write(out_dir.join(MANIFEST_FILE), text) {
        for i in 0..n {
            let _ = fs::remove_file(design_dir.join(file_name(i)));
        }
        return Err(e.into());
    }
    Ok(manifest)
}

fn file_name(index: usize) -> String {
    format!("{index:05}.vxg")
}

fn write_all(
    designs: &[(u64, VoxelGrid)],
    design_dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<Vec<ManifestEntry>, GenError> {
    let mut entries = Vec::with_capacity(designs.len());
    for (i, (design_seed, grid)) in designs.iter().enumerate() {
        let file = file_name(i);
        let path = design_dir.join(&file);
        save_grid(grid, &path)?;
        written.push(path);
        entries.push(ManifestEntry {
            file,
            seed: *design_seed,
            fill_fraction: grid.fill_fraction(),
        });
    }
    Ok(entries)
}
