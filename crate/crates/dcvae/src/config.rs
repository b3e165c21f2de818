use serde::{Deserialize, Serialize};
use surrogate_sim::CONDITION_COUNT;
use voxel_core::Dims;

use crate::DcvaeError;

/// Condition categories: indices into the nine-entry condition vector,
/// one branch network per category.
pub const DEFAULT_PARTITION: [&[usize]; 5] = surrogate_sim::CATEGORY_PARTITION;

/// Hidden widths of each branch network; the last entry is the embedding
/// width contributed per category.
pub const DEFAULT_BRANCH_WIDTHS: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Conditions are embedded per category and spliced into both encoder
    /// and decoder.
    DeepInput,
    /// Conditions are concatenated raw to the flattened input and to the
    /// latent code.
    FcBaseline,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcvaeConfig {
    /// Grid extents `[j_max, k_max, l_max]` every training design must match.
    pub dims: [u32; 3],
    /// Hidden widths of the encoder trunk; the decoder mirrors them in
    /// reverse.
    pub encoder_widths: Vec<usize>,
    pub latent_dim: usize,
    /// Hidden widths shared by all branch networks (deep-input mode only).
    pub branch_widths: Vec<usize>,
    /// Condition categories; must partition `0..9`.
    pub partition: Vec<Vec<usize>>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl DcvaeConfig {
    /// Full-size architecture: trunk 1024 -> ... -> 16, latent 32.
    pub fn full_scale(dims: Dims, seed: u64) -> Self {
        DcvaeConfig {
            dims: [dims.j_max, dims.k_max, dims.l_max],
            encoder_widths: vec![1024, 512, 256, 128, 64, 32, 16],
            latent_dim: 32,
            branch_widths: DEFAULT_BRANCH_WIDTHS.to_vec(),
            partition: DEFAULT_PARTITION.iter().map(|c| c.to_vec()).collect(),
            epochs: 200,
            batch_size: 32,
            lr: 1e-3,
            seed,
            mode: Mode::DeepInput,
        }
    }

    /// Same architectural relations at a size that trains in seconds.
    pub fn desk_scale(dims: Dims, seed: u64) -> Self {
        DcvaeConfig {
            dims: [dims.j_max, dims.k_max, dims.l_max],
            encoder_widths: vec![512, 256, 128, 64, 32, 16],
            latent_dim: 8,
            branch_widths: vec![4, 8, 16],
            partition: DEFAULT_PARTITION.iter().map(|c| c.to_vec()).collect(),
            epochs: 60,
            batch_size: 32,
            lr: 1e-3,
            seed,
            mode: Mode::DeepInput,
        }
    }

    pub fn grid_dims(&self) -> Result<Dims, DcvaeError> {
        Dims::new(self.dims[0], self.dims[1], self.dims[2]).map_err(DcvaeError::from)
    }

    pub fn x_dim(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    /// Width of the concatenated branch embeddings.
    pub fn a_m_width(&self) -> usize {
        self.partition.len() * self.branch_widths.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), DcvaeError> {
        self.grid_dims()?;
        if self.encoder_widths.is_empty() || self.encoder_widths.contains(&0) {
            return Err(DcvaeError::BadConfig("encoder widths must be positive".into()));
        }
        if self.latent_dim == 0 {
            return Err(DcvaeError::BadConfig("latent dimension must be at least 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(DcvaeError::BadConfig("epochs and batch size must be positive".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(DcvaeError::BadConfig("learning rate must be positive".into()));
        }
        if self.mode == Mode::DeepInput {
            if self.branch_widths.is_empty() || self.branch_widths.contains(&0) {
                return Err(DcvaeError::BadConfig("branch widths must be positive".into()));
            }
            let mut seen = [false; CONDITION_COUNT];
            for cat in &self.partition {
                if cat.is_empty() {
                    return Err(DcvaeError::BadConfig("empty condition category".into()));
                }
                for &i in cat {
                    if i >= CONDITION_COUNT {
                        return Err(DcvaeError::BadConfig(format!(
                            "condition index {i} out of range"
                        )));
                    }
                    if seen[i] {
                        return Err(DcvaeError::BadConfig(format!(
                            "condition index {i} appears in two categories"
                        )));
                    }
                    seen[i] = true;
                }
            }
            if seen.iter().any(|&s| !s) {
                return Err(DcvaeError::BadConfig(
                    "partition must cover all nine conditions".into(),
                ));
            }
        }
        Ok(())
    }
}
