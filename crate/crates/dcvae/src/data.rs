use std::path::Path;

use design_gen::DatasetManifest;
use surrogate_sim::{load_stats, read_labels, CONDITION_COUNT};
use voxel_core::{load_grid, VoxelGrid};

use crate::DcvaeError;

/// One aligned (design, normalized conditions) training pair.
#[derive(Clone, PartialEq, Debug)]
pub struct TrainExample {
    pub design_id: u32,
    pub grid: VoxelGrid,
    pub c: [f64; CONDITION_COUNT],
}

/// Builds the training set from the on-disk pipeline artifacts: loads the
/// dataset manifest, the raw labels, and the saved normalization stats,
/// then keeps only feasible designs whose normalized conditions all lie
/// within two standard deviations.
pub fn load_training_set(
    dataset_dir: &Path,
    labels_path: &Path,
    stats_path: &Path,
) -> Result<Vec<TrainExample>, DcvaeError> {
    let manifest = DatasetManifest::load(dataset_dir)?;
    let records = read_labels(labels_path)?;
    let stats = load_stats(stats_path)?;
    if records.len() != manifest.entries.len() {
        return Err(DcvaeError::BadInput(format!(
            "{} label rows for {} designs",
            records.len(),
            manifest.entries.len()
        )));
    }
    let mut out = Vec::new();
    for record in &records {
        if !record.feasible {
            continue;
        }
        let z = stats.normalize(&record.c);
        if z.iter().any(|v| v.abs() > 2.0) {
            continue;
        }
        let index = record.design_id as usize;
        if index >= manifest.entries.len() {
            return Err(DcvaeError::BadInput(format!(
                "label row references design {index} beyond the dataset"
            )));
        }
        let grid = load_grid(manifest.design_path(dataset_dir, index))?;
        out.push(TrainExample { design_id: record.design_id, grid, c: z });
    }
    if out.is_empty() {
        return Err(DcvaeError::BadInput("no designs survived the outlier filter".into()));
    }
    Ok(out)
}

/// Deterministic 90/10 split: every design whose id ends in 9 is held out.
/// Returns (train indices, test indices) into `examples`.
pub fn split_ids(examples: &[TrainExample]) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        if ex.design_id % 10 == 9 {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use voxel_core::Dims;

    fn example(design_id: u32) -> TrainExample {
        TrainExample {
            design_id,
            grid: VoxelGrid::new(Dims::new(2, 2, 2).unwrap()),
            c: [0.0; CONDITION_COUNT],
        }
    }

    #[test]
    fn split_holds_out_ids_ending_in_nine() {
        let examples: Vec<TrainExample> = (0..30).map(example).collect();
        let (train, test) = split_ids(&examples);
        assert_eq!(test.len(), 3);
        assert_eq!(train.len(), 27);
        for &i in &test {
            assert_eq!(examples[i].design_id % 10, 9);
        }
        for &i in &train {
            assert_ne!(examples[i].design_id % 10, 9);
        }
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn split_of_empty_set_is_empty() {
        let (train, test) = split_ids(&[]);
        assert!(train.is_empty());
        assert!(test.is_empty());
    }
}
