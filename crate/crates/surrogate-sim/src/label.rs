use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use design_gen::{DatasetManifest, InterfaceSpec, RegionKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use voxel_core::{load_grid, Dims, VoxelGrid};

use crate::conditions::ConditionVector;
use crate::{
    eval_aero, eval_am, eval_mass, eval_mechanics, eval_thermal, AeroFlow, MechLoad, SimError,
    ThermalOpts,
};

pub const LABELS_SCHEMA: &str = "labels.v1";

/// One line of `labels.jsonl`. Infeasible designs keep `c` as all-zero
/// sentinels and are skipped by training.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub design_id: u32,
    pub c: [f64; 9],
    pub feasible: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsHeader {
    schema: String,
    designs: usize,
}

/// Voxels held at the hot temperature: the engine-interface material. Any
/// material-mandatory region whose name starts with `engine` qualifies;
/// when none is named that way, all material-mandatory voxels act as the
/// hot source.
pub fn engine_hot_mask(spec: &InterfaceSpec, dims: Dims) -> Vec<bool> {
    let mut mask = vec![false; dims.total()];
    let mut found_engine = false;
    for region in &spec.regions {
        if region.kind == RegionKind::MaterialMandatory && region.name.starts_with("engine") {
            found_engine = true;
        }
    }
    let material = spec.mask(dims, RegionKind::MaterialMandatory);
    if !found_engine {
        return material;
    }
    let narrowed = InterfaceSpec {
        regions: spec
            .regions
            .iter()
            .filter(|r| r.kind == RegionKind::MaterialMandatory && r.name.starts_with("engine"))
            .cloned()
            .collect(),
        flow_axis: spec.flow_axis,
    };
    let engine = narrowed.mask(dims, RegionKind::MaterialMandatory);
    mask.copy_from_slice(&engine);
    mask
}

/// Runs all five evaluators on one design with loads oriented along the
/// spec's flow axis. `Err(Infeasible)` means the design cannot be labeled,
/// not that the pipeline failed.
pub fn label_design(g: &VoxelGrid, spec: &InterfaceSpec) -> Result<ConditionVector, SimError> {
    let dims = g.dims();
    let (c1, c2) = eval_mechanics(g, &MechLoad { axis: spec.flow_axis, ..MechLoad::default() })?;
    let hot = engine_hot_mask(spec, dims);
    let thermal = eval_thermal(g, &hot, &ThermalOpts::default())?;
    let (c5, c6) = eval_aero(g, &AeroFlow { axis: spec.flow_axis, ..AeroFlow::default() });
    let (c7, c8) = eval_am(g);
    let c9 = eval_mass(g);
    let cv = ConditionVector([c1, c2, thermal.c3, thermal.c4, c5, c6, c7, c8, c9]);
    cv.validate().map_err(SimError::BadInput)?;
    Ok(cv)
}

/// Labels every design in a generated dataset directory and writes
/// `labels.jsonl` to `out_path`. Rows are ordered by design id regardless
/// of evaluation order, so the output is byte-reproducible.
pub fn label_dataset(dataset_dir: &Path, out_path: &Path) -> Result<Vec<LabelRecord>, SimError> {
    let manifest = DatasetManifest::load(dataset_dir)?;
    let spec = manifest.spec.clone();
    let records: Vec<LabelRecord> = (0..manifest.entries.len())
        .into_par_iter()
        .map(|i| {
            let grid = load_grid(manifest.design_path(dataset_dir, i))?;
            let record = match label_design(&grid, &spec) {
                Ok(cv) => LabelRecord { design_id: i as u32, c: cv.0, feasible: true },
                Err(SimError::Infeasible(_)) => {
                    LabelRecord { design_id: i as u32, c: [0.0; 9], feasible: false }
                }
                Err(e) => return Err(e),
            };
            Ok(record)
        })
        .collect::<Result<_, SimError>>()?;
    write_labels(&records, out_path)?;
    Ok(records)
}

pub fn write_labels(records: &[LabelRecord], path: &Path) -> Result<(), SimError> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = LabelsHeader { schema: LABELS_SCHEMA.to_string(), designs: records.len() };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRecord>, SimError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| SimError::BadInput("labels file is empty".to_string()))??;
    let header: LabelsHeader = serde_json::from_str(&header_line)?;
    if header.schema != LABELS_SCHEMA {
        return Err(SimError::BadInput(format!(
            "labels schema {:?}, expected {LABELS_SCHEMA:?}",
            header.schema
        )));
    }
    let mut records = Vec::with_capacity(header.designs);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<LabelRecord>(&line)?);
    }
    if records.len() != header.designs {
        return Err(SimError::BadInput(format!(
            "labels header claims {} designs but file holds {}",
            header.designs,
            records.len()
        )));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use design_gen::{InterfaceSpec, NoiseParams, Region, RegionKind, VoxelBox};
    use voxel_core::{save_grid, Axis};

    fn desk_dims() -> Dims {
        Dims::new(12, 16, 14).unwrap()
    }

    /// Writes a minimal hand-built dataset directory.
    fn write_dataset(dir: &Path, spec: &InterfaceSpec, grids: &[VoxelGrid]) {
        let d = grids[0].dims();
        std::fs::create_dir_all(dir.join("designs")).unwrap();
        let mut entries = Vec::new();
        for (i, g) in grids.iter().enumerate() {
            let file = format!("{i:05}.vxg");
            save_grid(g, dir.join("designs").join(&file)).unwrap();
            entries.push(design_gen::ManifestEntry {
                file,
                seed: i as u64,
                fill_fraction: g.fill_fraction(),
            });
        }
        let manifest = design_gen::DatasetManifest {
            version: design_gen::MANIFEST_VERSION,
            dims: [d.j_max, d.k_max, d.l_max],
            params: NoiseParams::defaults_for(d, 0),
            spec: spec.clone(),
            entries,
        };
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).unwrap(),
        )
        .unwrap();
    }

    #[test]
    fn hot_mask_prefers_engine_regions() {
        let d = desk_dims();
        let spec = InterfaceSpec::default_for(d).unwrap();
        let hot = engine_hot_mask(&spec, d);
        let all_material = spec.mask(d, RegionKind::MaterialMandatory);
        assert!(hot.iter().any(|&h| h));
        // Attachment pads are material but not hot.
        let hot_count = hot.iter().filter(|&&h| h).count();
        let material_count = all_material.iter().filter(|&&m| m).count();
        assert!(hot_count < material_count);
        for i in 0..d.total() {
            if hot[i] {
                assert!(all_material[i]);
            }
        }
    }

    #[test]
    fn hot_mask_falls_back_to_all_material() {
        let d = desk_dims();
        let spec = InterfaceSpec {
            regions: vec![Region {
                name: "mount".to_string(),
                kind: RegionKind::MaterialMandatory,
                boxes: vec![VoxelBox::new((5, 8), (1, 2), (5, 9))],
            }],
            flow_axis: Axis::K,
        };
        let hot = engine_hot_mask(&spec, d);
        assert_eq!(hot, spec.mask(d, RegionKind::MaterialMandatory));
    }

    #[test]
    fn full_grid_row_composes_the_evaluators() {
        let d = desk_dims();
        let spec = InterfaceSpec::default_for(d).unwrap();
        let mut g = VoxelGrid::full(d);
        design_gen::stamp(&mut g, &spec).unwrap();

        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &spec, &[g.clone()]);
        let labels_path = dir.path().join("labels.jsonl");
        let records = label_dataset(dir.path(), &labels_path).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].feasible);

        let expected = label_design(&g, &spec).unwrap();
        assert_eq!(records[0].c, expected.0);

        let (c1, c2) =
            eval_mechanics(&g, &MechLoad { axis: Axis::K, ..MechLoad::default() }).unwrap();
        assert_eq!(records[0].c[0], c1);
        assert_eq!(records[0].c[1], c2);
        let (c7, c8) = eval_am(&g);
        assert_eq!(records[0].c[6], c7);
        assert_eq!(records[0].c[7], c8);
        assert_eq!(records[0].c[8], eval_mass(&g));
    }

    #[test]
    fn infeasible_designs_get_sentinel_rows() {
        let d = desk_dims();
        let spec = InterfaceSpec::default_for(d).unwrap();
        // Engine material only: the load path along k is broken.
        let mut g = VoxelGrid::new(d);
        design_gen::stamp(&mut g, &spec).unwrap();

        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &spec, &[g]);
        let labels_path = dir.path().join("labels.jsonl");
        let records = label_dataset(dir.path(), &labels_path).unwrap();
        assert!(!records[0].feasible);
        assert_eq!(records[0].c, [0.0; 9]);
    }

    #[test]
    fn labels_file_roundtrip_and_schema_check() {
        let records = vec![
            LabelRecord { design_id: 0, c: [0.25; 9], feasible: true },
            LabelRecord { design_id: 1, c: [0.0; 9], feasible: false },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        write_labels(&records, &path).unwrap();
        let back = read_labels(&path).unwrap();
        assert_eq!(back, records);

        let text = std::fs::read_to_string(&path).unwrap();
        let corrupted = text.replace(LABELS_SCHEMA, "labels.v999");
        std::fs::write(&path, corrupted).unwrap();
        assert!(read_labels(&path).is_err());
    }
}
