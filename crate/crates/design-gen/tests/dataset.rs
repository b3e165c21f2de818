//! Population-level guarantees: reproducibility of the whole dataset
//! directory, 100% constraint validity, and even coverage of the space.

use design_gen::{DatasetManifest, InterfaceSpec, NoiseParams, RegionKind};
use voxel_core::{connected_components_26, load_grid, void_path_exists_6, Dims};

#[test]
fn same_seed_reproduces_identical_files() {
    let d = Dims::new(12, 16, 14).unwrap();
    let spec = InterfaceSpec::default_for(d).unwrap();
    let params = NoiseParams::defaults_for(d, 0);
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    design_gen::generate_dataset(12, d, &params, &spec, 4242, dir_a.path()).unwrap();
    design_gen::generate_dataset(12, d, &params, &spec, 4242, dir_b.path()).unwrap();

    let manifest_a = std::fs::read(dir_a.path().join("manifest.json")).unwrap();
    let manifest_b = std::fs::read(dir_b.path().join("manifest.json")).unwrap();
    assert_eq!(manifest_a, manifest_b);

    let manifest = DatasetManifest::load(dir_a.path()).unwrap();
    assert_eq!(manifest.entries.len(), 12);
    for (i, entry) in manifest.entries.iter().enumerate() {
        assert_eq!(entry.seed, 4242 + i as u64);
        let bytes_a = std::fs::read(manifest.design_path(dir_a.path(), i)).unwrap();
        let bytes_b = std::fs::read(manifest.design_path(dir_b.path(), i)).unwrap();
        assert_eq!(bytes_a, bytes_b, "design {i} differs between runs");
    }
}

#[test]
fn thousand_designs_are_all_valid_and_cover_the_space() {
    let d = Dims::new(16, 16, 16).unwrap();
    let spec = InterfaceSpec::default_for(d).unwrap();
    let params = NoiseParams::defaults_for(d, 0);
    let dir = tempfile::tempdir().unwrap();
    let n = 1_000;
    let manifest = design_gen::generate_dataset(n, d, &params, &spec, 7, dir.path()).unwrap();

    let material = spec.mask(d, RegionKind::MaterialMandatory);
    let void = spec.mask(d, RegionKind::VoidMandatory);
    let mut fill_counts = vec![0u32; d.total()];

    for i in 0..n {
        let g = load_grid(manifest.design_path(dir.path(), i)).unwrap();
        assert_eq!(connected_components_26(&g).len(), 1, "design {i} not single-bodied");
        assert!(void_path_exists_6(&g, spec.flow_axis), "design {i} has no air path");
        for idx in g.iter_filled() {
            fill_counts[idx] += 1;
        }
        for (idx, &m) in material.iter().enumerate() {
            if m {
                assert!(g.get_flat(idx), "design {i} missing mandatory material");
            }
        }
        for (idx, &v) in void.iter().enumerate() {
            if v {
                assert!(!g.get_flat(idx), "design {i} fills mandatory void");
            }
        }
    }

    // Non-stamped voxels must be sometimes filled and sometimes empty, with
    // no strong spatial bias (coefficient of variation below 0.5).
    let mut freqs = Vec::new();
    for idx in 0..d.total() {
        if material[idx] || void[idx] {
            continue;
        }
        let f = fill_counts[idx] as f64 / n as f64;
        assert!(f > 0.0 && f < 1.0, "voxel {idx} frequency {f} is degenerate");
        freqs.push(f);
    }
    let mean = freqs.iter().sum::<f64>() / freqs.len() as f64;
    let var = freqs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / freqs.len() as f64;
    let cv = var.sqrt() / mean;
    assert!(cv < 0.5, "fill-frequency coefficient of variation {cv} too high");
}
