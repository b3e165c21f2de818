//! File-level round-trip guarantees: many random grids survive a save/load
//! cycle bit for bit, and re-serialization is byte-identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voxel_core::{hamming, load_grid, read_grid, save_grid, write_grid, Dims, VoxelGrid};

fn random_grid(rng: &mut ChaCha8Rng) -> VoxelGrid {
    let d = Dims::new(
        rng.random_range(1..=9),
        rng.random_range(1..=9),
        rng.random_range(1..=9),
    )
    .unwrap();
    let mut g = VoxelGrid::new(d);
    let p = rng.random_range(0.0..=1.0);
    for i in 0..d.total() {
        g.set_flat(i, rng.random_bool(p));
    }
    if rng.random_bool(0.3) {
        g.set_pitch_um(rng.random_range(1..=50_000));
    }
    g
}

#[test]
fn thousand_grids_roundtrip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.vxg");
    let mut rng = ChaCha8Rng::seed_from_u64(0xF11E);
    for case in 0..1_000 {
        let g = random_grid(&mut rng);
        save_grid(&g, &path).unwrap();
        let back = load_grid(&path).unwrap();
        assert_eq!(back.dims(), g.dims(), "case {case}");
        assert_eq!(back.pitch_um(), g.pitch_um(), "case {case}");
        assert_eq!(hamming(&g, &back).unwrap(), 0, "case {case}");
        assert_eq!(back, g, "case {case}");
    }
}

#[test]
fn reserialization_is_byte_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5);
    for _ in 0..100 {
        let g = random_grid(&mut rng);
        let mut first = Vec::new();
        write_grid(&g, &mut first).unwrap();
        let back = read_grid(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_grid(&back, &mut second).unwrap();
        assert_eq!(first, second);
    }
}
