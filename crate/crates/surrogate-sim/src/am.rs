use voxel_core::{coords_of, VoxelGrid};

/// Additive-manufacturing surrogate over `l`-axis build layers. Returns
/// `(c7, c8)`: mean filled area per layer in mm² (a proxy for heat input
/// per layer) and the count of filled voxels resting on void above the
/// build plate (downward faces steeper than the printable overhang).
pub fn eval_am(g: &VoxelGrid) -> (f64, f64) {
    let dims = g.dims();
    let pitch_mm = g.pitch_m() * 1e3;
    let c7 = g.filled_count() as f64 / dims.l_max as f64 * pitch_mm * pitch_mm;

    let mut overhangs = 0usize;
    for idx in g.iter_filled() {
        let (j, k, l) = coords_of(dims, idx);
        if l == 1 {
            continue;
        }
        let below = voxel_core::flat_index(dims, j, k, l - 1).expect("in range");
        if !g.get_flat(below) {
            overhangs += 1;
        }
    }
    (c7, overhangs as f64)
}

/// Lightweighting metric: fill fraction of the design space.
pub fn eval_mass(g: &VoxelGrid) -> f64 {
    g.fill_fraction()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use voxel_core::Dims;

    #[test]
    fn empty_grid_scores_zero() {
        let g = VoxelGrid::new(Dims::new(4, 5, 6).unwrap());
        assert_eq!(eval_am(&g), (0.0, 0.0));
        assert_eq!(eval_mass(&g), 0.0);
    }

    #[test]
    fn full_grid_has_no_overhangs_and_full_layers() {
        let d = Dims::new(4, 5, 6).unwrap();
        let g = VoxelGrid::full(d);
        let (c7, c8) = eval_am(&g);
        // Every layer is a full 4x5 cross-section at 10 mm pitch.
        assert!((c7 - 20.0 * 100.0).abs() < 1e-9);
        assert_eq!(c8, 0.0);
        assert_eq!(eval_mass(&g), 1.0);
    }

    #[test]
    fn floating_voxel_is_one_overhang() {
        let d = Dims::new(6, 6, 6).unwrap();
        let mut g = VoxelGrid::new(d);
        g.set(3, 3, 5, true).unwrap();
        let (_, c8) = eval_am(&g);
        assert_eq!(c8, 1.0);
    }

    #[test]
    fn build_plate_voxels_never_count() {
        let d = Dims::new(6, 6, 6).unwrap();
        let mut g = VoxelGrid::new(d);
        g.set(2, 2, 1, true).unwrap();
        let (_, c8) = eval_am(&g);
        assert_eq!(c8, 0.0);
    }

    #[test]
    fn removing_an_overhang_voxel_never_increases_the_count() {
        let d = Dims::new(6, 6, 6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        for _ in 0..30 {
            let mut g = VoxelGrid::new(d);
            for i in 0..d.total() {
                g.set_flat(i, rng.random_bool(0.5));
            }
            let overhangs: Vec<usize> = g
                .iter_filled()
                .filter(|&i| {
                    let (j, k, l) = coords_of(d, i);
                    l > 1 && !g.get_flat(voxel_core::flat_index(d, j, k, l - 1).unwrap())
                })
                .collect();
            if overhangs.is_empty() {
                continue;
            }
            let (_, before) = eval_am(&g);
            let pick = overhangs[rng.random_range(0..overhangs.len())];
            g.set_flat(pick, false);
            let (_, after) = eval_am(&g);
            assert!(after <= before);
        }
    }

    #[test]
    fn adding_material_never_decreases_mass() {
        let d = Dims::new(5, 5, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        let mut g = VoxelGrid::new(d);
        for i in 0..d.total() {
            g.set_flat(i, rng.random_bool(0.3));
        }
        let before = eval_mass(&g);
        let empties: Vec<usize> = (0..d.total()).filter(|&i| !g.get_flat(i)).collect();
        let pick = empties[rng.random_range(0..empties.len())];
        g.set_flat(pick, true);
        assert!(eval_mass(&g) > before);
    }

    #[test]
    fn known_fill_fraction_is_exact() {
        let d = Dims::new(10, 10, 10).unwrap();
        let mut g = VoxelGrid::new(d);
        for i in 0..234 {
            g.set_flat(i, true);
        }
        assert_eq!(eval_mass(&g), 0.234);
    }
}
