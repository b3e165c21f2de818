use voxel_core::{Axis, VoxelGrid};

use crate::{SimError, DEFAULT_FORCE_N, E_MAT_PA};

/// Compressive probe load carried from one end of the grid to the other.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct MechLoad {
    pub force_n: f64,
    pub axis: Axis,
}

impl Default for MechLoad {
    fn default() -> Self {
        MechLoad { force_n: DEFAULT_FORCE_N, axis: Axis::K }
    }
}

/// Structural surrogate. The load passes through every cross-section slice
/// along the load axis, so each slice acts as a spring in series: slice
/// stress is force over filled area, and deformation accumulates stress
/// over stiffness per slice.
///
/// Returns `(c1, c2)`: mean slice stress in MPa and total deformation in mm.
pub fn eval_mechanics(g: &VoxelGrid, load: &MechLoad) -> Result<(f64, f64), SimError> {
    if !(load.force_n.is_finite() && load.force_n > 0.0) {
        return Err(SimError::BadInput(format!("force must be positive, got {}", load.force_n)));
    }
    let dims = g.dims();
    let pitch = g.pitch_m();
    let slices = dims.extent(load.axis);

    let mut areas = vec![0usize; slices as usize];
    for idx in g.iter_filled() {
        let (j, k, l) = voxel_core::coords_of(dims, idx);
        let s = match load.axis {
            Axis::J => j,
            Axis::K => k,
            Axis::L => l,
        };
        areas[(s - 1) as usize] += 1;
    }

    let mut stress_sum_pa = 0.0;
    let mut deformation_m = 0.0;
    for (s, &a) in areas.iter().enumerate() {
        if a == 0 {
            return Err(SimError::Infeasible(format!(
                "load path broken: slice {} along {} carries no material",
                s + 1,
                load.axis
            )));
        }
        let sigma = load.force_n / (a as f64 * pitch * pitch);
        stress_sum_pa += sigma;
        deformation_m += sigma / E_MAT_PA * pitch;
    }

    let c1_mpa = stress_sum_pa / slices as f64 / 1e6;
    let c2_mm = deformation_m * 1e3;
    Ok((c1_mpa, c2_mm))
}
