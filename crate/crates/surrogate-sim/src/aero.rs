use std::collections::VecDeque;

use voxel_core::{coords_of, flat_index, Axis, VoxelGrid};

use crate::{C_D, Q_INF_PA};

/// Free-stream description for the blocking surrogate.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct AeroFlow {
    pub q_inf_pa: f64,
    pub axis: Axis,
}

impl Default for AeroFlow {
    fn default() -> Self {
        AeroFlow { q_inf_pa: Q_INF_PA, axis: Axis::K }
    }
}

/// Aerodynamic surrogate. A frontal cell on the inlet plane is blocked
/// unless a 6-connected void path leads from it through the grid to the
/// outlet plane. Returns `(c5, c6)`: mean outlet-plane pressure
/// `q_inf * (1 - outlet void fraction)` in Pa and air resistance
/// `C_d * q_inf * blocked_area` in N.
pub fn eval_aero(g: &VoxelGrid, flow: &AeroFlow) -> (f64, f64) {
    let dims = g.dims();
    let axis = flow.axis;
    let depth = dims.extent(axis);
    let (a_max, b_max) = match axis {
        Axis::J => (dims.k_max, dims.l_max),
        Axis::K => (dims.j_max, dims.l_max),
        Axis::L => (dims.j_max, dims.k_max),
    };
    let cell = |a: u32, b: u32, t: u32| -> usize {
        let (j, k, l) = match axis {
            Axis::J => (t, a, b),
            Axis::K => (a, t, b),
            Axis::L => (a, b, t),
        };
        flat_index(dims, j, k, l).expect("in range")
    };

    // Flood void cells backward from the outlet plane; an inlet void cell
    // reached this way has a through path.
    let total = dims.total();
    let mut reachable = vec![false; total];
    let mut queue = VecDeque::new();
    for a in 1..=a_max {
        for b in 1..=b_max {
            let i = cell(a, b, depth);
            if !g.get_flat(i) {
                reachable[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (j, k, l) = coords_of(dims, i);
        let candidates = [
            (j.wrapping_sub(1), k, l),
            (j + 1, k, l),
            (j, k.wrapping_sub(1), l),
            (j, k + 1, l),
            (j, k, l.wrapping_sub(1)),
            (j, k, l + 1),
        ];
        for (nj, nk, nl) in candidates {
            if nj < 1 || nj > dims.j_max || nk < 1 || nk > dims.k_max || nl < 1 || nl > dims.l_max
            {
                continue;
            }
            let n = flat_index(dims, nj, nk, nl).expect("in range");
            if !reachable[n] && !g.get_flat(n) {
                reachable[n] = true;
                queue.push_back(n);
            }
        }
    }

    let frontal = (a_max * b_max) as f64;
    let mut open_frontal = 0usize;
    let mut open_outlet = 0usize;
    for a in 1..=a_max {
        for b in 1..=b_max {
            if reachable[cell(a, b, 1)] {
                open_frontal += 1;
            }
            if !g.get_flat(cell(a, b, depth)) {
                open_outlet += 1;
            }
        }
    }

    let pitch = g.pitch_m();
    let blocked_area_m2 = (frontal - open_frontal as f64) * pitch * pitch;
    let c6 = C_D * flow.q_inf_pa * blocked_area_m2;
    let porosity_out = open_outlet as f64 / frontal;
    let c5 = flow.q_inf_pa * (1.0 - porosity_out);
    (c5, c6)
}
