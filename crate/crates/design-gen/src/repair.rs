use voxel_core::{
    connected_components_26, coords_of, flat_index, void_path_exists_6, Axis, Dims, VoxelGrid,
};

use crate::interface::{InterfaceSpec, RegionKind};
use crate::GenError;

/// Bridge-and-carve rounds before giving up on a pathological geometry.
const MAX_ROUNDS: u32 = 40;
/// Disconnected fragments below this size are noise debris, not structure.
const DROP_LIMIT: usize = 8;

/// Repairs a stamped design until it is a single 26-connected body that a
/// 6-connected air path crosses along the flow axis.
///
/// Each round either merges material components (keep the largest, delete
/// fragments under [`DROP_LIMIT`] voxels holding no mandatory material,
/// bridge the rest to the largest along a straight voxel line aimed
/// centroid-to-centroid) or, once single-bodied, carves the least-filled
/// all-clear column along the flow axis to open an air path. Bridges never
/// fill mandatory void; carving never cuts mandatory material.
pub fn repair_connectivity(grid: &VoxelGrid, spec: &InterfaceSpec) -> Result<VoxelGrid, GenError> {
    let dims = grid.dims();
    spec.validate(dims)?;
    let material = spec.mask(dims, RegionKind::MaterialMandatory);
    let void = spec.mask(dims, RegionKind::VoidMandatory);

    let mut g = grid.clone();
    // Restamping makes repair total in the input grid; on a properly
    // stamped grid this is a no-op.
    for i in 0..dims.total() {
        if material[i] {
            g.set_flat(i, true);
        }
        if void[i] {
            g.set_flat(i, false);
        }
    }

    for _ in 0..MAX_ROUNDS {
        let comps = connected_components_26(&g);
        if comps.is_empty() {
            return Err(GenError::Unsatisfiable("design contains no material".to_string()));
        }
        if comps.len() > 1 {
            merge_components(&mut g, &comps, &material, &void);
            continue;
        }
        if void_path_exists_6(&g, spec.flow_axis) {
            return Ok(g);
        }
        carve_channel(&mut g, spec.flow_axis, &material)?;
    }
    Err(GenError::RepairDiverged { rounds: MAX_ROUNDS })
}

fn centroid(dims: Dims, comp: &[usize]) -> [f64; 3] {
    let mut c = [0.0f64; 3];
    for &i in comp {
        let (j, k, l) = coords_of(dims, i);
        c[0] += j as f64;
        c[1] += k as f64;
        c[2] += l as f64;
    }
    let n = comp.len() as f64;
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Member of `comp` closest to `target`; ties resolve to the smallest flat
/// index because components list indices ascending.
fn nearest_to(dims: Dims, comp: &[usize], target: [f64; 3]) -> usize {
    let mut best = comp[0];
    let mut best_d = f64::INFINITY;
    for &i in comp {
        let (j, k, l) = coords_of(dims, i);
        let d = (j as f64 - target[0]).powi(2)
            + (k as f64 - target[1]).powi(2)
            + (l as f64 - target[2]).powi(2);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn merge_components(
    g: &mut VoxelGrid,
    comps: &[Vec<usize>],
    material: &[bool],
    void: &[bool],
) {
    let dims = g.dims();
    let keep = &comps[0];
    let keep_centroid = centroid(dims, keep);
    for comp in &comps[1..] {
        let holds_mandatory = comp.iter().any(|&i| material[i]);
        if comp.len() < DROP_LIMIT && !holds_mandatory {
            for &i in comp {
                g.set_flat(i, false);
            }
            continue;
        }
        let comp_centroid = centroid(dims, comp);
        let from = nearest_to(dims, comp, keep_centroid);
        let to = nearest_to(dims, keep, comp_centroid);
        for i in line_indices(dims, from, to) {
            if !void[i] {
                g.set_flat(i, true);
            }
        }
    }
}

/// Voxels on the straight segment between two flat indices. Steps are
/// uniform in parameter space with at most one voxel of motion per step,
/// so consecutive voxels are always 26-adjacent.
fn line_indices(dims: Dims, from: usize, to: usize) -> Vec<usize> {
    let (j0, k0, l0) = coords_of(dims, from);
    let (j1, k1, l1) = coords_of(dims, to);
    let deltas = [
        j1 as i64 - j0 as i64,
        k1 as i64 - k0 as i64,
        l1 as i64 - l0 as i64,
    ];
    let steps = deltas.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
    let mut out = Vec::with_capacity(steps as usize + 1);
    for s in 0..=steps {
        let t = if steps == 0 { 0.0 } else { s as f64 / steps as f64 };
        let j = (j0 as f64 + t * deltas[0] as f64).round() as u32;
        let k = (k0 as f64 + t * deltas[1] as f64).round() as u32;
        let l = (l0 as f64 + t * deltas[2] as f64).round() as u32;
        out.push(flat_index(dims, j, k, l).expect("line stays inside the grid"));
    }
    out
}

/// Empties the least-filled column along the flow axis that crosses no
/// mandatory material; ties resolve to the lexicographically smallest
/// cross-section coordinates.
fn carve_channel(g: &mut VoxelGrid, axis: Axis, material: &[bool]) -> Result<(), GenError> {
    let dims = g.dims();
    let (a_max, b_max) = match axis {
        Axis::J => (dims.k_max, dims.l_max),
        Axis::K => (dims.j_max, dims.l_max),
        Axis::L => (dims.j_max, dims.k_max),
    };
    let column = |a: u32, b: u32, t: u32| -> usize {
        let (j, k, l) = match axis {
            Axis::J => (t, a, b),
            Axis::K => (a, t, b),
            Axis::L => (a, b, t),
        };
        flat_index(dims, j, k, l).expect("column inside the grid")
    };

    let depth = dims.extent(axis);
    let mut best: Option<(usize, u32, u32)> = None;
    for a in 1..=a_max {
        for b in 1..=b_max {
            let indices = (1..=depth).map(|t| column(a, b, t));
            let mut filled = 0usize;
            let mut blocked = false;
            for i in indices {
                if material[i] {
                    blocked = true;
                    break;
                }
                if g.get_flat(i) {
                    filled += 1;
                }
            }
            if blocked {
                continue;
            }
            if best.is_none_or(|(count, _, _)| filled < count) {
                best = Some((filled, a, b));
            }
        }
    }

    let Some((_, a, b)) = best else {
        return Err(GenError::Unsatisfiable(format!(
            "every {axis}-axis column crosses mandatory material; no air channel possible"
        )));
    };
    for t in 1..=depth {
        g.set_flat(column(a, b, t), false);
    }
    Ok(())
}
