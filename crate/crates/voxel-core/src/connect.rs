use std::collections::VecDeque;

use crate::coords_of;
use crate::grid::{Axis, VoxelGrid};

/// Connected components of the filled voxels under 26-connectivity (face,
/// edge, and corner adjacency). Components are sorted largest first, ties
/// broken by smallest member index; indices within a component ascend.
pub fn connected_components_26(grid: &VoxelGrid) -> Vec<Vec<usize>> {
    let dims = grid.dims();
    let total = dims.total();
    let mut visited = vec![false; total];
    let mut components: Vec<Vec<usize>> = Vec::new();

    for start in 0..total {
        if visited[start] || !grid.get_flat(start) {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            comp.push(idx);
            let (j, k, l) = coords_of(dims, idx);
            for dl in -1i64..=1 {
                for dk in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if dj == 0 && dk == 0 && dl == 0 {
                            continue;
                        }
                        let (nj, nk, nl) = (j as i64 + dj, k as i64 + dk, l as i64 + dl);
                        if nj < 1
                            || nj > dims.j_max as i64
                            || nk < 1
                            || nk > dims.k_max as i64
                            || nl < 1
                            || nl > dims.l_max as i64
                        {
                            continue;
                        }
                        let n = crate::flat_index(dims, nj as u32, nk as u32, nl as u32)
                            .expect("neighbour in range");
                        if !visited[n] && grid.get_flat(n) {
                            visited[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }

    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    components
}

/// Whether empty voxels form a face-adjacent (6-connected) path from the
/// inlet plane (`axis` coordinate 1) to the outlet plane (coordinate max).
/// Flow cannot pass through diagonal gaps, hence the stricter adjacency
/// than the material-cohesion check.
pub fn void_path_exists_6(grid: &VoxelGrid, axis: Axis) -> bool {
    let dims = grid.dims();
    let total = dims.total();
    let last = dims.extent(axis);
    if last == 1 {
        // Inlet and outlet coincide; any empty voxel on the plane connects them.
        return (0..total).any(|i| !grid.get_flat(i));
    }

    let coord = |idx: usize| -> u32 {
        let (j, k, l) = coords_of(dims, idx);
        match axis {
            Axis::J => j,
            Axis::K => k,
            Axis::L => l,
        }
    };

    let mut visited = vec![false; total];
    let mut queue = VecDeque::new();
    for (idx, seen) in visited.iter_mut().enumerate() {
        if !grid.get_flat(idx) && coord(idx) == 1 {
            *seen = true;
            queue.push_back(idx);
        }
    }

    while let Some(idx) = queue.pop_front() {
        if coord(idx) == last {
            return true;
        }
        let (j, k, l) = coords_of(dims, idx);
        let neighbours = [
            (j as i64 - 1, k as i64, l as i64),
            (j as i64 + 1, k as i64, l as i64),
            (j as i64, k as i64 - 1, l as i64),
            (j as i64, k as i64 + 1, l as i64),
            (j as i64, k as i64, l as i64 - 1),
            (j as i64, k as i64, l as i64 + 1),
        ];
        for (nj, nk, nl) in neighbours {
            if nj < 1
                || nj > dims.j_max as i64
                || nk < 1
                || nk > dims.k_max as i64
                || nl < 1
                || nl > dims.l_max as i64
            {
                continue;
            }
            let n = crate::flat_index(dims, nj as u32, nk as u32, nl as u32)
                .expect("neighbour in range");
            if !visited[n] && !grid.get_flat(n) {
                visited[n] = true;
                queue.push_back(n);
            }
        }
    }
    false
}
