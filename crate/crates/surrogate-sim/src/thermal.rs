use voxel_core::{coords_of, flat_index, VoxelGrid};

use crate::{SimError, H_COUPLING, K_COND_W_MK, T_AMB_K, T_HOT_K};

/// Thermal solve configuration. `tol` is relative to `|t_hot - t_amb|`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ThermalOpts {
    pub t_hot: f64,
    pub t_amb: f64,
    /// Weight of a void-exposed face pulling toward ambient, relative to a
    /// material-material conductive link of weight 1.
    pub h_coupling: f64,
    pub conductivity_w_mk: f64,
    pub tol: f64,
    pub max_iters: u32,
}

impl Default for ThermalOpts {
    fn default() -> Self {
        ThermalOpts {
            t_hot: T_HOT_K,
            t_amb: T_AMB_K,
            h_coupling: H_COUPLING,
            conductivity_w_mk: K_COND_W_MK,
            tol: 1e-6,
            max_iters: 10_000,
        }
    }
}

/// Converged fields plus solver diagnostics.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ThermalOutcome {
    /// Mean temperature over filled voxels, K.
    pub c3: f64,
    /// Mean conductive flux magnitude over internal material faces, kW-scale.
    pub c4: f64,
    pub iterations: u32,
    pub converged: bool,
}

/// Steady-state heat surrogate on the material voxels. Voxels in `hot`
/// (and filled) are pinned at `t_hot`; material-material faces conduct with
/// unit weight; material faces exposed to in-domain void couple to ambient
/// with weight `h_coupling`; faces on the domain boundary are adiabatic.
/// Solved by Jacobi iteration until the largest per-sweep update falls
/// under `tol * |t_hot - t_amb|` or `max_iters` sweeps pass.
pub fn eval_thermal(
    g: &VoxelGrid,
    hot: &[bool],
    opts: &ThermalOpts,
) -> Result<ThermalOutcome, SimError> {
    let dims = g.dims();
    let total = dims.total();
    if hot.len() != total {
        return Err(SimError::BadInput(format!(
            "hot mask has {} entries for a {total}-voxel grid",
            hot.len()
        )));
    }
    let scale = (opts.t_hot - opts.t_amb).abs();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(SimError::BadInput("t_hot and t_amb must be distinct and finite".to_string()));
    }
    if !(opts.h_coupling.is_finite() && opts.h_coupling >= 0.0) {
        return Err(SimError::BadInput("h_coupling must be >= 0".to_string()));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) || opts.conductivity_w_mk <= 0.0 {
        return Err(SimError::BadInput("tol and conductivity must be positive".to_string()));
    }

    if g.filled_count() == 0 {
        return Err(SimError::Infeasible("no material to conduct heat".to_string()));
    }
    if !(0..total).any(|i| hot[i] && g.get_flat(i)) {
        return Err(SimError::Infeasible("hot region carries no material".to_string()));
    }

    // Unknowns are filled, non-hot voxels; everything else is fixed.
    let mut unknown_id = vec![usize::MAX; total];
    let mut unknowns = Vec::new();
    for i in 0..total {
        if g.get_flat(i) && !hot[i] {
            unknown_id[i] = unknowns.len();
            unknowns.push(i);
        }
    }

    // Per unknown: adjacent unknown ids, hot-face count, void-face count.
    let mut links: Vec<Vec<usize>> = vec![Vec::new(); unknowns.len()];
    let mut hot_faces = vec![0u8; unknowns.len()];
    let mut void_faces = vec![0u8; unknowns.len()];
    for (u, &i) in unknowns.iter().enumerate() {
        for n in neighbours_6(g, i) {
            match n {
                Some(idx) if g.get_flat(idx) => {
                    if hot[idx] {
                        hot_faces[u] += 1;
                    } else {
                        links[u].push(unknown_id[idx]);
                    }
                }
                Some(_) => void_faces[u] += 1,
                // Domain boundary: adiabatic, no contribution.
                None => {}
            }
        }
    }

    let mut t_old = vec![opts.t_amb; unknowns.len()];
    let mut t_new = vec![opts.t_amb; unknowns.len()];
    let mut iterations = 0;
    let mut converged = unknowns.is_empty();
    while !converged && iterations < opts.max_iters {
        let mut max_update: f64 = 0.0;
        for u in 0..unknowns.len() {
            let mut num = hot_faces[u] as f64 * opts.t_hot
                + opts.h_coupling * void_faces[u] as f64 * opts.t_amb;
            for &v in &links[u] {
                num += t_old[v];
            }
            let den = links[u].len() as f64
                + hot_faces[u] as f64
                + opts.h_coupling * void_faces[u] as f64;
            let next = if den > 0.0 { num / den } else { t_old[u] };
            max_update = max_update.max((next - t_old[u]).abs());
            t_new[u] = next;
        }
        std::mem::swap(&mut t_old, &mut t_new);
        iterations += 1;
        converged = max_update < opts.tol * scale;
    }

    // Assemble the full temperature field over filled voxels.
    let temperature = |idx: usize| -> f64 {
        if hot[idx] {
            opts.t_hot
        } else {
            t_old[unknown_id[idx]]
        }
    };

    let mut t_sum = 0.0;
    let mut filled = 0usize;
    let mut flux_sum = 0.0;
    let mut faces = 0usize;
    let pitch = g.pitch_m();
    for i in 0..total {
        if !g.get_flat(i) {
            continue;
        }
        filled += 1;
        t_sum += temperature(i);
        // Count each internal face once via the positive-direction neighbours.
        let (j, k, l) = coords_of(dims, i);
        for (nj, nk, nl) in [(j + 1, k, l), (j, k + 1, l), (j, k, l + 1)] {
            if nj > dims.j_max || nk > dims.k_max || nl > dims.l_max {
                continue;
            }
            let n = flat_index(dims, nj, nk, nl).expect("in range");
            if g.get_flat(n) {
                flux_sum +=
                    opts.conductivity_w_mk * (temperature(i) - temperature(n)).abs() / pitch;
                faces += 1;
            }
        }
    }

    let c3 = t_sum / filled as f64;
    let c4 = if faces == 0 { 0.0 } else { flux_sum / faces as f64 / 1e3 };
    Ok(ThermalOutcome { c3, c4, iterations, converged })
}

/// The six face neighbours of a flat index; `None` marks a domain-boundary
/// face.
fn neighbours_6(g: &VoxelGrid, idx: usize) -> [Option<usize>; 6] {
    let dims = g.dims();
    let (j, k, l) = coords_of(dims, idx);
    let mut out = [None; 6];
    let candidates = [
        (j.wrapping_sub(1), k, l),
        (j + 1, k, l),
        (j, k.wrapping_sub(1), l),
        (j, k + 1, l),
        (j, k, l.wrapping_sub(1)),
        (j, k, l + 1),
    ];
    for (slot, (nj, nk, nl)) in out.iter_mut().zip(candidates) {
        if nj >= 1
            && nj <= dims.j_max
            && nk >= 1
            && nk <= dims.k_max
            && nl >= 1
            && nl <= dims.l_max
        {
            *slot = Some(flat_index(dims, nj, nk, nl).expect("in range"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use voxel_core::Dims;

    #[test]
    fn all_hot_block_sits_at_t_hot() {
        let d = Dims::new(3, 3, 3).unwrap();
        let g = VoxelGrid::full(d);
        let hot = vec![true; d.total()];
        let out = eval_thermal(&g, &hot, &ThermalOpts::default()).unwrap();
        assert_eq!(out.c3, T_HOT_K);
        assert_eq!(out.c4, 0.0);
        assert!(out.converged);
    }

    #[test]
    fn one_dimensional_rod_has_linear_profile() {
        // Rod of 8 voxels, hot left end, void at the far end; a huge
        // coupling pins the last voxel to ambient, so the exact solution is
        // linear and its mean is the midpoint temperature.
        let d = Dims::new(9, 1, 1).unwrap();
        let mut g = VoxelGrid::new(d);
        for j in 1..=8 {
            g.set(j, 1, 1, true).unwrap();
        }
        let mut hot = vec![false; d.total()];
        hot[0] = true;
        let opts = ThermalOpts {
            h_coupling: 1e6,
            tol: 1e-9,
            max_iters: 1_000_000,
            ..ThermalOpts::default()
        };
        let out = eval_thermal(&g, &hot, &opts).unwrap();
        assert!(out.converged);
        let expected = (T_HOT_K + T_AMB_K) / 2.0;
        assert!((out.c3 - expected).abs() < 1e-3, "c3 {} vs {}", out.c3, expected);
    }

    #[test]
    fn matches_dense_direct_solve_on_small_grids() {
        let d = Dims::new(6, 6, 6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for case in 0..5 {
            let mut g = VoxelGrid::new(d);
            for i in 0..d.total() {
                g.set_flat(i, rng.random_bool(0.5));
            }
            let first_filled = match g.iter_filled().next() {
                Some(i) => i,
                None => continue,
            };
            let mut hot = vec![false; d.total()];
            hot[first_filled] = true;

            let opts = ThermalOpts { tol: 1e-12, max_iters: 2_000_000, ..ThermalOpts::default() };
            let out = eval_thermal(&g, &hot, &opts).unwrap();
            assert!(out.converged, "case {case} hit the cap");

            let (c3_dense, c4_dense) = dense_reference(&g, &hot, &opts);
            let rel3 = (out.c3 - c3_dense).abs() / c3_dense.abs();
            assert!(rel3 < 1e-6, "case {case}: c3 {} vs dense {c3_dense}", out.c3);
            if c4_dense.abs() > 1e-12 {
                let rel4 = (out.c4 - c4_dense).abs() / c4_dense.abs();
                assert!(rel4 < 1e-6, "case {case}: c4 {} vs dense {c4_dense}", out.c4);
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let d = Dims::new(10, 10, 10).unwrap();
        let g = VoxelGrid::full(d);
        let mut hot = vec![false; d.total()];
        hot[0] = true;
        let opts = ThermalOpts { max_iters: 1, ..ThermalOpts::default() };
        let out = eval_thermal(&g, &hot, &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn degenerate_inputs_error() {
        let d = Dims::new(3, 3, 3).unwrap();
        let empty = VoxelGrid::new(d);
        let hot = vec![true; d.total()];
        assert!(matches!(
            eval_thermal(&empty, &hot, &ThermalOpts::default()),
            Err(SimError::Infeasible(_))
        ));

        let mut g = VoxelGrid::new(d);
        g.set(1, 1, 1, true).unwrap();
        let cold = vec![false; d.total()];
        assert!(matches!(
            eval_thermal(&g, &cold, &ThermalOpts::default()),
            Err(SimError::Infeasible(_))
        ));
        assert!(matches!(
            eval_thermal(&g, &[true], &ThermalOpts::default()),
            Err(SimError::BadInput(_))
        ));
    }

    /// Direct Gaussian-elimination reference for the same stencil.
    fn dense_reference(g: &VoxelGrid, hot: &[bool], opts: &ThermalOpts) -> (f64, f64) {
        let dims = g.dims();
        let total = dims.total();
        let mut unknown_id = vec![usize::MAX; total];
        let mut unknowns = Vec::new();
        for i in 0..total {
            if g.get_flat(i) && !hot[i] {
                unknown_id[i] = unknowns.len();
                unknowns.push(i);
            }
        }
        let n = unknowns.len();
        let mut a = vec![vec![0.0f64; n]; n];
        let mut b = vec![0.0f64; n];
        for (u, &i) in unknowns.iter().enumerate() {
            let mut diag = 0.0;
            for nb in neighbours_6(g, i).into_iter().flatten() {
                if g.get_flat(nb) {
                    diag += 1.0;
                    if hot[nb] {
                        b[u] += opts.t_hot;
                    } else {
                        a[u][unknown_id[nb]] -= 1.0;
                    }
                } else {
                    diag += opts.h_coupling;
                    b[u] += opts.h_coupling * opts.t_amb;
                }
            }
            if diag == 0.0 {
                // Fully isolated voxel: pin at ambient like the solver.
                diag = 1.0;
                b[u] = opts.t_amb;
            }
            a[u][u] = diag;
        }
        let t = solve_dense(a, b);

        let temp = |idx: usize| -> f64 {
            if hot[idx] {
                opts.t_hot
            } else {
                t[unknown_id[idx]]
            }
        };
        let mut sum = 0.0;
        let mut filled = 0usize;
        let mut flux = 0.0;
        let mut faces = 0usize;
        let pitch = g.pitch_m();
        for i in 0..total {
            if !g.get_flat(i) {
                continue;
            }
            filled += 1;
            sum += temp(i);
            let (j, k, l) = coords_of(dims, i);
            for (nj, nk, nl) in [(j + 1, k, l), (j, k + 1, l), (j, k, l + 1)] {
                if nj > dims.j_max || nk > dims.k_max || nl > dims.l_max {
                    continue;
                }
                let nb = flat_index(dims, nj, nk, nl).unwrap();
                if g.get_flat(nb) {
                    flux += opts.conductivity_w_mk * (temp(i) - temp(nb)).abs() / pitch;
                    faces += 1;
                }
            }
        }
        let c4 = if faces == 0 { 0.0 } else { flux / faces as f64 / 1e3 };
        (sum / filled as f64, c4)
    }

    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            let p = a[col][col];
            assert!(p.abs() > 1e-12, "singular thermal system");
            let pivot_row = a[col].clone();
            for row in col + 1..n {
                let f = a[row][col] / p;
                if f == 0.0 {
                    continue;
                }
                for (dst, &src) in a[row][col..n].iter_mut().zip(&pivot_row[col..n]) {
                    *dst -= f * src;
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for c in row + 1..n {
                acc -= a[row][c] * x[c];
            }
            x[row] = acc / a[row][row];
        }
        x
    }
}
