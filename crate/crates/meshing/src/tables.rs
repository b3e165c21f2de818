//! Per-cell isosurface case table: for each of the 256 corner occupancy
//! patterns, the closed crossing loops (cube-edge index rings) separating
//! filled from empty corners, wound counter-clockwise seen from outside the
//! material.
//!
//! The table is generated on first use rather than transcribed. Every cube
//! face is resolved independently: a face with four crossings always cuts
//! off its two filled corners, so the chord layout is a function of the face
//! pattern alone and the two cells sharing a face agree on it by
//! construction — saddle faces can never open cracks. The price is that one
//! of the two legal saddle topologies is fixed; there is no per-cell
//! disambiguation.
//!
//! Loops are stored untriangulated: fanning a loop from one of its own
//! crossings can reuse a vertex pair that the neighbouring cell also fans
//! across, stacking four triangles on one edge. The extractor instead fans
//! long loops around a per-loop centre vertex, which no other cell can
//! touch.

use std::sync::OnceLock;

/// Corner `c` sits at offset `(c & 1, c >> 1 & 1, c >> 2 & 1)` in its cell.
fn corner_pos(c: usize) -> [f64; 3] {
    [(c & 1) as f64, (c >> 1 & 1) as f64, (c >> 2 & 1) as f64]
}

/// Endpoint corners of cube edge `e`; the base corner has offset 0 along
/// the edge axis `e / 4`.
pub(crate) fn edge_corners(e: usize) -> (usize, usize) {
    let sub = e % 4;
    let base = match e / 4 {
        0 => (sub & 1) << 1 | (sub >> 1) << 2,
        1 => (sub & 1) | (sub >> 1) << 2,
        _ => (sub & 1) | (sub >> 1) << 1,
    };
    (base, base | 1 << (e / 4))
}

pub(crate) fn edge_axis(e: usize) -> usize {
    e / 4
}

/// Lattice offset of the base corner of edge `e` within its cell.
pub(crate) fn edge_base_offset(e: usize) -> [u32; 3] {
    let (base, _) = edge_corners(e);
    [(base & 1) as u32, (base >> 1 & 1) as u32, (base >> 2 & 1) as u32]
}

pub(crate) fn midpoint(e: usize) -> [f64; 3] {
    let (a, b) = edge_corners(e);
    let (pa, pb) = (corner_pos(a), corner_pos(b));
    [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0]
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The filled endpoint corner of a crossed edge.
fn filled_end(config: u16, e: usize) -> usize {
    let (a, b) = edge_corners(e);
    if config >> a & 1 == 1 {
        a
    } else {
        b
    }
}

/// Directs the chord between crossings `e1` and `e2` so the material corner
/// `f` lies to the right seen from outside the face (outward normal `n`).
/// Loops linked from such chords wind counter-clockwise seen from outside
/// the solid.
fn direct_chord(next: &mut [usize; 12], e1: usize, e2: usize, n: [f64; 3], f: usize) {
    let (p, q) = (midpoint(e1), midpoint(e2));
    let side = dot3(cross3(sub3(q, p), sub3(corner_pos(f), p)), n);
    assert!(side != 0.0, "face corner on a chord");
    let (from, to) = if side > 0.0 { (e2, e1) } else { (e1, e2) };
    assert_eq!(next[from], usize::MAX, "crossing already has a successor");
    next[from] = to;
}

fn rings_for(config: u16) -> Vec<Vec<u8>> {
    let filled = |c: usize| config >> c & 1 == 1;
    let crossed = |e: usize| {
        let (a, b) = edge_corners(e);
        filled(a) != filled(b)
    };
    // One directed chord per face per boundary arc; `next` closes them into
    // loops because every crossing lies on exactly two faces.
    let mut next = [usize::MAX; 12];
    for axis in 0..3 {
        for side in 0..2usize {
            let crossings: Vec<usize> = (0..12)
                .filter(|&e| {
                    let (a, b) = edge_corners(e);
                    a >> axis & 1 == side && b >> axis & 1 == side && crossed(e)
                })
                .collect();
            let mut n = [0.0; 3];
            n[axis] = if side == 1 { 1.0 } else { -1.0 };
            match crossings[..] {
                [] => {}
                [e1, e2] => direct_chord(&mut next, e1, e2, n, filled_end(config, e1)),
                [_, _, _, _] => {
                    for &e1 in &crossings {
                        let f = filled_end(config, e1);
                        let e2 = *crossings
                            .iter()
                            .find(|&&e2| e2 != e1 && filled_end(config, e2) == f)
                            .expect("saddle crossing pairs with its corner twin");
                        if e1 < e2 {
                            direct_chord(&mut next, e1, e2, n, f);
                        }
                    }
                }
                _ => unreachable!("a face crosses 0, 2, or 4 of its edges"),
            }
        }
    }
    let mut rings = Vec::new();
    let mut seen = [false; 12];
    for start in 0..12 {
        if !crossed(start) || seen[start] {
            continue;
        }
        let mut ring = vec![start as u8];
        seen[start] = true;
        let mut cur = next[start];
        while cur != start {
            assert!(cur != usize::MAX && !seen[cur], "chords must close into disjoint loops");
            ring.push(cur as u8);
            seen[cur] = true;
            cur = next[cur];
        }
        assert!(ring.len() >= 3, "a loop visits at least three crossings");
        rings.push(ring);
    }
    rings
}

/// The full 256-entry case table, generated once per process.
pub(crate) fn case_rings() -> &'static [Vec<Vec<u8>>; 256] {
    static TABLE: OnceLock<[Vec<Vec<u8>>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|config| rings_for(config as u16)))
}
