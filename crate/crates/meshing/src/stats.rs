use std::collections::HashMap;

use crate::extract::TriMesh;

/// Exact connectivity and extent summary of a triangle mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats {
    pub triangles: usize,
    /// Every undirected edge is shared by exactly two triangles.
    pub watertight: bool,
    /// `V - E + F`: 2 for one closed genus-0 surface, 0 for a torus.
    pub euler: i64,
    /// Axis-aligned vertex bounds, `None` for an empty mesh.
    pub bbox: Option<([f64; 3], [f64; 3])>,
}

/// Computes [`MeshStats`] by an exact edge-incidence scan.
pub fn mesh_stats(m: &TriMesh) -> MeshStats {
    let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
    let mut degenerate = false;
    for t in &m.triangles {
        degenerate |= t[0] == t[1] || t[1] == t[2] || t[2] == t[0];
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let watertight = !degenerate && edges.values().all(|&c| c == 2);
    let euler = m.vertices.len() as i64 - edges.len() as i64 + m.triangles.len() as i64;
    let mut bbox: Option<([f64; 3], [f64; 3])> = None;
    for v in &m.vertices {
        let (lo, hi) = bbox.get_or_insert((*v, *v));
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    MeshStats { triangles: m.triangles.len(), watertight, euler, bbox }
}
