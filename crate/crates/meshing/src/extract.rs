use std::collections::HashMap;

use rayon::prelude::*;
use voxel_core::{ProbGrid, VoxelGrid, DEFAULT_PITCH_UM};

use crate::error::MeshError;
use crate::tables::{case_rings, edge_axis, edge_base_offset};

/// Indexed triangle surface. Vertex coordinates are millimetres; triangles
/// wind counter-clockwise seen from outside the solid.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

/// Lattice edge shared between cells: base sample point plus axis.
type EdgeKey = (u32, u32, u32, u8);

/// Extracts the iso-level surface of a scalar field at the default voxel
/// pitch. The field is padded with one zero sample layer on every side so
/// the surface always closes; a sample counts as material when its value is
/// `>= iso`, matching [`voxel_core::binarize`].
pub fn marching_cubes(p: &ProbGrid, iso: f64) -> Result<TriMesh, MeshError> {
    marching_cubes_with_pitch(p, iso, DEFAULT_PITCH_UM)
}

/// [`marching_cubes`] with an explicit voxel pitch in micrometres.
pub fn marching_cubes_with_pitch(
    p: &ProbGrid,
    iso: f64,
    pitch_um: u32,
) -> Result<TriMesh, MeshError> {
    // The padding layer holds exactly 0.0, so any level in (0, 1) separates
    // it from binarized material; 0.0 itself would mark the padding as
    // material and the surface could no longer close.
    if !iso.is_finite() || iso <= 0.0 || iso >= 1.0 {
        return Err(MeshError::IsoOutOfRange(iso));
    }
    if pitch_um == 0 {
        return Err(MeshError::ZeroPitch);
    }
    let dims = p.dims();
    let (jm, km, lm) = (dims.j_max, dims.k_max, dims.l_max);
    let vals = p.values();
    // Padded lattice: sample (x, y, z) with x in 0..=jm+1 is the voxel value
    // at the same 1-based coordinates, or 0.0 in the padding shell.
    let sample = |x: u32, y: u32, z: u32| -> f64 {
        if (1..=jm).contains(&x) && (1..=km).contains(&y) && (1..=lm).contains(&z) {
            vals[(x - 1) as usize
                + (y - 1) as usize * jm as usize
                + (z - 1) as usize * (jm as usize * km as usize)]
        } else {
            0.0
        }
    };
    let (cells_x, cells_y, cells_z) = (jm as usize + 1, km as usize + 1, lm as usize + 1);
    let table = case_rings();

    // Cell scan is parallel but collected in cell order, so the serial merge
    // below assigns vertex indices deterministically.
    let hits: Vec<(u32, u32, u32, u16)> = (0..cells_x * cells_y * cells_z)
        .into_par_iter()
        .filter_map(|ci| {
            let cx = (ci % cells_x) as u32;
            let cy = ((ci / cells_x) % cells_y) as u32;
            let cz = (ci / (cells_x * cells_y)) as u32;
            let mut config = 0u16;
            for c in 0..8u16 {
                let (dx, dy, dz) = (c & 1, c >> 1 & 1, c >> 2 & 1);
                if sample(cx + dx as u32, cy + dy as u32, cz + dz as u32) >= iso {
                    config |= 1 << c;
                }
            }
            if table[config as usize].is_empty() {
                None
            } else {
                Some((cx, cy, cz, config))
            }
        })
        .collect();

    let pitch_mm = pitch_um as f64 / 1000.0;
    let mut ids: HashMap<EdgeKey, u32> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut ring_ids: Vec<u32> = Vec::new();
    for &(cx, cy, cz, config) in &hits {
        for ring in &table[config as usize] {
            if vertices.len() + ring.len() >= (u32::MAX - 1) as usize {
                return Err(MeshError::BadMesh("vertex count exceeds u32 indices".into()));
            }
            ring_ids.clear();
            for &e in ring {
                let off = edge_base_offset(e as usize);
                let axis = edge_axis(e as usize);
                let base = [cx + off[0], cy + off[1], cz + off[2]];
                let key: EdgeKey = (base[0], base[1], base[2], axis as u8);
                let id = *ids.entry(key).or_insert_with(|| {
                    let mut far = base;
                    far[axis] += 1;
                    let va = sample(base[0], base[1], base[2]);
                    let vb = sample(far[0], far[1], far[2]);
                    // Crossed edge, so va != vb. Clamping keeps the vertex
                    // strictly inside the edge when a sample equals iso,
                    // which would otherwise collapse triangles.
                    let t = ((iso - va) / (vb - va)).clamp(1e-6, 1.0 - 1e-6);
                    let mut pos = [base[0] as f64, base[1] as f64, base[2] as f64];
                    pos[axis] += t;
                    vertices.push([pos[0] * pitch_mm, pos[1] * pitch_mm, pos[2] * pitch_mm]);
                    vertices.len() as u32 - 1
                });
                ring_ids.push(id);
            }
            if let [a, b, c] = ring_ids[..] {
                triangles.push([a, b, c]);
            } else {
                // Longer loops fan around their own centre vertex. Fanning
                // from a loop crossing instead can duplicate an interior
                // edge that the cell across a saddle face also fans over,
                // stacking four triangles on it; the centre vertex belongs
                // to this cell alone, so every interior edge stays manifold.
                let mut centre = [0.0f64; 3];
                for &id in &ring_ids {
                    let v = vertices[id as usize];
                    for (c, x) in centre.iter_mut().zip(v) {
                        *c += x;
                    }
                }
                centre = centre.map(|c| c / ring_ids.len() as f64);
                vertices.push(centre);
                let hub = vertices.len() as u32 - 1;
                for (i, &id) in ring_ids.iter().enumerate() {
                    triangles.push([hub, id, ring_ids[(i + 1) % ring_ids.len()]]);
                }
            }
        }
    }
    Ok(TriMesh { vertices, triangles })
}

/// Re-expresses an occupancy grid as a 0/1 scalar field.
pub fn occupancy_field(g: &VoxelGrid) -> ProbGrid {
    let vals =
        (0..g.dims().total()).map(|i| if g.get_flat(i) { 1.0 } else { 0.0 }).collect();
    ProbGrid::new(g.dims(), vals).expect("a bit grid is a valid scalar field")
}

/// Meshes an occupancy grid at its own pitch.
pub fn mesh_grid(g: &VoxelGrid, iso: f64) -> Result<TriMesh, MeshError> {
    marching_cubes_with_pitch(&occupancy_field(g), iso, g.pitch_um())
}
