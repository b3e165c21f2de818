//! Voxel grids over a fixed design space: binary occupancy storage, flat
//! indexing, per-voxel comparison, connectivity analysis, and the bit-exact
//! VXG1 interchange format used by every downstream stage.

mod connect;
mod error;
mod grid;
mod io;

pub use connect::{connected_components_26, void_path_exists_6};
pub use error::VoxelError;
pub use grid::{binarize, hamming, Axis, Dims, ProbGrid, VoxelGrid, DEFAULT_PITCH_UM};
pub use io::{load_grid, read_grid, save_grid, write_grid};

/// Row-major flat index with `j` fastest, then `k`, then `l`. Coordinates
/// are 1-based to match the design-space convention.
pub fn flat_index(dims: Dims, j: u32, k: u32, l: u32) -> Result<usize, VoxelError> {
    if j < 1 || j > dims.j_max || k < 1 || k > dims.k_max || l < 1 || l > dims.l_max {
        return Err(VoxelError::CoordOutOfRange { j, k, l, dims });
    }
    Ok((j - 1) as usize
        + (k - 1) as usize * dims.j_max as usize
        + (l - 1) as usize * dims.j_max as usize * dims.k_max as usize)
}

/// Inverse of [`flat_index`]: 1-based coordinates of a flat index.
pub fn coords_of(dims: Dims, index: usize) -> (u32, u32, u32) {
    debug_assert!(index < dims.total());
    let jm = dims.j_max as usize;
    let km = dims.k_max as usize;
    let j = (index % jm) as u32 + 1;
    let k = ((index / jm) % km) as u32 + 1;
    let l = (index / (jm * km)) as u32 + 1;
    (j, k, l)
}
