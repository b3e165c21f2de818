//! Surface extraction for voxel designs: marching-cubes isosurfaces over
//! zero-padded occupancy grids, exact mesh statistics, and binary STL /
//! text OBJ export.

mod error;
mod extract;
mod io;
mod stats;
mod tables;

pub use error::MeshError;
pub use extract::{marching_cubes, marching_cubes_with_pitch, mesh_grid, occupancy_field, TriMesh};
pub use io::{export_obj, export_stl, parse_stl, read_stl, write_stl};
pub use stats::{mesh_stats, MeshStats};
