//! VXG1 on-disk format. Little-endian throughout:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `VXG1`                   |
//! | 4      | 4    | `j_max` (u32)                  |
//! | 8      | 4    | `k_max` (u32)                  |
//! | 12     | 4    | `l_max` (u32)                  |
//! | 16     | 4    | voxel pitch in micrometres     |
//! | 20     | ...  | occupancy bits, LSB first      |
//!
//! The bit section is `ceil(total / 8)` bytes; padding bits in the final
//! byte must be zero. Readers reject any trailing bytes, so equal grids
//! always serialize to identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::VoxelError;
use crate::grid::{Dims, VoxelGrid};

const MAGIC: &[u8; 4] = b"VXG1";

/// Serializes a grid to any writer.
pub fn write_grid<W: Write>(grid: &VoxelGrid, mut w: W) -> Result<(), VoxelError> {
    let d = grid.dims();
    w.write_all(MAGIC)?;
    w.write_all(&d.j_max.to_le_bytes())?;
    w.write_all(&d.k_max.to_le_bytes())?;
    w.write_all(&d.l_max.to_le_bytes())?;
    w.write_all(&grid.pitch_um().to_le_bytes())?;
    w.write_all(grid.packed_bytes())?;
    Ok(())
}

/// Deserializes a grid from any reader, validating magic, dimensions,
/// pitch, payload length, and padding bits.
pub fn read_grid<R: Read>(mut r: R) -> Result<VoxelGrid, VoxelError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(VoxelError::Format(format!("bad magic {magic:02x?}")));
    }
    let mut word = [0u8; 4];
    let mut next_u32 = |what: &str| -> Result<u32, VoxelError> {
        r.read_exact(&mut word).map_err(truncated)?;
        let v = u32::from_le_bytes(word);
        if v == 0 {
            return Err(VoxelError::Format(format!("zero {what}")));
        }
        Ok(v)
    };
    let j_max = next_u32("j_max")?;
    let k_max = next_u32("k_max")?;
    let l_max = next_u32("l_max")?;
    let pitch_um = next_u32("pitch")?;
    let dims = Dims::new(j_max, k_max, l_max)
        .map_err(|e| VoxelError::Format(e.to_string()))?;

    let expected = dims.total().div_ceil(8);
    let mut bits = vec![0u8; expected];
    r.read_exact(&mut bits).map_err(truncated)?;
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => {}
        _ => return Err(VoxelError::Format("trailing bytes after payload".to_string())),
    }

    VoxelGrid::from_packed(dims, pitch_um, bits)
}

fn truncated(e: std::io::Error) -> VoxelError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        VoxelError::Format("truncated file".to_string())
    } else {
        VoxelError::Io(e)
    }
}

pub fn save_grid<P: AsRef<Path>>(grid: &VoxelGrid, path: P) -> Result<(), VoxelError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_grid(grid, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_grid<P: AsRef<Path>>(path: P) -> Result<VoxelGrid, VoxelError> {
    read_grid(BufReader::new(File::open(path)?))
}
