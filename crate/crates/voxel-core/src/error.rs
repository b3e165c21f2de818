use std::fmt;

use crate::grid::Dims;

/// Errors raised by grid construction, comparison, and serialization.
#[derive(Debug)]
pub enum VoxelError {
    /// Dimensions exceed limits or contain a zero extent.
    BadDims { j_max: u32, k_max: u32, l_max: u32, reason: &'static str },
    /// A 1-based coordinate triple fell outside the grid.
    CoordOutOfRange { j: u32, k: u32, l: u32, dims: Dims },
    /// Two grids that must share a shape do not.
    DimsMismatch { expected: Dims, got: Dims },
    /// A value expected to be finite was NaN or infinite.
    NonFinite { what: &'static str, index: usize },
    /// A buffer length does not match the grid shape it claims to describe.
    LengthMismatch { expected: usize, got: usize },
    /// The byte stream is not a well-formed VXG1 payload.
    Format(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for VoxelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VoxelError::BadDims { j_max, k_max, l_max, reason } => {
                write!(f, "bad dimensions {j_max}x{k_max}x{l_max}: {reason}")
            }
            VoxelError::CoordOutOfRange { j, k, l, dims } => write!(
                f,
                "coordinate ({j}, {k}, {l}) outside 1..={}, 1..={}, 1..={}",
                dims.j_max, dims.k_max, dims.l_max
            ),
            VoxelError::DimsMismatch { expected, got } => write!(
                f,
                "grid shape mismatch: expected {}x{}x{}, got {}x{}x{}",
                expected.j_max, expected.k_max, expected.l_max, got.j_max, got.k_max, got.l_max
            ),
            VoxelError::NonFinite { what, index } => {
                write!(f, "non-finite {what} at flat index {index}")
            }
            VoxelError::LengthMismatch { expected, got } => {
                write!(f, "buffer length {got} does not match grid size {expected}")
            }
            VoxelError::Format(msg) => write!(f, "malformed voxel file: {msg}"),
            VoxelError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for VoxelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            VoxelError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for VoxelError {
    fn from(e: std::io::Error) -> Self {
        VoxelError::Io(e)
    }
}
