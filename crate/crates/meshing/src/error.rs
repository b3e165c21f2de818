use std::fmt;

/// Errors raised by surface extraction and mesh serialization.
#[derive(Debug)]
pub enum MeshError {
    /// Iso level that cannot separate the design from its zero padding.
    IsoOutOfRange(f64),
    /// A zero voxel pitch cannot scale lattice coordinates to millimetres.
    ZeroPitch,
    /// Mesh violates a structural precondition (index range, finiteness).
    BadMesh(String),
    /// The byte stream is not a well-formed binary STL payload.
    Format(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::IsoOutOfRange(v) => write!(f, "iso level {v} outside (0, 1)"),
            MeshError::ZeroPitch => f.write_str("voxel pitch must be positive"),
            MeshError::BadMesh(what) => write!(f, "invalid mesh: {what}"),
            MeshError::Format(what) => write!(f, "bad STL payload: {what}"),
            MeshError::Io(e) => write!(f, "I/O failure: {e}"),
        }
    }
}

impl std::error::Error for MeshError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            MeshError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(e)
    }
}
