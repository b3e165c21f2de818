use std::fmt;
use std::str::FromStr;

use crate::error::VoxelError;
use crate::flat_index;

/// Default voxel pitch in micrometres (1 cm).
pub const DEFAULT_PITCH_UM: u32 = 10_000;

/// Grid extents along the three design-space axes. Coordinates run
/// `1..=j_max` and so on; the total voxel count is capped at `2^31` so flat
/// indices stay well inside `usize` and `u32` file fields.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Dims {
    pub j_max: u32,
    pub k_max: u32,
    pub l_max: u32,
}

impl Dims {
    pub fn new(j_max: u32, k_max: u32, l_max: u32) -> Result<Self, VoxelError> {
        if j_max == 0 || k_max == 0 || l_max == 0 {
            return Err(VoxelError::BadDims { j_max, k_max, l_max, reason: "zero extent" });
        }
        let total = j_max as u64 * k_max as u64 * l_max as u64;
        if total > 1 << 31 {
            return Err(VoxelError::BadDims { j_max, k_max, l_max, reason: "more than 2^31 voxels" });
        }
        Ok(Dims { j_max, k_max, l_max })
    }

    pub fn total(&self) -> usize {
        self.j_max as usize * self.k_max as usize * self.l_max as usize
    }

    pub fn extent(&self, axis: Axis) -> u32 {
        match axis {
            Axis::J => self.j_max,
            Axis::K => self.k_max,
            Axis::L => self.l_max,
        }
    }
}

/// One of the three grid axes. `K` is the nominal flow axis: inlet at
/// `k = 1`, outlet at `k = k_max`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Axis {
    J,
    K,
    L,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::J => "j",
            Axis::K => "k",
            Axis::L => "l",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "j" | "J" => Ok(Axis::J),
            "k" | "K" => Ok(Axis::K),
            "l" | "L" => Ok(Axis::L),
            other => Err(format!("unknown axis {other:?}, expected j, k, or l")),
        }
    }
}

/// Binary occupancy grid, bit-packed in flat-index order (LSB first within
/// each byte). Trailing bits of the last byte are always zero, which makes
/// byte-wise comparison and hashing of equal grids exact.
#[derive(Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    dims: Dims,
    pitch_um: u32,
    bits: Vec<u8>,
}

impl fmt::Debug for VoxelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "VoxelGrid({}x{}x{}, pitch {} um, {}/{} filled)",
            self.dims.j_max,
            self.dims.k_max,
            self.dims.l_max,
            self.pitch_um,
            self.filled_count(),
            self.dims.total()
        )
    }
}

impl VoxelGrid {
    pub fn new(dims: Dims) -> Self {
        let bytes = dims.total().div_ceil(8);
        VoxelGrid { dims, pitch_um: DEFAULT_PITCH_UM, bits: vec![0u8; bytes] }
    }

    pub fn full(dims: Dims) -> Self {
        let mut g = VoxelGrid::new(dims);
        for b in g.bits.iter_mut() {
            *b = 0xff;
        }
        g.clear_padding();
        g
    }

    /// Rebuilds a grid from raw packed bytes, as read from a VXG1 payload.
    pub(crate) fn from_packed(dims: Dims, pitch_um: u32, bits: Vec<u8>) -> Result<Self, VoxelError> {
        let expected = dims.total().div_ceil(8);
        if bits.len() != expected {
            return Err(VoxelError::LengthMismatch { expected, got: bits.len() });
        }
        let g = VoxelGrid { dims, pitch_um, bits };
        let tail = g.dims.total() % 8;
        if tail != 0 && g.bits[g.bits.len() - 1] >> tail != 0 {
            return Err(VoxelError::Format("nonzero padding bits".to_string()));
        }
        Ok(g)
    }

    fn clear_padding(&mut self) {
        let tail = self.dims.total() % 8;
        if tail != 0 {
            let last = self.bits.len() - 1;
            self.bits[last] &= (1u8 << tail) - 1;
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn pitch_um(&self) -> u32 {
        self.pitch_um
    }

    /// Voxel edge length in metres.
    pub fn pitch_m(&self) -> f64 {
        self.pitch_um as f64 * 1e-6
    }

    pub fn set_pitch_um(&mut self, pitch_um: u32) {
        assert!(pitch_um > 0, "pitch must be positive");
        self.pitch_um = pitch_um;
    }

    pub(crate) fn packed_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, j: u32, k: u32, l: u32) -> Result<bool, VoxelError> {
        let idx = flat_index(self.dims, j, k, l)?;
        Ok(self.get_flat(idx))
    }

    pub fn set(&mut self, j: u32, k: u32, l: u32, filled: bool) -> Result<(), VoxelError> {
        let idx = flat_index(self.dims, j, k, l)?;
        self.set_flat(idx, filled);
        Ok(())
    }

    pub fn get_flat(&self, index: usize) -> bool {
        assert!(index < self.dims.total(), "flat index {index} out of range");
        self.bits[index / 8] >> (index % 8) & 1 == 1
    }

    pub fn set_flat(&mut self, index: usize, filled: bool) {
        assert!(index < self.dims.total(), "flat index {index} out of range");
        if filled {
            self.bits[index / 8] |= 1 << (index % 8);
        } else {
            self.bits[index / 8] &= !(1 << (index % 8));
        }
    }

    pub fn filled_count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn fill_fraction(&self) -> f64 {
        self.filled_count() as f64 / self.dims.total() as f64
    }

    /// Flat indices of filled voxels, ascending.
    pub fn iter_filled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dims.total()).filter(|&i| self.get_flat(i))
    }

    /// Grid with every voxel inverted.
    pub fn complement(&self) -> VoxelGrid {
        let mut g = self.clone();
        for b in g.bits.iter_mut() {
            *b = !*b;
        }
        g.clear_padding();
        g
    }
}

/// Number of voxels at which two grids of identical shape differ.
pub fn hamming(a: &VoxelGrid, b: &VoxelGrid) -> Result<usize, VoxelError> {
    if a.dims != b.dims {
        return Err(VoxelError::DimsMismatch { expected: a.dims, got: b.dims });
    }
    Ok(a.bits
        .iter()
        .zip(b.bits.iter())
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Dense per-voxel scalar field in flat-index order. Values are validated
/// finite at construction, so downstream thresholding cannot hit NaN.
#[derive(Clone, PartialEq, Debug)]
pub struct ProbGrid {
    dims: Dims,
    values: Vec<f64>,
}

impl ProbGrid {
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self, VoxelError> {
        if values.len() != dims.total() {
            return Err(VoxelError::LengthMismatch { expected: dims.total(), got: values.len() });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(VoxelError::NonFinite { what: "probability", index: i });
            }
        }
        Ok(ProbGrid { dims, values })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: u32, k: u32, l: u32) -> Result<f64, VoxelError> {
        Ok(self.values[flat_index(self.dims, j, k, l)?])
    }
}

/// Thresholds a scalar field into occupancy: a voxel is filled when its
/// value is `>= threshold`.
pub fn binarize(field: &ProbGrid, threshold: f64) -> Result<VoxelGrid, VoxelError> {
    if !threshold.is_finite() {
        return Err(VoxelError::NonFinite { what: "threshold", index: 0 });
    }
    let mut g = VoxelGrid::new(field.dims);
    for (i, &v) in field.values.iter().enumerate() {
        if v >= threshold {
            g.set_flat(i, true);
        }
    }
    Ok(g)
}
