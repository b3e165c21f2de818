use serde::{Deserialize, Serialize};
use voxel_core::Dims;

use crate::GenError;

/// Octave stack controlling the generated material distribution. Octave `n`
/// samples at frequency `base_frequency * lacunarity^n` with amplitude
/// `persistence^n`, so successive amplitudes follow a fixed decay ratio.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub octaves: u32,
    pub base_frequency: f64,
    pub lacunarity: f64,
    pub persistence: f64,
    /// A voxel is filled when the summed noise at its centre is >= this.
    pub fill_threshold: f64,
    pub seed: u64,
}

impl NoiseParams {
    /// Defaults sized to the grid: four octaves, lowest wavelength about a
    /// quarter of the longest edge, half the space filling on average.
    pub fn defaults_for(dims: Dims, seed: u64) -> Self {
        let longest = dims.j_max.max(dims.k_max).max(dims.l_max);
        NoiseParams {
            octaves: 4,
            base_frequency: 4.0 / longest as f64,
            lacunarity: 2.0,
            persistence: 0.5,
            fill_threshold: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.octaves < 1 {
            return Err(GenError::BadParams("octaves must be >= 1".to_string()));
        }
        if !(self.base_frequency.is_finite() && self.base_frequency > 0.0) {
            return Err(GenError::BadParams(format!(
                "base_frequency must be finite and positive, got {}",
                self.base_frequency
            )));
        }
        if !(self.lacunarity.is_finite() && self.lacunarity > 1.0) {
            return Err(GenError::BadParams(format!(
                "lacunarity must be finite and > 1, got {}",
                self.lacunarity
            )));
        }
        if !(self.persistence > 0.0 && self.persistence < 1.0) {
            return Err(GenError::BadParams(format!(
                "persistence must lie in (0, 1), got {}",
                self.persistence
            )));
        }
        if self.fill_threshold.is_nan() {
            return Err(GenError::BadParams("fill_threshold is NaN".to_string()));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pseudo-random gradient selector for a lattice corner. Mixing each
/// coordinate through a full avalanche keeps neighbouring corners
/// decorrelated for any seed.
fn corner_hash(seed: u64, ix: i64, iy: i64, iz: i64) -> u8 {
    let mut h = splitmix64(seed ^ ix as u64);
    h = splitmix64(h ^ iy as u64);
    h = splitmix64(h ^ iz as u64);
    (h & 15) as u8
}

/// Dot product of the displacement with one of twelve edge-diagonal
/// gradient directions.
fn grad(h: u8, x: f64, y: f64, z: f64) -> f64 {
    match h & 15 {
        0 => x + y,
        1 => -x + y,
        2 => x - y,
        3 => -x - y,
        4 => x + z,
        5 => -x + z,
        6 => x - z,
        7 => -x - z,
        8 => y + z,
        9 => -y + z,
        10 => y - z,
        11 => -y - z,
        12 => x + y,
        13 => -y + z,
        14 => -x + y,
        _ => -y - z,
    }
}

/// Quintic smoothstep with zero first and second derivatives at 0 and 1.
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Classic 3-D gradient noise: pseudo-random gradients on the integer
/// lattice, smooth interpolation of corner dot products. Zero at every
/// lattice point, deterministic in `(point, seed)`.
pub fn perlin3(point: [f64; 3], seed: u64) -> f64 {
    let [x, y, z] = point;
    debug_assert!(x.is_finite() && y.is_finite() && z.is_finite());
    let (xf, yf, zf) = (x.floor(), y.floor(), z.floor());
    let (ix, iy, iz) = (xf as i64, yf as i64, zf as i64);
    let (dx, dy, dz) = (x - xf, y - yf, z - zf);
    let (u, v, w) = (fade(dx), fade(dy), fade(dz));

    let corner = |cx: i64, cy: i64, cz: i64| -> f64 {
        let h = corner_hash(seed, ix + cx, iy + cy, iz + cz);
        grad(h, dx - cx as f64, dy - cy as f64, dz - cz as f64)
    };

    let x00 = lerp(corner(0, 0, 0), corner(1, 0, 0), u);
    let x10 = lerp(corner(0, 1, 0), corner(1, 1, 0), u);
    let x01 = lerp(corner(0, 0, 1), corner(1, 0, 1), u);
    let x11 = lerp(corner(0, 1, 1), corner(1, 1, 1), u);
    let y0 = lerp(x00, x10, v);
    let y1 = lerp(x01, x11, v);
    lerp(y0, y1, w)
}

/// Octave sum: `sum_n persistence^n * perlin3(freq_n * point, seed ^ n)`
/// where `freq_n = base_frequency * lacunarity^n`.
pub fn fbm3(point: [f64; 3], params: &NoiseParams) -> f64 {
    let mut sum = 0.0;
    let mut amplitude = 1.0;
    let mut frequency = params.base_frequency;
    for n in 0..params.octaves {
        let scaled = [point[0] * frequency, point[1] * frequency, point[2] * frequency];
        sum += amplitude * perlin3(scaled, params.seed ^ n as u64);
        amplitude *= params.persistence;
        frequency *= params.lacunarity;
    }
    sum
}
