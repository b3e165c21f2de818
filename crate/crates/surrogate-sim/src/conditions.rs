pub const CONDITION_COUNT: usize = 9;

/// Human-readable names, indexed c1..c9 as 0..8.
pub const CONDITION_NAMES: [&str; CONDITION_COUNT] = [
    "mean residual stress (MPa)",
    "mean total deformation (mm)",
    "mean temperature (K)",
    "heat density (kW/s)",
    "mean outlet pressure (Pa)",
    "air resistance (N)",
    "print heat proxy (mm^2/layer)",
    "overhang surface count",
    "fill fraction",
];

/// Physics-category grouping of the nine conditions, 0-based:
/// mechanics {c1,c2}, thermal {c3,c4}, aero {c5,c6}, printability {c7,c8},
/// lightweighting {c9}. Conditioning networks get one branch per category.
pub const CATEGORY_PARTITION: [&[usize]; 5] = [&[0, 1], &[2, 3], &[4, 5], &[6, 7], &[8]];

/// Nine condition values for one design, ordered c1..c9.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ConditionVector(pub [f64; CONDITION_COUNT]);

impl ConditionVector {
    /// Checks the value-range invariants: everything finite, counts
    /// non-negative, fill fraction inside [0, 1].
    pub fn validate(&self) -> Result<(), String> {
        for (i, v) in self.0.iter().enumerate() {
            if !v.is_finite() {
                return Err(format!("c{} is not finite: {v}", i + 1));
            }
        }
        if self.0[7] < 0.0 {
            return Err(format!("c8 must be >= 0, got {}", self.0[7]));
        }
        if !(0.0..=1.0).contains(&self.0[8]) {
            return Err(format!("c9 must lie in [0, 1], got {}", self.0[8]));
        }
        Ok(())
    }
}
