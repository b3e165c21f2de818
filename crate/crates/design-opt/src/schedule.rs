//! Demand schedules: q condition vectors ordered from the worst observed
//! performance to the best, bounded by the labeled dataset. Load-bearing
//! conditions are held at the dataset mean; the rest ramp linearly toward
//! their best observed bound.

use serde::{Deserialize, Serialize};
use surrogate_sim::{LabelStats, CONDITION_COUNT};

use crate::OptError;

/// Per-condition improvement direction. Stress, deformation, temperature,
/// outlet pressure, air resistance, both printability proxies, and fill
/// fraction all improve downward; extracted heat density (c4) improves
/// upward, since more heat carried away per hot face is better cooling.
pub const LOWER_IS_BETTER: [bool; CONDITION_COUNT] =
    [true, true, true, false, true, true, true, true, true];

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Hold the condition at the dataset mean in every row.
    Constant,
    /// Ramp linearly from the worst observed bound to the best.
    RampToBetter,
}

/// Load-bearing disciplines (mechanics c1-c2, thermal c3-c4) are demanded
/// as constants; aero, printability, and fill (c5-c9) ramp toward better.
pub fn default_policies() -> [Policy; CONDITION_COUNT] {
    let mut p = [Policy::RampToBetter; CONDITION_COUNT];
    for slot in &mut p[..4] {
        *slot = Policy::Constant;
    }
    p
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSchedule {
    pub q: usize,
    pub policies: [Policy; CONDITION_COUNT],
    /// Raw condition values, row 0 worst through row q-1 best.
    pub rows: Vec<[f64; CONDITION_COUNT]>,
    /// The same rows under the dataset normalization, ready for inference.
    pub normalized: Vec<[f64; CONDITION_COUNT]>,
    pub bounds_min: [f64; CONDITION_COUNT],
    pub bounds_max: [f64; CONDITION_COUNT],
}

/// Builds the q-row schedule from dataset statistics. Rows never leave the
/// observed [min, max] bounds; the first and last ramped entries are the
/// exact worst and best observed values.
pub fn build_schedule(
    stats: &LabelStats,
    q: usize,
    policies: &[Policy; CONDITION_COUNT],
) -> Result<ConditionSchedule, OptError> {
    if q < 2 {
        return Err(OptError::BadConfig(format!("schedule needs q >= 2, got {q}")));
    }
    for i in 0..CONDITION_COUNT {
        let ok = stats.mean[i].is_finite()
            && stats.min[i].is_finite()
            && stats.max[i].is_finite()
            && stats.min[i] <= stats.max[i];
        if !ok {
            return Err(OptError::BadInput(format!("label stats are malformed at condition {}", i + 1)));
        }
    }

    let mut rows = Vec::with_capacity(q);
    for t in 0..q {
        let frac = t as f64 / (q - 1) as f64;
        let mut row = [0.0; CONDITION_COUNT];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = match policies[i] {
                // The mean of in-bounds data can still round an ulp outside.
                Policy::Constant => stats.mean[i].clamp(stats.min[i], stats.max[i]),
                Policy::RampToBetter => {
                    let (worst, best) = if LOWER_IS_BETTER[i] {
                        (stats.max[i], stats.min[i])
                    } else {
                        (stats.min[i], stats.max[i])
                    };
                    // Endpoints are assigned exactly; interpolation rounding
                    // must not leak outside the observed bounds.
                    if t == 0 {
                        worst
                    } else if t == q - 1 {
                        best
                    } else {
                        (worst + (best - worst) * frac).clamp(stats.min[i], stats.max[i])
                    }
                }
            };
        }
        rows.push(row);
    }

    let normalized = rows.iter().map(|r| stats.normalize(r)).collect();
    Ok(ConditionSchedule {
        q,
        policies: *policies,
        rows,
        normalized,
        bounds_min: stats.min,
        bounds_max: stats.max,
    })
}

impl ConditionSchedule {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.q < 2 || self.rows.len() != self.q || self.normalized.len() != self.q {
            return Err(OptError::Format("schedule row count disagrees with q".into()));
        }
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if !v.is_finite() || *v < self.bounds_min[i] || *v > self.bounds_max[i] {
                    return Err(OptError::Format(format!(
                        "schedule value {v} leaves the bounds of condition {}",
                        i + 1
                    )));
                }
            }
        }
        if self.normalized.iter().flatten().any(|v| !v.is_finite()) {
            return Err(OptError::Format("schedule has a non-finite normalized entry".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use surrogate_sim::{normalize_and_filter, LabelRecord};

    /// Stats derived from real records so mean/std/min/max are consistent.
    fn stats(seed: u64) -> LabelStats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<LabelRecord> = (0..60)
            .map(|i| {
                let mut c = [0.0; CONDITION_COUNT];
                for (k, v) in c.iter_mut().enumerate() {
                    *v = rng.random_range(1.0..9.0) * 10f64.powi(k as i32 % 3);
                }
                LabelRecord { design_id: i, c, feasible: true }
            })
            .collect();
        let (_, stats, _) = normalize_and_filter(&records).unwrap();
        stats
    }

    #[test]
    fn two_rows_are_exactly_the_worst_and_best_bounds() {
        let s = stats(1);
        let sched = build_schedule(&s, 2, &default_policies()).unwrap();
        for (i, &lower) in LOWER_IS_BETTER.iter().enumerate() {
            match sched.policies[i] {
                Policy::Constant => {
                    assert_eq!(sched.rows[0][i], s.mean[i]);
                    assert_eq!(sched.rows[1][i], s.mean[i]);
                }
                Policy::RampToBetter => {
                    let (worst, best) =
                        if lower { (s.max[i], s.min[i]) } else { (s.min[i], s.max[i]) };
                    assert_eq!(sched.rows[0][i], worst);
                    assert_eq!(sched.rows[1][i], best);
                }
            }
        }
    }

    #[test]
    fn constant_conditions_never_move() {
        let s = stats(2);
        let sched = build_schedule(&s, 100, &default_policies()).unwrap();
        for row in &sched.rows {
            for (v, m) in row.iter().zip(&s.mean).take(4) {
                assert_eq!(v, m);
            }
        }
    }

    #[test]
    fn ramped_fill_target_descends_strictly() {
        let s = stats(3);
        let sched = build_schedule(&s, 100, &default_policies()).unwrap();
        // c9 improves downward, so the demanded fill fraction must fall.
        for pair in sched.rows.windows(2) {
            assert!(pair[1][8] < pair[0][8], "{} !< {}", pair[1][8], pair[0][8]);
        }
        assert_eq!(sched.rows[0][8], s.max[8]);
        assert_eq!(sched.rows[99][8], s.min[8]);
    }

    #[test]
    fn rows_respect_bounds_and_normalization_for_many_stats() {
        for seed in 0..20 {
            let s = stats(seed);
            let sched = build_schedule(&s, 17, &default_policies()).unwrap();
            sched.validate().unwrap();
            for (raw, norm) in sched.rows.iter().zip(&sched.normalized) {
                assert_eq!(norm, &s.normalize(raw));
            }
        }
    }

    #[test]
    fn higher_is_better_condition_ramps_upward() {
        let s = stats(4);
        let sched = build_schedule(&s, 10, &default_policies()).unwrap();
        let mut ramp = default_policies();
        ramp[3] = Policy::RampToBetter;
        let sched_up = build_schedule(&s, 10, &ramp).unwrap();
        // c4 improves upward: starts at the observed minimum, ends at max.
        assert_eq!(sched_up.rows[0][3], s.min[3]);
        assert_eq!(sched_up.rows[9][3], s.max[3]);
        for pair in sched_up.rows.windows(2) {
            assert!(pair[1][3] >= pair[0][3]);
        }
        // The default policy kept it flat instead.
        assert!(sched.rows.iter().all(|r| r[3] == s.mean[3]));
    }

    #[test]
    fn tiny_q_is_rejected() {
        let s = stats(5);
        for q in [0, 1] {
            assert!(matches!(
                build_schedule(&s, q, &default_policies()),
                Err(OptError::BadConfig(_))
            ));
        }
    }

    #[test]
    fn validate_catches_tampered_rows() {
        let s = stats(6);
        let mut sched = build_schedule(&s, 5, &default_policies()).unwrap();
        sched.rows[2][8] = s.max[8] * 2.0 + 1.0;
        assert!(matches!(sched.validate(), Err(OptError::Format(_))));

        let mut short = build_schedule(&s, 5, &default_policies()).unwrap();
        short.rows.pop();
        assert!(matches!(short.validate(), Err(OptError::Format(_))));
    }
}
