use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::label::LabelRecord;
use crate::SimError;

pub const STATS_SCHEMA: &str = "stats.v1";

/// Per-condition dataset statistics, computed over feasible rows and kept
/// on disk so later stages can map between raw and normalized condition
/// space.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelStats {
    pub schema: String,
    pub mean: [f64; 9],
    pub std: [f64; 9],
    pub min: [f64; 9],
    pub max: [f64; 9],
    /// Conditions with no spread; they normalize to 0 instead of dividing
    /// by zero and are ignored by the outlier filter.
    pub zero_variance: [bool; 9],
}

impl LabelStats {
    pub fn from_records(records: &[LabelRecord]) -> Result<Self, SimError> {
        let feasible: Vec<&LabelRecord> = records.iter().filter(|r| r.feasible).collect();
        if feasible.len() < 2 {
            return Err(SimError::TooFewRows { got: feasible.len() });
        }
        let n = feasible.len() as f64;
        let mut mean = [0.0; 9];
        let mut min = [f64::INFINITY; 9];
        let mut max = [f64::NEG_INFINITY; 9];
        for r in &feasible {
            for i in 0..9 {
                mean[i] += r.c[i];
                min[i] = min[i].min(r.c[i]);
                max[i] = max[i].max(r.c[i]);
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut std = [0.0; 9];
        for r in &feasible {
            for i in 0..9 {
                std[i] += (r.c[i] - mean[i]).powi(2);
            }
        }
        let mut zero_variance = [false; 9];
        for i in 0..9 {
            std[i] = (std[i] / n).sqrt();
            if std[i] == 0.0 {
                zero_variance[i] = true;
            }
        }
        Ok(LabelStats { schema: STATS_SCHEMA.to_string(), mean, std, min, max, zero_variance })
    }

    pub fn normalize(&self, c: &[f64; 9]) -> [f64; 9] {
        let mut z = [0.0; 9];
        for i in 0..9 {
            if !self.zero_variance[i] {
                z[i] = (c[i] - self.mean[i]) / self.std[i];
            }
        }
        z
    }

    pub fn denormalize(&self, z: &[f64; 9]) -> [f64; 9] {
        let mut c = [0.0; 9];
        for i in 0..9 {
            c[i] = if self.zero_variance[i] { self.mean[i] } else { self.mean[i] + z[i] * self.std[i] };
        }
        c
    }
}

/// Z-scores every feasible row and drops designs with any condition more
/// than two standard deviations from the dataset mean. Returns the
/// normalized rows (infeasible rows pass through untouched), the stats
/// used, and the ids of retained training designs.
pub fn normalize_and_filter(
    records: &[LabelRecord],
) -> Result<(Vec<LabelRecord>, LabelStats, Vec<u32>), SimError> {
    let stats = LabelStats::from_records(records)?;
    let mut normalized = Vec::with_capacity(records.len());
    let mut retained = Vec::new();
    for r in records {
        if !r.feasible {
            normalized.push(*r);
            continue;
        }
        let z = stats.normalize(&r.c);
        if z.iter().all(|v| v.abs() <= 2.0) {
            retained.push(r.design_id);
        }
        normalized.push(LabelRecord { design_id: r.design_id, c: z, feasible: true });
    }
    Ok((normalized, stats, retained))
}

pub fn save_stats(stats: &LabelStats, path: &Path) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(stats)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_stats(path: &Path) -> Result<LabelStats, SimError> {
    let text = std::fs::read_to_string(path)?;
    let stats: LabelStats = serde_json::from_str(&text)?;
    if stats.schema != STATS_SCHEMA {
        return Err(SimError::BadInput(format!(
            "stats schema {:?}, expected {STATS_SCHEMA:?}",
            stats.schema
        )));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn row(id: u32, c: [f64; 9]) -> LabelRecord {
        LabelRecord { design_id: id, c, feasible: true }
    }

    #[test]
    fn identical_rows_normalize_to_zero_and_all_survive() {
        let records: Vec<LabelRecord> = (0..5).map(|i| row(i, [3.25; 9])).collect();
        let (normalized, stats, retained) = normalize_and_filter(&records).unwrap();
        assert_eq!(retained, vec![0, 1, 2, 3, 4]);
        assert!(stats.zero_variance.iter().all(|&z| z));
        for r in &normalized {
            assert_eq!(r.c, [0.0; 9]);
        }
        // Degenerate round trip recovers the constant.
        assert_eq!(stats.denormalize(&[0.0; 9]), [3.25; 9]);
    }

    #[test]
    fn constructed_outlier_is_the_only_drop() {
        let mut records: Vec<LabelRecord> =
            (0..28).map(|i| row(i, [(i % 7) as f64; 9])).collect();
        records.push(row(28, [100.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0]));
        let (_, stats, retained) = normalize_and_filter(&records).unwrap();
        assert!(!retained.contains(&28));
        assert_eq!(retained.len(), 28);
        let z = stats.normalize(&records[28].c);
        assert!(z[0] > 2.0, "engineered outlier z = {}", z[0]);
    }

    #[test]
    fn infeasible_rows_pass_through_and_are_never_retained() {
        let mut records: Vec<LabelRecord> = (0..4).map(|i| row(i, [i as f64; 9])).collect();
        records.push(LabelRecord { design_id: 4, c: [0.0; 9], feasible: false });
        let (normalized, _, retained) = normalize_and_filter(&records).unwrap();
        assert!(!retained.contains(&4));
        assert_eq!(normalized[4], records[4]);
    }

    #[test]
    fn gaussian_population_retains_the_expected_fraction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xCAFE);
        let n = 100_000;
        let records: Vec<LabelRecord> = (0..n)
            .map(|i| {
                let mut c = [0.0; 9];
                for v in c.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                row(i as u32, c)
            })
            .collect();
        let (_, _, retained) = normalize_and_filter(&records).unwrap();
        let fraction = retained.len() as f64 / n as f64;
        // P(|z| <= 2)^9 for nine independent Gaussian conditions.
        let expected = 0.954_499_7f64.powi(9);
        assert!(
            (fraction - expected).abs() < 0.01,
            "retained {fraction}, expected about {expected}"
        );
    }

    #[test]
    fn normalization_roundtrip_is_tight() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);
        let records: Vec<LabelRecord> = (0..50)
            .map(|i| {
                let mut c = [0.0; 9];
                for (k, v) in c.iter_mut().enumerate() {
                    *v = rng.random_range(-5.0..5.0) * 10f64.powi(k as i32 % 4);
                }
                row(i, c)
            })
            .collect();
        let (_, stats, _) = normalize_and_filter(&records).unwrap();
        for r in &records {
            let back = stats.denormalize(&stats.normalize(&r.c));
            for (i, (&b, &orig)) in back.iter().zip(r.c.iter()).enumerate() {
                let rel = (b - orig).abs() / orig.abs().max(1e-300);
                assert!(rel < 1e-12, "condition {i}: {b} vs {orig}");
            }
        }
    }

    #[test]
    fn too_few_feasible_rows_is_an_error() {
        let records = vec![row(0, [1.0; 9])];
        assert!(matches!(
            normalize_and_filter(&records),
            Err(SimError::TooFewRows { got: 1 })
        ));
    }

    #[test]
    fn stats_file_roundtrip_and_schema_check() {
        let records: Vec<LabelRecord> = (0..6).map(|i| row(i, [i as f64 * 1.5; 9])).collect();
        let (_, stats, _) = normalize_and_filter(&records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.json");
        save_stats(&stats, &path).unwrap();
        let back = load_stats(&path).unwrap();
        assert_eq!(back, stats);

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace(STATS_SCHEMA, "stats.v999")).unwrap();
        assert!(load_stats(&path).is_err());
    }
}
