//! Relabels a selected optimum with the full evaluator stack and compares
//! it per condition against the best value any feasible training design
//! achieved.

use std::fs;
use std::path::Path;

use design_gen::InterfaceSpec;
use serde::{Deserialize, Serialize};
use surrogate_sim::{label_design, LabelRecord, SimError, CONDITION_COUNT, CONDITION_NAMES};
use voxel_core::VoxelGrid;

use crate::{OptError, LOWER_IS_BETTER};

const REPORT_SCHEMA: &str = "optreport.v1";

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionComparison {
    /// 1-based condition number.
    pub index: usize,
    pub name: String,
    pub optimum: f64,
    /// Best value any feasible training design achieved, per the
    /// condition's own improvement direction.
    pub training_best: f64,
    pub training_min: f64,
    pub training_max: f64,
    /// Signed relative deviation of the optimum from the training best, in
    /// percent of the training best's magnitude.
    pub deviation_pct: f64,
    /// True when the optimum strictly beats every training design.
    pub improved: bool,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimumReport {
    pub schema: String,
    /// False when the optimum could not be labeled; rows are empty then.
    pub feasible: bool,
    pub rows: Vec<ConditionComparison>,
}

impl OptimumReport {
    pub fn improved_count(&self) -> usize {
        self.rows.iter().filter(|r| r.improved).count()
    }
}

/// Labels the optimum with all five evaluators and builds the side-by-side
/// report. An optimum the evaluators call infeasible yields a report with
/// `feasible: false` rather than an error.
pub fn validate_optimum(
    chi_opt: &VoxelGrid,
    spec: &InterfaceSpec,
    labels: &[LabelRecord],
) -> Result<OptimumReport, OptError> {
    let feasible: Vec<&LabelRecord> = labels.iter().filter(|r| r.feasible).collect();
    if feasible.is_empty() {
        return Err(OptError::BadInput("no feasible training labels to compare against".into()));
    }

    let cv = match label_design(chi_opt, spec) {
        Ok(cv) => cv,
        Err(SimError::Infeasible(_)) => {
            return Ok(OptimumReport {
                schema: REPORT_SCHEMA.to_string(),
                feasible: false,
                rows: Vec::new(),
            })
        }
        Err(e) => return Err(OptError::Sim(e)),
    };

    let rows = (0..CONDITION_COUNT)
        .map(|i| {
            let column = feasible.iter().map(|r| r.c[i]);
            let (training_min, training_max) = column.clone().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), v| (lo.min(v), hi.max(v)),
            );
            let training_best = if LOWER_IS_BETTER[i] { training_min } else { training_max };
            let optimum = cv.0[i];
            let deviation_pct =
                100.0 * (optimum - training_best) / training_best.abs().max(1e-12);
            let improved = if LOWER_IS_BETTER[i] {
                optimum < training_best
            } else {
                optimum > training_best
            };
            ConditionComparison {
                index: i + 1,
                name: CONDITION_NAMES[i].to_string(),
                optimum,
                training_best,
                training_min,
                training_max,
                deviation_pct,
                improved,
            }
        })
        .collect();

    Ok(OptimumReport { schema: REPORT_SCHEMA.to_string(), feasible: true, rows })
}

pub fn save_report(path: &Path, report: &OptimumReport) -> Result<(), OptError> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<OptimumReport, OptError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| OptError::Format(format!("cannot read {}: {e}", path.display())))?;
    let report: OptimumReport = serde_json::from_str(&raw)?;
    if report.schema != REPORT_SCHEMA {
        return Err(OptError::Format(format!(
            "unsupported report schema {:?}, expected {REPORT_SCHEMA:?}",
            report.schema
        )));
    }
    if report.feasible && report.rows.len() != CONDITION_COUNT {
        return Err(OptError::Format("feasible report must cover all nine conditions".into()));
    }
    Ok(report)
}
