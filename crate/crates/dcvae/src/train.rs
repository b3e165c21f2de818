use std::fs;
use std::path::Path;

use nn_core::{AdamState, NnError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::TrainExample;
use crate::model::{DcvaeModel, ModelGrads};
use crate::DcvaeError;

/// Distinct deterministic streams derived from the config seed.
const SHUFFLE_STREAM: u64 = 0x9e3779b97f4a7c15;
const NOISE_STREAM: u64 = 0xd1b54a32d192ed03;

const LATENTS_SCHEMA: &str = "latents.v1";

/// Per-epoch loss means over the whole training set.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochStats {
    pub epoch: usize,
    pub kl: f64,
    pub recon: f64,
    pub total: f64,
}

/// Posterior mean of one training design under the final model.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentRow {
    pub design_id: u32,
    pub mu: Vec<f64>,
}

pub struct TrainResult {
    pub model: DcvaeModel,
    pub latents: Vec<LatentRow>,
}

/// Initializes a model from the config and trains it on the examples.
pub fn train(examples: &[TrainExample], config: &crate::DcvaeConfig) -> Result<TrainResult, DcvaeError> {
    train_model(DcvaeModel::init(config)?, examples)
}

/// Minibatch Adam over the model's own epoch/batch/lr settings. Fully
/// deterministic given the config seed: shuffling and reparameterization
/// noise come from separate seeded streams, and gradients accumulate in
/// shuffled-index order. If the loss (or a gradient) goes non-finite the
/// run aborts, handing back the state after the last completed epoch.
pub fn train_model(
    mut model: DcvaeModel,
    examples: &[TrainExample],
) -> Result<TrainResult, DcvaeError> {
    if examples.is_empty() {
        return Err(DcvaeError::BadInput("training set is empty".into()));
    }
    let config = model.config().clone();
    for ex in examples {
        // Fails fast on a dims mismatch before any epoch work.
        model.flatten_grid(&ex.grid)?;
    }

    let mut adam = AdamState::new(model.param_count(), config.lr)?;
    let mut delta = vec![0.0; model.param_count()];
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_STREAM);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed ^ NOISE_STREAM);
    let mut indices: Vec<usize> = (0..examples.len()).collect();
    let mut last_good = model.clone();

    for epoch in 0..config.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut kl_sum = 0.0;
        let mut recon_sum = 0.0;
        for batch in indices.chunks(config.batch_size) {
            let mut grads = ModelGrads::zero(&model);
            for &i in batch {
                let ex = &examples[i];
                let eps: Vec<f64> = (0..config.latent_dim)
                    .map(|_| StandardNormal.sample(&mut noise_rng))
                    .collect();
                let (parts, g) = model.loss_and_grads(&ex.grid, &ex.c, &eps)?;
                if !parts.total.is_finite() {
                    return Err(DcvaeError::TrainingDiverged {
                        epoch,
                        last_good: Box::new(last_good),
                    });
                }
                kl_sum += parts.kl;
                recon_sum += parts.recon;
                grads.accumulate(&g)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            match adam.step(&grads.flatten(), &mut delta) {
                Ok(()) => {}
                Err(NnError::NanGradient) => {
                    return Err(DcvaeError::TrainingDiverged {
                        epoch,
                        last_good: Box::new(last_good),
                    });
                }
                Err(e) => return Err(e.into()),
            }
            model.apply_flat_delta(&delta)?;
        }
        let n = examples.len() as f64;
        model.history.push(EpochStats {
            epoch,
            kl: kl_sum / n,
            recon: recon_sum / n,
            total: (kl_sum + recon_sum) / n,
        });
        last_good = model.clone();
    }

    let mut latents = Vec::with_capacity(examples.len());
    for ex in examples {
        let head = model.encode(&ex.grid, &ex.c)?;
        latents.push(LatentRow { design_id: ex.design_id, mu: head.mu });
    }
    Ok(TrainResult { model, latents })
}

/// `epoch,kl,recon,total` rows; floats print in shortest round-trip form.
pub fn write_history_csv(history: &[EpochStats], path: &Path) -> Result<(), DcvaeError> {
    let mut out = String::from("epoch,kl,recon,total\n");
    for row in history {
        out.push_str(&format!("{},{},{},{}\n", row.epoch, row.kl, row.recon, row.total));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_history_csv(path: &Path) -> Result<Vec<EpochStats>, DcvaeError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("epoch,kl,recon,total") {
        return Err(DcvaeError::Format("history csv missing header".into()));
    }
    let mut history: Vec<EpochStats> = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(DcvaeError::Format(format!("history row {n} has {} fields", fields.len())));
        }
        let parse = |s: &str| -> Result<f64, DcvaeError> {
            s.parse().map_err(|_| DcvaeError::Format(format!("bad float {s:?} in history row {n}")))
        };
        let row = EpochStats {
            epoch: fields[0]
                .parse()
                .map_err(|_| DcvaeError::Format(format!("bad epoch in history row {n}")))?,
            kl: parse(fields[1])?,
            recon: parse(fields[2])?,
            total: parse(fields[3])?,
        };
        if let Some(prev) = history.last() {
            if row.epoch <= prev.epoch {
                return Err(DcvaeError::Format("history epochs must increase".into()));
            }
        }
        history.push(row);
    }
    Ok(history)
}

/// JSON-lines latent table with a counting header.
pub fn write_latent_table(rows: &[LatentRow], path: &Path) -> Result<(), DcvaeError> {
    let mut out = serde_json::to_string(&serde_json::json!({
        "schema": LATENTS_SCHEMA,
        "designs": rows.len(),
    }))?;
    out.push('\n');
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_latent_table(path: &Path) -> Result<Vec<LatentRow>, DcvaeError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(
        lines.next().ok_or_else(|| DcvaeError::Format("empty latent table".into()))?,
    )?;
    if header.get("schema").and_then(|v| v.as_str()) != Some(LATENTS_SCHEMA) {
        return Err(DcvaeError::Format("latent table has wrong schema".into()));
    }
    let declared = header
        .get("designs")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DcvaeError::Format("latent table header missing design count".into()))?;
    let mut rows: Vec<LatentRow> = Vec::new();
    for line in lines {
        let row: LatentRow = serde_json::from_str(line)?;
        if row.mu.iter().any(|v| !v.is_finite()) {
            return Err(DcvaeError::Format(format!(
                "latent row for design {} has a non-finite entry",
                row.design_id
            )));
        }
        if let Some(first) = rows.first() {
            if first.mu.len() != row.mu.len() {
                return Err(DcvaeError::Format("latent rows have inconsistent widths".into()));
            }
        }
        rows.push(row);
    }
    if rows.len() as u64 != declared {
        return Err(DcvaeError::Format(format!(
            "latent table declares {declared} rows but has {}",
            rows.len()
        )));
    }
    Ok(rows)
}
