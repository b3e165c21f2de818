//! Feedforward regression from a normalized condition vector to the latent
//! code the trained encoder assigned that design. Once fitted, the decoder
//! can be driven by conditions alone: predict a latent code for a demanded
//! condition vector, then decode it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use dcvae::{LatentRow, TrainExample};
use nn_core::{load_checkpoint, save_checkpoint, AdamState, Mlp, NnError, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use surrogate_sim::CONDITION_COUNT;

use crate::OptError;

/// Epoch-shuffle stream salt; keeps the shuffle order decoupled from the
/// weight initialization draw.
const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// One aligned training pair: the normalized conditions a design was
/// labeled with and the latent code its encoder produced.
#[derive(Clone, PartialEq, Debug)]
pub struct LatentPair {
    pub design_id: u32,
    pub c: [f64; CONDITION_COUNT],
    pub z: Vec<f64>,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnetConfig {
    /// Hidden widths between the 9-wide condition input and the latent
    /// output; the default ramps 16 up to 256 and back down to 32.
    pub hidden_widths: Vec<usize>,
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl FnetConfig {
    pub fn defaults(latent_dim: usize, seed: u64) -> Self {
        FnetConfig {
            hidden_widths: vec![16, 32, 64, 128, 256, 128, 64, 32],
            latent_dim,
            epochs: 200,
            batch_size: 32,
            lr: 1e-3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), OptError> {
        if self.latent_dim == 0 {
            return Err(OptError::BadConfig("latent_dim must be >= 1".into()));
        }
        if self.hidden_widths.contains(&0) {
            return Err(OptError::BadConfig("hidden widths must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(OptError::BadConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(OptError::BadConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(OptError::BadConfig("lr must be finite and positive".into()));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_widths.len() + 2);
        w.push(CONDITION_COUNT);
        w.extend_from_slice(&self.hidden_widths);
        w.push(self.latent_dim);
        w
    }
}

/// Mean per-epoch regression loss, averaged per latent component.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnetEpoch {
    pub epoch: usize,
    pub mse: f64,
}

#[derive(Clone, PartialEq)]
pub struct FnetModel {
    config: FnetConfig,
    mlp: Mlp,
    history: Vec<FnetEpoch>,
    /// Per-component population variance of the fitted latent targets,
    /// averaged over components; `None` until trained.
    latent_variance: Option<f64>,
}

impl fmt::Debug for FnetModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnetModel")
            .field("widths", &self.config.widths())
            .field("params", &self.mlp.param_count())
            .field("epochs_done", &self.history.len())
            .finish()
    }
}

impl FnetModel {
    pub fn init(config: &FnetConfig) -> Result<Self, OptError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mlp = Mlp::xavier(&config.widths(), &mut rng)?;
        Ok(FnetModel { config: config.clone(), mlp, history: Vec::new(), latent_variance: None })
    }

    pub fn config(&self) -> &FnetConfig {
        &self.config
    }

    /// Read access to the regression network, e.g. for external gradient
    /// diagnostics.
    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn history(&self) -> &[FnetEpoch] {
        &self.history
    }

    pub fn latent_variance(&self) -> Option<f64> {
        self.latent_variance
    }

    /// Final training MSE over the variance of the targets; `None` before
    /// training or when the targets had no spread.
    pub fn relative_mse(&self) -> Option<f64> {
        let var = self.latent_variance?;
        let last = self.history.last()?;
        if var > 0.0 {
            Some(last.mse / var)
        } else {
            None
        }
    }

    /// Predicted latent code for one normalized condition vector.
    pub fn predict(&self, c: &[f64; CONDITION_COUNT]) -> Result<Vec<f64>, OptError> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(OptError::BadInput("condition vector has a non-finite entry".into()));
        }
        self.mlp.forward(c).map_err(OptError::from)
    }
}

/// Joins training examples with their latent table rows by design id.
/// Every example must have exactly one latent row of the same width.
pub fn align_pairs(
    examples: &[TrainExample],
    latents: &[LatentRow],
) -> Result<Vec<LatentPair>, OptError> {
    if examples.len() != latents.len() {
        return Err(OptError::BadInput(format!(
            "{} examples but {} latent rows",
            examples.len(),
            latents.len()
        )));
    }
    let mut by_id: BTreeMap<u32, &LatentRow> = BTreeMap::new();
    for row in latents {
        if by_id.insert(row.design_id, row).is_some() {
            return Err(OptError::BadInput(format!(
                "duplicate latent row for design {}",
                row.design_id
            )));
        }
    }
    examples
        .iter()
        .map(|ex| {
            let row = by_id.get(&ex.design_id).ok_or_else(|| {
                OptError::BadInput(format!("no latent row for design {}", ex.design_id))
            })?;
            Ok(LatentPair { design_id: ex.design_id, c: ex.c, z: row.mu.clone() })
        })
        .collect()
}

/// Minibatch Adam regression of latent codes from conditions. Deterministic
/// given the config seed. A non-finite loss or gradient aborts the run.
pub fn train_fnet(pairs: &[LatentPair], config: &FnetConfig) -> Result<FnetModel, OptError> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(OptError::BadInput("no training pairs".into()));
    }
    for p in pairs {
        if p.z.len() != config.latent_dim {
            return Err(OptError::BadInput(format!(
                "design {} has a latent code of width {}, expected {}",
                p.design_id,
                p.z.len(),
                config.latent_dim
            )));
        }
        if p.c.iter().any(|v| !v.is_finite()) || p.z.iter().any(|v| !v.is_finite()) {
            return Err(OptError::BadInput(format!(
                "design {} has a non-finite condition or latent entry",
                p.design_id
            )));
        }
    }

    let mut model = FnetModel::init(config)?;
    model.latent_variance = Some(target_variance(pairs, config.latent_dim));

    let param_count = model.mlp.param_count();
    let mut adam = AdamState::new(param_count, config.lr)?;
    let mut delta = vec![0.0; param_count];
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let d = config.latent_dim as f64;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.mlp.zero_grads();
            for &i in batch {
                let pair = &pairs[i];
                let cache = model.mlp.forward_cached(&pair.c)?;
                let y = cache.xs.last().expect("regressor output");
                let mut dy = vec![0.0; pair.z.len()];
                let mut loss = 0.0;
                for ((&yj, &tj), g) in y.iter().zip(&pair.z).zip(dy.iter_mut()) {
                    let diff = yj - tj;
                    loss += diff * diff / d;
                    *g = 2.0 * diff / d;
                }
                if !loss.is_finite() {
                    return Err(OptError::TrainingDiverged { epoch });
                }
                loss_sum += loss;
                let (g, _) = model.mlp.backward(&cache, &dy)?;
                grads.accumulate(&g)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            match adam.step(&grads.flatten(), &mut delta) {
                Ok(()) => {}
                Err(NnError::NanGradient) => return Err(OptError::TrainingDiverged { epoch }),
                Err(e) => return Err(OptError::Nn(e)),
            }
            model.mlp.apply_flat_delta(&delta)?;
        }
        model.history.push(FnetEpoch { epoch, mse: loss_sum / pairs.len() as f64 });
    }
    Ok(model)
}

fn target_variance(pairs: &[LatentPair], latent_dim: usize) -> f64 {
    let n = pairs.len() as f64;
    let mut mean = vec![0.0; latent_dim];
    for p in pairs {
        for (m, &z) in mean.iter_mut().zip(&p.z) {
            *m += z;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = 0.0;
    for p in pairs {
        for (&m, &z) in mean.iter().zip(&p.z) {
            var += (z - m) * (z - m);
        }
    }
    var / (n * latent_dim as f64)
}

pub fn save_fnet(path: &Path, model: &FnetModel) -> Result<(), OptError> {
    let meta = serde_json::json!({
        "kind": "fnet",
        "config": model.config,
        "history": model.history,
        "latent_variance": model.latent_variance,
    });
    save_checkpoint(path, &meta, &model.mlp.named_tensors("fnet"))?;
    Ok(())
}

pub fn load_fnet(path: &Path) -> Result<FnetModel, OptError> {
    let (meta, tensors) = load_checkpoint(path)?;
    if meta.get("kind").and_then(|v| v.as_str()) != Some("fnet") {
        return Err(OptError::Format("checkpoint is not an fnet model".into()));
    }
    let config: FnetConfig = serde_json::from_value(
        meta.get("config").cloned().ok_or_else(|| OptError::Format("missing config".into()))?,
    )?;
    let history: Vec<FnetEpoch> = serde_json::from_value(
        meta.get("history").cloned().ok_or_else(|| OptError::Format("missing history".into()))?,
    )?;
    let latent_variance: Option<f64> = serde_json::from_value(
        meta.get("latent_variance")
            .cloned()
            .ok_or_else(|| OptError::Format("missing latent_variance".into()))?,
    )?;
    if let Some(v) = latent_variance {
        if !(v.is_finite() && v >= 0.0) {
            return Err(OptError::Format("latent_variance must be finite and >= 0".into()));
        }
    }

    let mut model = FnetModel::init(&config)?;
    model.history = history;
    model.latent_variance = latent_variance;
    let mut by_name: BTreeMap<String, Tensor> =
        tensors.into_iter().map(|ct| (ct.name, ct.tensor)).collect();
    for (name, slot) in model.mlp.named_tensors_mut("fnet") {
        let found = by_name
            .remove(&name)
            .ok_or_else(|| OptError::Format(format!("checkpoint missing tensor {name:?}")))?;
        if found.shape() != slot.shape() {
            return Err(OptError::Format(format!(
                "tensor {name:?} has shape {:?}, expected {:?}",
                found.shape(),
                slot.shape()
            )));
        }
        slot.data_mut().copy_from_slice(found.data());
    }
    if let Some(name) = by_name.keys().next() {
        return Err(OptError::Format(format!("checkpoint has unexpected tensor {name:?}")));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_c(rng: &mut ChaCha8Rng) -> [f64; CONDITION_COUNT] {
        let mut c = [0.0; CONDITION_COUNT];
        for v in &mut c {
            *v = rng.random_range(-1.5..1.5);
        }
        c
    }

    fn constant_pairs(n: usize, z: &[f64], seed: u64) -> Vec<LatentPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| LatentPair { design_id: i as u32, c: random_c(&mut rng), z: z.to_vec() })
            .collect()
    }

    /// Targets linear in the conditions: an easy map the regressor must
    /// drive below a tenth of the target variance.
    fn linear_pairs(n: usize, seed: u64) -> Vec<LatentPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let c = random_c(&mut rng);
                let z = vec![
                    0.8 * c[0] - 0.3 * c[4],
                    0.5 * c[8] + 0.2,
                    c[2] * 0.4 + c[6] * 0.4,
                    -0.6 * c[1],
                ];
                LatentPair { design_id: i as u32, c, z }
            })
            .collect()
    }

    fn tiny_config(latent_dim: usize, epochs: usize, seed: u64) -> FnetConfig {
        FnetConfig {
            hidden_widths: vec![16, 32, 16],
            latent_dim,
            epochs,
            batch_size: 16,
            lr: 1e-3,
            seed,
        }
    }

    #[test]
    fn constant_target_is_memorized() {
        // Power-of-two values over 32 samples keep the mean exact, so the
        // target variance is exactly zero rather than accumulated dust.
        let pairs = constant_pairs(32, &[1.0, -2.0], 1);
        let cfg = FnetConfig { lr: 1e-2, ..tiny_config(2, 400, 2) };
        let model = train_fnet(&pairs, &cfg).unwrap();
        assert!(model.history().last().unwrap().mse < 1e-3);
        // Zero-variance targets have no meaningful relative error.
        assert_eq!(model.relative_mse(), None);
        let z = model.predict(&pairs[7].c).unwrap();
        assert!((z[0] - 1.0).abs() < 0.05 && (z[1] + 2.0).abs() < 0.05, "{z:?}");
    }

    #[test]
    fn linear_map_fits_below_a_tenth_of_target_variance() {
        let pairs = linear_pairs(200, 3);
        let model = train_fnet(&pairs, &tiny_config(4, 200, 4)).unwrap();
        let rel = model.relative_mse().unwrap();
        assert!(rel <= 0.1, "relative mse {rel}");
        let mse = model.history().last().unwrap().mse;
        assert!(model.history().first().unwrap().mse > mse);
    }

    #[test]
    fn same_seed_trains_the_same_model() {
        let pairs = linear_pairs(50, 5);
        let cfg = tiny_config(4, 12, 6);
        let a = train_fnet(&pairs, &cfg).unwrap();
        let b = train_fnet(&pairs, &cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 7;
        assert_ne!(a, train_fnet(&pairs, &other).unwrap());
    }

    #[test]
    fn absurd_targets_abort_with_the_epoch() {
        let mut pairs = linear_pairs(20, 8);
        pairs[3].z = vec![1e200; 4];
        match train_fnet(&pairs, &tiny_config(4, 10, 9)) {
            Err(OptError::TrainingDiverged { epoch: 0 }) => {}
            other => panic!("expected divergence at epoch 0, got {other:?}"),
        }
    }

    #[test]
    fn input_validation_rejects_bad_pairs_and_configs() {
        let pairs = linear_pairs(10, 10);
        let cfg = tiny_config(4, 5, 11);

        let mut wrong_width = pairs.clone();
        wrong_width[0].z = vec![0.0; 3];
        assert!(matches!(train_fnet(&wrong_width, &cfg), Err(OptError::BadInput(_))));

        let mut nan_c = pairs.clone();
        nan_c[1].c[4] = f64::NAN;
        assert!(matches!(train_fnet(&nan_c, &cfg), Err(OptError::BadInput(_))));

        assert!(matches!(train_fnet(&[], &cfg), Err(OptError::BadInput(_))));

        for bad in [
            FnetConfig { latent_dim: 0, ..cfg.clone() },
            FnetConfig { epochs: 0, ..cfg.clone() },
            FnetConfig { batch_size: 0, ..cfg.clone() },
            FnetConfig { lr: f64::NAN, ..cfg.clone() },
            FnetConfig { lr: 0.0, ..cfg.clone() },
            FnetConfig { hidden_widths: vec![8, 0], ..cfg.clone() },
        ] {
            assert!(matches!(FnetModel::init(&bad), Err(OptError::BadConfig(_))), "{bad:?}");
        }
    }

    #[test]
    fn predict_rejects_non_finite_conditions() {
        let model = FnetModel::init(&tiny_config(4, 5, 12)).unwrap();
        let mut c = [0.0; CONDITION_COUNT];
        c[0] = f64::INFINITY;
        assert!(matches!(model.predict(&c), Err(OptError::BadInput(_))));
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let pairs = linear_pairs(30, 13);
        let model = train_fnet(&pairs, &tiny_config(4, 8, 14)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fnet.nnp");
        save_fnet(&path, &model).unwrap();
        let loaded = load_fnet(&path).unwrap();
        assert_eq!(loaded, model);
        let c = pairs[0].c;
        assert_eq!(model.predict(&c).unwrap(), loaded.predict(&c).unwrap());
    }

    #[test]
    fn align_pairs_joins_by_design_id_and_rejects_misalignment() {
        use voxel_core::{Dims, VoxelGrid};
        let dims = Dims::new(4, 4, 4).unwrap();
        let examples: Vec<TrainExample> = [3u32, 8, 11]
            .iter()
            .map(|&id| TrainExample {
                design_id: id,
                grid: VoxelGrid::new(dims),
                c: [f64::from(id); CONDITION_COUNT],
            })
            .collect();
        let latents: Vec<LatentRow> = [11u32, 3, 8]
            .iter()
            .map(|&id| LatentRow { design_id: id, mu: vec![f64::from(id), 0.5] })
            .collect();

        let pairs = align_pairs(&examples, &latents).unwrap();
        assert_eq!(pairs.len(), 3);
        for (pair, ex) in pairs.iter().zip(&examples) {
            assert_eq!(pair.design_id, ex.design_id);
            assert_eq!(pair.c, ex.c);
            assert_eq!(pair.z[0], f64::from(ex.design_id));
        }

        let mut missing = latents.clone();
        missing[0].design_id = 99;
        assert!(matches!(align_pairs(&examples, &missing), Err(OptError::BadInput(_))));

        let mut duplicated = latents.clone();
        duplicated[0].design_id = 3;
        assert!(matches!(align_pairs(&examples, &duplicated), Err(OptError::BadInput(_))));

        assert!(matches!(align_pairs(&examples, &latents[..2]), Err(OptError::BadInput(_))));
    }

    #[test]
    fn foreign_checkpoints_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("other.nnp");
        let meta = serde_json::json!({"kind": "dcvae"});
        nn_core::save_checkpoint(&path, &meta, &[]).unwrap();
        assert!(matches!(load_fnet(&path), Err(OptError::Format(_))));
    }
}
