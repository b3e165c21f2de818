use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nn_core::{
    load_checkpoint, save_checkpoint, Act, DenseLayer, Mlp, MlpGrads, NnError, Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DcvaeConfig, Mode};
use crate::train::EpochStats;
use crate::DcvaeError;

/// Encoder/decoder pair with Gaussian latent heads and, in deep-input
/// mode, one branch network per condition category.
#[derive(Clone, PartialEq)]
pub struct DcvaeModel {
    pub(crate) config: DcvaeConfig,
    pub(crate) encoder: Mlp,
    pub(crate) mu_head: DenseLayer,
    pub(crate) logvar_head: DenseLayer,
    pub(crate) decoder: Mlp,
    pub(crate) branches: Vec<Mlp>,
    pub(crate) history: Vec<EpochStats>,
}

impl fmt::Debug for DcvaeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DcvaeModel")
            .field("mode", &self.config.mode)
            .field("dims", &self.config.dims)
            .field("latent_dim", &self.config.latent_dim)
            .field("params", &self.param_count())
            .field("epochs_trained", &self.history.len())
            .finish()
    }
}

/// Stack of dense layers that are all ReLU, including the last; used for
/// the encoder trunk and the branch networks, whose outputs feed further
/// layers rather than standing as final outputs.
fn relu_mlp(widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Mlp, NnError> {
    let layers: Vec<DenseLayer> =
        widths.windows(2).map(|w| DenseLayer::xavier(w[0], w[1], rng)).collect();
    let acts = vec![Act::Relu; layers.len()];
    Mlp::from_parts(layers, acts)
}

impl DcvaeModel {
    /// Seeded initialization; construction order (encoder, heads, decoder,
    /// branches) is part of the reproducibility contract.
    pub fn init(config: &DcvaeConfig) -> Result<Self, DcvaeError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let x_dim = config.x_dim();
        let cond_extra = match config.mode {
            Mode::DeepInput => 0,
            Mode::FcBaseline => surrogate_sim::CONDITION_COUNT,
        };

        let mut enc_widths = vec![x_dim + cond_extra];
        enc_widths.extend_from_slice(&config.encoder_widths);
        let encoder = relu_mlp(&enc_widths, &mut rng)?;

        let head_in = match config.mode {
            Mode::DeepInput => config.encoder_widths.last().unwrap() + config.a_m_width(),
            Mode::FcBaseline => *config.encoder_widths.last().unwrap(),
        };
        let mu_head = DenseLayer::xavier(head_in, config.latent_dim, &mut rng);
        let logvar_head = DenseLayer::xavier(head_in, config.latent_dim, &mut rng);

        let dec_extra = match config.mode {
            Mode::DeepInput => config.a_m_width(),
            Mode::FcBaseline => surrogate_sim::CONDITION_COUNT,
        };
        let mut dec_widths = vec![config.latent_dim + dec_extra];
        dec_widths.extend(config.encoder_widths.iter().rev());
        dec_widths.push(x_dim);
        let decoder = Mlp::xavier(&dec_widths, &mut rng)?;

        let mut branches = Vec::new();
        if config.mode == Mode::DeepInput {
            for cat in &config.partition {
                let mut widths = vec![cat.len()];
                widths.extend_from_slice(&config.branch_widths);
                branches.push(relu_mlp(&widths, &mut rng)?);
            }
        }

        Ok(DcvaeModel {
            config: config.clone(),
            encoder,
            mu_head,
            logvar_head,
            decoder,
            branches,
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &DcvaeConfig {
        &self.config
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.history
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count()
            + self.mu_head.weights.len()
            + self.mu_head.bias.len()
            + self.logvar_head.weights.len()
            + self.logvar_head.bias.len()
            + self.decoder.param_count()
            + self.branches.iter().map(Mlp::param_count).sum::<usize>()
    }

    /// Parameters flattened in the fixed order encoder, mu head, logvar
    /// head, decoder, branches; each dense layer contributes weights then
    /// bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend(self.encoder.flat_params());
        out.extend_from_slice(self.mu_head.weights.data());
        out.extend_from_slice(self.mu_head.bias.data());
        out.extend_from_slice(self.logvar_head.weights.data());
        out.extend_from_slice(self.logvar_head.bias.data());
        out.extend(self.decoder.flat_params());
        for b in &self.branches {
            out.extend(b.flat_params());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<(), DcvaeError> {
        if params.len() != self.param_count() {
            return Err(DcvaeError::BadInput(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut at = 0;
        let n = self.encoder.param_count();
        self.encoder.set_flat_params(&params[at..at + n])?;
        at += n;
        for t in [
            &mut self.mu_head.weights,
            &mut self.mu_head.bias,
            &mut self.logvar_head.weights,
            &mut self.logvar_head.bias,
        ] {
            let n = t.len();
            t.data_mut().copy_from_slice(&params[at..at + n]);
            at += n;
        }
        let n = self.decoder.param_count();
        self.decoder.set_flat_params(&params[at..at + n])?;
        at += n;
        for b in &mut self.branches {
            let n = b.param_count();
            b.set_flat_params(&params[at..at + n])?;
            at += n;
        }
        Ok(())
    }

    /// `p -= delta` in `flat_params` order.
    pub fn apply_flat_delta(&mut self, delta: &[f64]) -> Result<(), DcvaeError> {
        if delta.len() != self.param_count() {
            return Err(DcvaeError::BadInput(format!(
                "expected {} deltas, got {}",
                self.param_count(),
                delta.len()
            )));
        }
        let mut params = self.flat_params();
        for (p, d) in params.iter_mut().zip(delta) {
            *p -= d;
        }
        self.set_flat_params(&params)
    }

    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = self.encoder.named_tensors("enc");
        out.push(("mu.w".to_string(), &self.mu_head.weights));
        out.push(("mu.b".to_string(), &self.mu_head.bias));
        out.push(("lv.w".to_string(), &self.logvar_head.weights));
        out.push(("lv.b".to_string(), &self.logvar_head.bias));
        out.extend(self.decoder.named_tensors("dec"));
        for (b, branch) in self.branches.iter().enumerate() {
            out.extend(branch.named_tensors(&format!("br{b}")));
        }
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = self.encoder.named_tensors_mut("enc");
        out.push(("mu.w".to_string(), &mut self.mu_head.weights));
        out.push(("mu.b".to_string(), &mut self.mu_head.bias));
        out.push(("lv.w".to_string(), &mut self.logvar_head.weights));
        out.push(("lv.b".to_string(), &mut self.logvar_head.bias));
        out.extend(self.decoder.named_tensors_mut("dec"));
        for (b, branch) in self.branches.iter_mut().enumerate() {
            out.extend(branch.named_tensors_mut(&format!("br{b}")));
        }
        out
    }
}

/// Per-tensor gradients in the same layout as the model.
pub struct ModelGrads {
    pub encoder: MlpGrads,
    pub mu_w: Tensor,
    pub mu_b: Tensor,
    pub lv_w: Tensor,
    pub lv_b: Tensor,
    pub decoder: MlpGrads,
    pub branches: Vec<MlpGrads>,
}

impl ModelGrads {
    pub fn zero(model: &DcvaeModel) -> Self {
        ModelGrads {
            encoder: model.encoder.zero_grads(),
            mu_w: Tensor::zeros(model.mu_head.weights.shape()),
            mu_b: Tensor::zeros(model.mu_head.bias.shape()),
            lv_w: Tensor::zeros(model.logvar_head.weights.shape()),
            lv_b: Tensor::zeros(model.logvar_head.bias.shape()),
            decoder: model.decoder.zero_grads(),
            branches: model.branches.iter().map(Mlp::zero_grads).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &ModelGrads) -> Result<(), DcvaeError> {
        self.encoder.accumulate(&other.encoder)?;
        for (a, b) in [
            (&mut self.mu_w, &other.mu_w),
            (&mut self.mu_b, &other.mu_b),
            (&mut self.lv_w, &other.lv_w),
            (&mut self.lv_b, &other.lv_b),
        ] {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        self.decoder.accumulate(&other.decoder)?;
        for (a, b) in self.branches.iter_mut().zip(&other.branches) {
            a.accumulate(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.encoder.scale(factor);
        for t in [&mut self.mu_w, &mut self.mu_b, &mut self.lv_w, &mut self.lv_b] {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
        self.decoder.scale(factor);
        for b in &mut self.branches {
            b.scale(factor);
        }
    }

    /// Flattened in the model's `flat_params` order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.encoder.flatten();
        out.extend_from_slice(self.mu_w.data());
        out.extend_from_slice(self.mu_b.data());
        out.extend_from_slice(self.lv_w.data());
        out.extend_from_slice(self.lv_b.data());
        out.extend(self.decoder.flatten());
        for b in &self.branches {
            out.extend(b.flatten());
        }
        out
    }
}

pub fn save_model(path: &Path, model: &DcvaeModel) -> Result<(), DcvaeError> {
    let meta = serde_json::json!({
        "kind": "dcvae",
        "config": model.config,
        "history": model.history,
    });
    save_checkpoint(path, &meta, &model.named_tensors())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<DcvaeModel, DcvaeError> {
    let (meta, tensors) = load_checkpoint(path)?;
    if meta.get("kind").and_then(|v| v.as_str()) != Some("dcvae") {
        return Err(DcvaeError::Format("checkpoint is not a dcvae model".into()));
    }
    let config: DcvaeConfig = serde_json::from_value(
        meta.get("config").cloned().ok_or_else(|| DcvaeError::Format("missing config".into()))?,
    )?;
    let history: Vec<EpochStats> = serde_json::from_value(
        meta.get("history")
            .cloned()
            .ok_or_else(|| DcvaeError::Format("missing history".into()))?,
    )?;
    let mut model = DcvaeModel::init(&config)?;
    model.history = history;

    let mut by_name: BTreeMap<String, Tensor> =
        tensors.into_iter().map(|ct| (ct.name, ct.tensor)).collect();
    for (name, slot) in model.named_tensors_mut() {
        let found = by_name
            .remove(&name)
            .ok_or_else(|| DcvaeError::Format(format!("checkpoint missing tensor {name:?}")))?;
        if found.shape() != slot.shape() {
            return Err(DcvaeError::Format(format!(
                "tensor {name:?} has shape {:?}, expected {:?}",
                found.shape(),
                slot.shape()
            )));
        }
        slot.data_mut().copy_from_slice(found.data());
    }
    if let Some((name, _)) = by_name.into_iter().next() {
        return Err(DcvaeError::Format(format!("checkpoint has unexpected tensor {name:?}")));
    }
    Ok(model)
}
