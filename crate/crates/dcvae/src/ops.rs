use nn_core::{
    dense_backward, dense_forward, kl_diag_gaussian, recon_loss_bce, reparameterize,
    reparameterize_backward, sigmoid, GaussianHead, MlpCache, LOGVAR_MAX, LOGVAR_MIN,
};
use surrogate_sim::CONDITION_COUNT;
use voxel_core::{ProbGrid, VoxelGrid};

use crate::config::Mode;
use crate::model::{DcvaeModel, ModelGrads};
use crate::DcvaeError;

/// Per-design loss decomposition; `total` is exactly `recon + kl`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Everything the backward pass needs from one full forward pass.
pub(crate) struct ForwardPass {
    pub xf: Vec<f64>,
    pub enc_cache: MlpCache,
    pub branch_caches: Vec<MlpCache>,
    pub head_in: Vec<f64>,
    /// Logvar-head output before clamping; clamped entries get zero
    /// gradient.
    pub lv_raw: Vec<f64>,
    pub head: GaussianHead,
    pub eps: Vec<f64>,
    pub dec_cache: MlpCache,
    pub logits: Vec<f64>,
}

struct Encoded {
    xf: Vec<f64>,
    enc_cache: MlpCache,
    branch_caches: Vec<MlpCache>,
    a_m: Vec<f64>,
    head_in: Vec<f64>,
    lv_raw: Vec<f64>,
    head: GaussianHead,
}

fn check_conditions(c: &[f64; CONDITION_COUNT]) -> Result<(), DcvaeError> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(DcvaeError::BadInput("condition vector has a non-finite entry".into()));
    }
    Ok(())
}

impl DcvaeModel {
    /// Flatten a grid into a `{0,1}` vector in flat-index order.
    pub(crate) fn flatten_grid(&self, x: &VoxelGrid) -> Result<Vec<f64>, DcvaeError> {
        let dims = self.config.grid_dims()?;
        if x.dims() != dims {
            return Err(DcvaeError::BadInput(format!(
                "design dims {:?} do not match model dims {:?}",
                x.dims(),
                dims
            )));
        }
        Ok((0..dims.total()).map(|i| if x.get_flat(i) { 1.0 } else { 0.0 }).collect())
    }

    fn branch_embed_cached(
        &self,
        c: &[f64; CONDITION_COUNT],
    ) -> Result<(Vec<f64>, Vec<MlpCache>), DcvaeError> {
        check_conditions(c)?;
        if self.config.mode != Mode::DeepInput {
            return Err(DcvaeError::BadInput(
                "branch embedding requires a deep-input model".into(),
            ));
        }
        let mut a_m = Vec::with_capacity(self.config.a_m_width());
        let mut caches = Vec::with_capacity(self.branches.len());
        for (cat, branch) in self.config.partition.iter().zip(&self.branches) {
            let sub: Vec<f64> = cat.iter().map(|&i| c[i]).collect();
            let cache = branch.forward_cached(&sub)?;
            a_m.extend_from_slice(cache.xs.last().expect("branch output"));
            caches.push(cache);
        }
        Ok((a_m, caches))
    }

    /// Concatenated per-category condition embeddings, categories in
    /// partition order.
    pub fn branch_embed(&self, c: &[f64; CONDITION_COUNT]) -> Result<Vec<f64>, DcvaeError> {
        Ok(self.branch_embed_cached(c)?.0)
    }

    fn encode_cached(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
    ) -> Result<Encoded, DcvaeError> {
        check_conditions(c)?;
        let xf = self.flatten_grid(x)?;
        let (enc_in, a_m, branch_caches) = match self.config.mode {
            Mode::DeepInput => {
                let (a_m, caches) = self.branch_embed_cached(c)?;
                (xf.clone(), a_m, caches)
            }
            Mode::FcBaseline => {
                let mut enc_in = xf.clone();
                enc_in.extend_from_slice(c);
                (enc_in, Vec::new(), Vec::new())
            }
        };
        let enc_cache = self.encoder.forward_cached(&enc_in)?;
        let mut head_in = enc_cache.xs.last().expect("encoder output").clone();
        head_in.extend_from_slice(&a_m);
        let mu = dense_forward(&self.mu_head, &head_in)?;
        let lv_raw = dense_forward(&self.logvar_head, &head_in)?;
        let head = GaussianHead::new(mu, lv_raw.clone())?;
        Ok(Encoded { xf, enc_cache, branch_caches, a_m, head_in, lv_raw, head })
    }

    /// Posterior head for one (design, conditions) pair.
    pub fn encode(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
    ) -> Result<GaussianHead, DcvaeError> {
        Ok(self.encode_cached(x, c)?.head)
    }

    fn decode_cached(
        &self,
        z: &[f64],
        c: &[f64; CONDITION_COUNT],
        a_m: Option<&[f64]>,
    ) -> Result<MlpCache, DcvaeError> {
        check_conditions(c)?;
        if z.len() != self.config.latent_dim {
            return Err(DcvaeError::BadInput(format!(
                "latent code has length {}, expected {}",
                z.len(),
                self.config.latent_dim
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(DcvaeError::BadInput("latent code has a non-finite entry".into()));
        }
        let mut dec_in = z.to_vec();
        match self.config.mode {
            Mode::DeepInput => match a_m {
                Some(a_m) => dec_in.extend_from_slice(a_m),
                None => dec_in.extend(self.branch_embed(c)?),
            },
            Mode::FcBaseline => dec_in.extend_from_slice(c),
        }
        self.decoder.forward_cached(&dec_in).map_err(DcvaeError::from)
    }

    /// Voxel fill probabilities and the raw logits for a latent code.
    pub fn decode(
        &self,
        z: &[f64],
        c: &[f64; CONDITION_COUNT],
    ) -> Result<(ProbGrid, Vec<f64>), DcvaeError> {
        let cache = self.decode_cached(z, c, None)?;
        let logits = cache.xs.last().expect("decoder output").clone();
        let probs = ProbGrid::new(self.config.grid_dims()?, logits.iter().map(|&l| sigmoid(l)).collect())?;
        Ok((probs, logits))
    }

    /// Deterministic reconstruction: decodes at `z = mu`, no sampling.
    pub fn reconstruct(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
    ) -> Result<(ProbGrid, Vec<f64>), DcvaeError> {
        let enc = self.encode_cached(x, c)?;
        let a_m = if self.config.mode == Mode::DeepInput { Some(&enc.a_m[..]) } else { None };
        let cache = self.decode_cached(&enc.head.mu, c, a_m)?;
        let logits = cache.xs.last().expect("decoder output").clone();
        let probs = ProbGrid::new(self.config.grid_dims()?, logits.iter().map(|&l| sigmoid(l)).collect())?;
        Ok((probs, logits))
    }

    pub(crate) fn forward(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
        eps: &[f64],
    ) -> Result<ForwardPass, DcvaeError> {
        let enc = self.encode_cached(x, c)?;
        let z = reparameterize(&enc.head, eps)?;
        let a_m = if self.config.mode == Mode::DeepInput { Some(&enc.a_m[..]) } else { None };
        let dec_cache = self.decode_cached(&z, c, a_m)?;
        let logits = dec_cache.xs.last().expect("decoder output").clone();
        Ok(ForwardPass {
            xf: enc.xf,
            enc_cache: enc.enc_cache,
            branch_caches: enc.branch_caches,
            head_in: enc.head_in,
            lv_raw: enc.lv_raw,
            head: enc.head,
            eps: eps.to_vec(),
            dec_cache,
            logits,
        })
    }

    /// Evidence-lower-bound pieces for one pair under fixed noise.
    pub fn losses(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
        eps: &[f64],
    ) -> Result<LossParts, DcvaeError> {
        let pass = self.forward(x, c, eps)?;
        let (recon, _) = recon_loss_bce(&pass.logits, &pass.xf)?;
        let (kl, _, _) = kl_diag_gaussian(&pass.head);
        Ok(LossParts { total: recon + kl, recon, kl })
    }

    /// Loss plus analytic gradients for every parameter, in
    /// [`DcvaeModel::flat_params`] order.
    pub fn loss_and_grads(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
        eps: &[f64],
    ) -> Result<(LossParts, ModelGrads), DcvaeError> {
        let pass = self.forward(x, c, eps)?;
        let (recon, dlogits) = recon_loss_bce(&pass.logits, &pass.xf)?;
        let (kl, dmu_kl, dlv_kl) = kl_diag_gaussian(&pass.head);
        let parts = LossParts { total: recon + kl, recon, kl };

        let mut grads = ModelGrads::zero(self);

        let (dec_grads, ddec_in) = self.decoder.backward(&pass.dec_cache, &dlogits)?;
        grads.decoder = dec_grads;

        let latent = self.config.latent_dim;
        let dz = &ddec_in[..latent];
        let (dmu_rep, dlv_rep) = reparameterize_backward(&pass.head, &pass.eps, dz)?;
        let dmu: Vec<f64> = dmu_rep.iter().zip(&dmu_kl).map(|(a, b)| a + b).collect();
        let dlv: Vec<f64> = dlv_rep
            .iter()
            .zip(&dlv_kl)
            .zip(&pass.lv_raw)
            .map(|((a, b), &raw)| {
                // The head clamps logvar; outside the open interval the
                // clamp is flat and the gradient vanishes.
                if raw > LOGVAR_MIN && raw < LOGVAR_MAX {
                    a + b
                } else {
                    0.0
                }
            })
            .collect();

        let mu_g = dense_backward(&self.mu_head, &pass.head_in, &dmu)?;
        let lv_g = dense_backward(&self.logvar_head, &pass.head_in, &dlv)?;
        grads.mu_w = mu_g.dw;
        grads.mu_b = mu_g.db;
        grads.lv_w = lv_g.dw;
        grads.lv_b = lv_g.db;

        let h_width = self.encoder.out_dim();
        let dh: Vec<f64> =
            mu_g.dx[..h_width].iter().zip(&lv_g.dx[..h_width]).map(|(a, b)| a + b).collect();
        let (enc_grads, _) = self.encoder.backward(&pass.enc_cache, &dh)?;
        grads.encoder = enc_grads;

        if self.config.mode == Mode::DeepInput {
            // a_M feeds both the heads and the decoder input; sum both paths.
            let per = self.config.branch_widths.last().copied().expect("validated non-empty");
            for (b, branch) in self.branches.iter().enumerate() {
                let lo = b * per;
                let da: Vec<f64> = (0..per)
                    .map(|i| {
                        mu_g.dx[h_width + lo + i]
                            + lv_g.dx[h_width + lo + i]
                            + ddec_in[latent + lo + i]
                    })
                    .collect();
                let (bg, _) = branch.backward(&pass.branch_caches[b], &da)?;
                grads.branches[b] = bg;
            }
        }
        Ok((parts, grads))
    }

    /// Count of voxels whose thresholded reconstruction disagrees with the
    /// design, using `z = mu`.
    pub fn misrepresented(
        &self,
        x: &VoxelGrid,
        c: &[f64; CONDITION_COUNT],
    ) -> Result<usize, DcvaeError> {
        let (_, logits) = self.reconstruct(x, c)?;
        let xf = self.flatten_grid(x)?;
        nn_core::misrepresented_count(&logits, &xf).map_err(DcvaeError::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DcvaeConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use voxel_core::Dims;

    fn tiny_config(mode: Mode, seed: u64) -> DcvaeConfig {
        DcvaeConfig {
            dims: [4, 4, 4],
            encoder_widths: vec![16, 8],
            latent_dim: 4,
            branch_widths: vec![2, 3],
            partition: crate::DEFAULT_PARTITION.iter().map(|c| c.to_vec()).collect(),
            epochs: 1,
            batch_size: 4,
            lr: 1e-3,
            seed,
            mode,
        }
    }

    fn random_grid(dims: Dims, rng: &mut ChaCha8Rng) -> VoxelGrid {
        let mut g = VoxelGrid::new(dims);
        for i in 0..dims.total() {
            g.set_flat(i, rng.random_bool(0.5));
        }
        g
    }

    fn random_conditions(rng: &mut ChaCha8Rng) -> [f64; 9] {
        let mut c = [0.0; 9];
        for v in &mut c {
            *v = rng.random_range(-1.5..1.5);
        }
        c
    }

    #[test]
    fn zeroed_branches_embed_everything_to_zero() {
        let mut model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 3)).unwrap();
        let zeros = vec![0.0; model.param_count()];
        model.set_flat_params(&zeros).unwrap();
        let a_m = model.branch_embed(&[0.0; 9]).unwrap();
        assert_eq!(a_m, vec![0.0; 15]);
        // And also for nonzero conditions, since every weight is zero.
        let a_m = model.branch_embed(&[1.0; 9]).unwrap();
        assert_eq!(a_m, vec![0.0; 15]);
    }

    #[test]
    fn branch_embedding_depends_on_position_within_and_across_categories() {
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 4)).unwrap();
        let base = [0.3, -0.7, 0.1, 0.2, 0.5, -0.2, 0.9, -0.4, 0.6];
        let a = model.branch_embed(&base).unwrap();
        // Swap within category k1 (indices 0, 1).
        let mut swapped = base;
        swapped.swap(0, 1);
        assert_ne!(model.branch_embed(&swapped).unwrap(), a);
        // Same scalar moved across categories: put c1's value into c9.
        let mut moved = base;
        moved[8] = base[0];
        moved[0] = base[8];
        assert_ne!(model.branch_embed(&moved).unwrap(), a);
        // Determinism across calls.
        assert_eq!(model.branch_embed(&base).unwrap(), a);
    }

    #[test]
    fn branch_embed_rejects_baseline_mode_and_bad_input() {
        let model = DcvaeModel::init(&tiny_config(Mode::FcBaseline, 5)).unwrap();
        assert!(model.branch_embed(&[0.0; 9]).is_err());
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 5)).unwrap();
        let mut c = [0.0; 9];
        c[3] = f64::NAN;
        assert!(model.branch_embed(&c).is_err());
    }

    #[test]
    fn encode_is_deterministic_and_condition_sensitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 6)).unwrap();
        let x = random_grid(Dims::new(4, 4, 4).unwrap(), &mut rng);
        let c = random_conditions(&mut rng);
        let h1 = model.encode(&x, &c).unwrap();
        let h2 = model.encode(&x, &c).unwrap();
        assert_eq!(h1, h2);
        let c2 = random_conditions(&mut rng);
        let h3 = model.encode(&x, &c2).unwrap();
        assert_ne!(h1.mu, h3.mu);
        assert!(h1.logvar.iter().all(|&v| (nn_core::LOGVAR_MIN..=nn_core::LOGVAR_MAX).contains(&v)));
    }

    #[test]
    fn encode_rejects_mismatched_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 7)).unwrap();
        let x = random_grid(Dims::new(4, 4, 5).unwrap(), &mut rng);
        assert!(model.encode(&x, &[0.0; 9]).is_err());
    }

    #[test]
    fn decode_probabilities_stay_strictly_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mode in [Mode::DeepInput, Mode::FcBaseline] {
            let model = DcvaeModel::init(&tiny_config(mode, 8)).unwrap();
            let z: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let c = random_conditions(&mut rng);
            let (probs, logits) = model.decode(&z, &c).unwrap();
            assert_eq!(probs.values().len(), 64);
            assert_eq!(logits.len(), 64);
            assert!(probs.values().iter().all(|&p| p > 0.0 && p < 1.0));
            let (again, _) = model.decode(&z, &c).unwrap();
            assert_eq!(again.values(), probs.values());
        }
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 8)).unwrap();
        assert!(model.decode(&[0.0; 3], &[0.0; 9]).is_err());
    }

    #[test]
    fn loss_decomposes_exactly_over_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = Dims::new(4, 4, 4).unwrap();
        for mode in [Mode::DeepInput, Mode::FcBaseline] {
            let model = DcvaeModel::init(&tiny_config(mode, 9)).unwrap();
            for _ in 0..50 {
                let x = random_grid(dims, &mut rng);
                let c = random_conditions(&mut rng);
                let eps: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let parts = model.losses(&x, &c, &eps).unwrap();
                assert_eq!(parts.total.to_bits(), (parts.recon + parts.kl).to_bits());
                assert!(parts.recon >= 0.0);
                assert!(parts.kl >= 0.0);
            }
        }
    }

    #[test]
    fn loss_vanishes_for_a_hand_built_perfect_model() {
        // Zero parameters give mu = 0, logvar = 0 (KL = 0) and let the
        // decoder see only its final bias, which we point at the design.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 10)).unwrap();
        model.set_flat_params(&vec![0.0; model.param_count()]).unwrap();
        let x = random_grid(Dims::new(4, 4, 4).unwrap(), &mut rng);
        let xf = model.flatten_grid(&x).unwrap();
        let mut params = model.flat_params();
        let bias_len = 64;
        let bias_start = params.len()
            - model.branches.iter().map(|b| b.param_count()).sum::<usize>()
            - bias_len;
        for (i, &t) in xf.iter().enumerate() {
            params[bias_start + i] = if t > 0.5 { 25.0 } else { -25.0 };
        }
        model.set_flat_params(&params).unwrap();
        let eps: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let parts = model.losses(&x, &[0.4; 9], &eps).unwrap();
        assert_eq!(parts.kl, 0.0);
        assert!(parts.total < 1e-6, "total {}", parts.total);
    }

    #[test]
    fn reconstruction_is_sampling_free_and_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 11)).unwrap();
        let x = random_grid(Dims::new(4, 4, 4).unwrap(), &mut rng);
        let c = random_conditions(&mut rng);
        let (p1, l1) = model.reconstruct(&x, &c).unwrap();
        let (p2, l2) = model.reconstruct(&x, &c).unwrap();
        for (a, b) in l1.iter().zip(&l2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in p1.values().iter().zip(p2.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn full_gradient_check_deep_input_mode() {
        full_gradient_check(Mode::DeepInput, 12);
    }

    #[test]
    fn full_gradient_check_fc_baseline_mode() {
        full_gradient_check(Mode::FcBaseline, 13);
    }

    fn full_gradient_check(mode: Mode, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = DcvaeModel::init(&tiny_config(mode, seed)).unwrap();
        // Move every parameter (biases included) off its init value so no
        // ReLU pre-activation sits exactly on the kink, where the analytic
        // subgradient and a central difference legitimately disagree.
        let jitter: Vec<f64> =
            (0..model.param_count()).map(|_| rng.random_range(-0.4..0.4)).collect();
        model.set_flat_params(&jitter).unwrap();
        let x = random_grid(Dims::new(4, 4, 4).unwrap(), &mut rng);
        let c = random_conditions(&mut rng);
        let eps: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();

        let (_, grads) = model.loss_and_grads(&x, &c, &eps).unwrap();
        let analytic = grads.flatten();
        let mut params = model.flat_params();
        let proto = model.clone();
        let f = |p: &[f64]| {
            let mut m = proto.clone();
            m.set_flat_params(p).unwrap();
            m.losses(&x, &c, &eps).unwrap().total
        };
        // The loss is O(40), so a central difference at h = 1e-5 carries
        // cancellation noise of about eps * |f| / (2h) ~ 5e-10 absolute; a
        // coordinate passes on relative error or by sitting below that
        // resolution limit.
        let h = 1e-5;
        for i in 0..params.len() {
            let orig = params[i];
            params[i] = orig + h;
            let up = f(&params);
            params[i] = orig - h;
            let down = f(&params);
            params[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let diff = (analytic[i] - numeric).abs();
            let rel = diff / (analytic[i].abs() + numeric.abs()).max(1e-8);
            assert!(
                rel < 1e-4 || diff < 1e-8,
                "param {i}: analytic {} vs numeric {numeric} (rel {rel:e})",
                analytic[i]
            );
        }
    }

    #[test]
    fn misrepresented_counts_match_hamming_after_binarize() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let model = DcvaeModel::init(&tiny_config(Mode::DeepInput, 14)).unwrap();
        let x = random_grid(Dims::new(4, 4, 4).unwrap(), &mut rng);
        let c = random_conditions(&mut rng);
        let miss = model.misrepresented(&x, &c).unwrap();
        let (probs, _) = model.reconstruct(&x, &c).unwrap();
        let bin = voxel_core::binarize(&probs, 0.5).unwrap();
        assert_eq!(miss, voxel_core::hamming(&bin, &x).unwrap());
    }
}
