use crate::NnError;

/// Clamp bounds for predicted log-variances; keeps `exp` finite.
pub const LOGVAR_MIN: f64 = -10.0;
pub const LOGVAR_MAX: f64 = 10.0;

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Numerically stable logistic: never exponentiates a positive argument.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Mean and log-variance of a diagonal Gaussian, with the log-variance
/// clamped into `[LOGVAR_MIN, LOGVAR_MAX]` at construction.
#[derive(Clone, PartialEq, Debug)]
pub struct GaussianHead {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

impl GaussianHead {
    pub fn new(mu: Vec<f64>, logvar: Vec<f64>) -> Result<Self, NnError> {
        if mu.len() != logvar.len() {
            return Err(NnError::ShapeMismatch {
                expected: mu.len(),
                got: logvar.len(),
                what: "gaussian head logvar",
            });
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite { what: "gaussian head mu" });
        }
        if logvar.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite { what: "gaussian head logvar" });
        }
        let logvar = logvar.into_iter().map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)).collect();
        Ok(GaussianHead { mu, logvar })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// `KL(N(mu, diag(exp(logvar))) || N(0, I))` in closed form:
/// `0.5 * sum(mu^2 + exp(logvar) - 1 - logvar)`, together with its
/// gradients `d/dmu = mu` and `d/dlogvar = 0.5 (exp(logvar) - 1)`.
pub fn kl_diag_gaussian(head: &GaussianHead) -> (f64, Vec<f64>, Vec<f64>) {
    let mut kl = 0.0;
    let mut dmu = Vec::with_capacity(head.dim());
    let mut dlogvar = Vec::with_capacity(head.dim());
    for (&m, &lv) in head.mu.iter().zip(&head.logvar) {
        let ev = lv.exp();
        kl += 0.5 * (m * m + ev - 1.0 - lv);
        dmu.push(m);
        dlogvar.push(0.5 * (ev - 1.0));
    }
    (kl, dmu, dlogvar)
}

/// `z = mu + exp(logvar / 2) * eps`.
pub fn reparameterize(head: &GaussianHead, eps: &[f64]) -> Result<Vec<f64>, NnError> {
    if eps.len() != head.dim() {
        return Err(NnError::ShapeMismatch {
            expected: head.dim(),
            got: eps.len(),
            what: "reparameterization noise",
        });
    }
    Ok(head
        .mu
        .iter()
        .zip(&head.logvar)
        .zip(eps)
        .map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e)
        .collect())
}

/// Backward pass of `reparameterize` for fixed noise:
/// `dz/dmu = 1`, `dz/dlogvar = 0.5 * exp(logvar / 2) * eps`.
pub fn reparameterize_backward(
    head: &GaussianHead,
    eps: &[f64],
    dz: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    if eps.len() != head.dim() || dz.len() != head.dim() {
        return Err(NnError::ShapeMismatch {
            expected: head.dim(),
            got: eps.len().max(dz.len()),
            what: "reparameterization backward",
        });
    }
    let dmu = dz.to_vec();
    let dlogvar = head
        .logvar
        .iter()
        .zip(eps)
        .zip(dz)
        .map(|((&lv, &e), &g)| 0.5 * (0.5 * lv).exp() * e * g)
        .collect();
    Ok((dmu, dlogvar))
}

/// Summed binary cross-entropy on logits, in the overflow-free form
/// `max(l, 0) - l t + ln(1 + exp(-|l|))`, with gradient
/// `d/dl = sigmoid(l) - t`.
pub fn recon_loss_bce(logits: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if logits.len() != targets.len() {
        return Err(NnError::ShapeMismatch {
            expected: targets.len(),
            got: logits.len(),
            what: "reconstruction logits",
        });
    }
    let mut loss = 0.0;
    let mut dlogits = Vec::with_capacity(logits.len());
    for (&l, &t) in logits.iter().zip(targets) {
        if !(0.0..=1.0).contains(&t) {
            return Err(NnError::NonFinite { what: "bce target outside [0, 1]" });
        }
        loss += l.max(0.0) - l * t + (-l.abs()).exp().ln_1p();
        dlogits.push(sigmoid(l) - t);
    }
    if !loss.is_finite() {
        return Err(NnError::NonFinite { what: "bce loss" });
    }
    Ok((loss, dlogits))
}

/// Number of entries where thresholding the logit at 0 (probability 0.5)
/// disagrees with the binary target.
pub fn misrepresented_count(logits: &[f64], targets: &[f64]) -> Result<usize, NnError> {
    if logits.len() != targets.len() {
        return Err(NnError::ShapeMismatch {
            expected: targets.len(),
            got: logits.len(),
            what: "misrepresentation logits",
        });
    }
    Ok(logits
        .iter()
        .zip(targets)
        .filter(|&(&l, &t)| (l >= 0.0) != (t >= 0.5))
        .count())
}
