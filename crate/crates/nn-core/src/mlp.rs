use rand_chacha::ChaCha8Rng;

use crate::layer::{dense_backward, dense_forward, DenseLayer};
use crate::loss::{relu, relu_grad};
use crate::tensor::Tensor;
use crate::NnError;

/// Per-layer activation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Act {
    Relu,
    Identity,
}

impl Act {
    fn apply(self, z: f64) -> f64 {
        match self {
            Act::Relu => relu(z),
            Act::Identity => z,
        }
    }

    fn grad(self, z: f64) -> f64 {
        match self {
            Act::Relu => relu_grad(z),
            Act::Identity => 1.0,
        }
    }
}

/// Stack of dense layers with one activation per layer.
#[derive(Clone, PartialEq, Debug)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    acts: Vec<Act>,
}

/// Pre-activations and post-activations of one forward pass.
/// `xs[i]` is the input to layer `i`; `xs.last()` is the network output;
/// `zs[i]` is layer `i`'s pre-activation.
#[derive(Clone, PartialEq, Debug)]
pub struct MlpCache {
    pub xs: Vec<Vec<f64>>,
    pub zs: Vec<Vec<f64>>,
}

/// Per-layer weight and bias gradients, same order as the layers.
#[derive(Clone, PartialEq, Debug)]
pub struct MlpGrads {
    pub dw: Vec<Tensor>,
    pub db: Vec<Tensor>,
}

impl MlpGrads {
    /// Element-wise accumulate another gradient set into this one.
    pub fn accumulate(&mut self, other: &MlpGrads) -> Result<(), NnError> {
        if self.dw.len() != other.dw.len() {
            return Err(NnError::ShapeMismatch {
                expected: self.dw.len(),
                got: other.dw.len(),
                what: "gradient layer count",
            });
        }
        for (a, b) in self.dw.iter_mut().zip(&other.dw).chain(self.db.iter_mut().zip(&other.db)) {
            if a.shape() != b.shape() {
                return Err(NnError::ShapeMismatch {
                    expected: a.len(),
                    got: b.len(),
                    what: "gradient tensor shape",
                });
            }
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Scale every gradient entry, e.g. for batch averaging.
    pub fn scale(&mut self, factor: f64) {
        for t in self.dw.iter_mut().chain(self.db.iter_mut()) {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
    }

    /// Flatten all gradients in layer order, weights before bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.dw.iter().zip(&self.db) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b.data());
        }
        out
    }
}

impl Mlp {
    /// Build from a width list `[in, h1, ..., out]`; every hidden layer is
    /// ReLU and the final layer is linear.
    pub fn xavier(widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Self, NnError> {
        if widths.len() < 2 {
            return Err(NnError::ShapeMismatch {
                expected: 2,
                got: widths.len(),
                what: "mlp width list",
            });
        }
        if widths.contains(&0) {
            return Err(NnError::ShapeMismatch { expected: 1, got: 0, what: "mlp layer width" });
        }
        let n = widths.len() - 1;
        let mut layers = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n);
        for i in 0..n {
            layers.push(DenseLayer::xavier(widths[i], widths[i + 1], rng));
            acts.push(if i + 1 == n { Act::Identity } else { Act::Relu });
        }
        Ok(Mlp { layers, acts })
    }

    pub fn from_parts(layers: Vec<DenseLayer>, acts: Vec<Act>) -> Result<Self, NnError> {
        if layers.is_empty() || layers.len() != acts.len() {
            return Err(NnError::ShapeMismatch {
                expected: layers.len().max(1),
                got: acts.len(),
                what: "mlp activation list",
            });
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(NnError::ShapeMismatch {
                    expected: pair[0].out_dim(),
                    got: pair[1].in_dim(),
                    what: "mlp layer chaining",
                });
            }
        }
        Ok(Mlp { layers, acts })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn acts(&self) -> &[Act] {
        &self.acts
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut cache = self.forward_cached(x)?;
        Ok(cache.xs.pop().expect("forward_cached always yields an output"))
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<MlpCache, NnError> {
        let mut xs = vec![x.to_vec()];
        let mut zs = Vec::with_capacity(self.layers.len());
        for (layer, act) in self.layers.iter().zip(&self.acts) {
            let z = dense_forward(layer, xs.last().expect("non-empty"))?;
            xs.push(z.iter().map(|&v| act.apply(v)).collect());
            zs.push(z);
        }
        Ok(MlpCache { xs, zs })
    }

    /// Backpropagate `dy` (gradient at the network output) through the
    /// cached pass; returns parameter gradients and the input gradient.
    pub fn backward(&self, cache: &MlpCache, dy: &[f64]) -> Result<(MlpGrads, Vec<f64>), NnError> {
        if cache.xs.len() != self.layers.len() + 1 || cache.zs.len() != self.layers.len() {
            return Err(NnError::ShapeMismatch {
                expected: self.layers.len(),
                got: cache.zs.len(),
                what: "mlp cache depth",
            });
        }
        if dy.len() != self.out_dim() {
            return Err(NnError::ShapeMismatch {
                expected: self.out_dim(),
                got: dy.len(),
                what: "mlp output gradient",
            });
        }
        let mut dw = vec![Tensor::zeros(&[0]); self.layers.len()];
        let mut db = vec![Tensor::zeros(&[0]); self.layers.len()];
        let mut grad = dy.to_vec();
        for (i, (layer, act)) in self.layers.iter().zip(&self.acts).enumerate().rev() {
            let dz: Vec<f64> =
                cache.zs[i].iter().zip(&grad).map(|(&z, &g)| act.grad(z) * g).collect();
            let g = dense_backward(layer, &cache.xs[i], &dz)?;
            dw[i] = g.dw;
            db[i] = g.db;
            grad = g.dx;
        }
        Ok((MlpGrads { dw, db }, grad))
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            dw: self.layers.iter().map(|l| Tensor::zeros(l.weights.shape())).collect(),
            db: self.layers.iter().map(|l| Tensor::zeros(l.bias.shape())).collect(),
        }
    }

    /// Flatten parameters in layer order, weights before bias; inverse of
    /// `set_flat_params`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(l.bias.data());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::ShapeMismatch {
                expected: self.param_count(),
                got: params.len(),
                what: "flat parameter vector",
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.data_mut().copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.data_mut().copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    /// Apply a flat update step `p -= delta` in `flat_params` order.
    pub fn apply_flat_delta(&mut self, delta: &[f64]) -> Result<(), NnError> {
        if delta.len() != self.param_count() {
            return Err(NnError::ShapeMismatch {
                expected: self.param_count(),
                got: delta.len(),
                what: "flat update vector",
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            for v in l.weights.data_mut() {
                *v -= delta[at];
                at += 1;
            }
            for v in l.bias.data_mut() {
                *v -= delta[at];
                at += 1;
            }
        }
        Ok(())
    }

    /// Named views of every parameter tensor, in `flat_params` order, their
    /// names prefixed so several networks can share one checkpoint.
    pub fn named_tensors(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}.{i}.w"), &l.weights));
            out.push((format!("{prefix}.{i}.b"), &l.bias));
        }
        out
    }

    /// Mutable counterpart of `named_tensors` for checkpoint restore.
    pub fn named_tensors_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("{prefix}.{i}.w"), &mut l.weights));
            out.push((format!("{prefix}.{i}.b"), &mut l.bias));
        }
        out
    }
}
