use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;
use crate::NnError;

/// Fully-connected layer `y = W x + b` with `W` stored row-major as
/// `(out, in)`.
#[derive(Clone, PartialEq, Debug)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    /// Xavier-uniform initialization: weights from
    /// `U(-sqrt(6/(in+out)), +sqrt(6/(in+out)))`, zero bias.
    pub fn xavier(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data: Vec<f64> =
            (0..in_dim * out_dim).map(|_| rng.random_range(-limit..limit)).collect();
        DenseLayer {
            weights: Tensor::from_vec(&[out_dim, in_dim], data).expect("bounded init"),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }
}

/// Gradients of one dense layer application.
#[derive(Clone, PartialEq, Debug)]
pub struct DenseGrads {
    pub dx: Vec<f64>,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<Vec<f64>, NnError> {
    let (out_dim, in_dim) = (layer.out_dim(), layer.in_dim());
    if x.len() != in_dim {
        return Err(NnError::ShapeMismatch { expected: in_dim, got: x.len(), what: "dense input" });
    }
    let w = layer.weights.data();
    let b = layer.bias.data();
    let mut y = vec![0.0; out_dim];
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let mut acc = b[o];
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        y[o] = acc;
    }
    Ok(y)
}

/// Analytic gradients: `dx = W^T dy`, `dW = dy x^T`, `db = dy`.
pub fn dense_backward(layer: &DenseLayer, x: &[f64], dy: &[f64]) -> Result<DenseGrads, NnError> {
    let (out_dim, in_dim) = (layer.out_dim(), layer.in_dim());
    if x.len() != in_dim {
        return Err(NnError::ShapeMismatch { expected: in_dim, got: x.len(), what: "dense input" });
    }
    if dy.len() != out_dim {
        return Err(NnError::ShapeMismatch {
            expected: out_dim,
            got: dy.len(),
            what: "dense upstream gradient",
        });
    }
    let w = layer.weights.data();
    let mut dx = vec![0.0; in_dim];
    let mut dw = vec![0.0; out_dim * in_dim];
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let g = dy[o];
        for i in 0..in_dim {
            dx[i] += row[i] * g;
            dw[o * in_dim + i] = g * x[i];
        }
    }
    Ok(DenseGrads {
        dx,
        dw: Tensor::from_vec(&[out_dim, in_dim], dw)?,
        db: Tensor::from_vec(&[out_dim], dy.to_vec())?,
    })
}
