//! Just enough neural-network machinery for the training pipeline: dense
//! layers over f64 tensors, ReLU/sigmoid, stable binary cross-entropy,
//! diagonal-Gaussian KL, the reparameterization trick, bias-corrected Adam,
//! a finite-difference gradient checker, and a binary checkpoint format.
//! Everything is deterministic given a seed and single-threaded use.

mod adam;
mod checkpoint;
mod gradcheck;
mod layer;
mod loss;
mod mlp;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointTensor};
pub use gradcheck::grad_check;
pub use layer::{dense_backward, dense_forward, DenseGrads, DenseLayer};
pub use loss::{
    kl_diag_gaussian, misrepresented_count, recon_loss_bce, relu, relu_grad, reparameterize,
    reparameterize_backward, sigmoid, sigmoid_grad, GaussianHead, LOGVAR_MAX, LOGVAR_MIN,
};
pub use mlp::{Act, Mlp, MlpCache, MlpGrads};
pub use tensor::Tensor;

use std::fmt;

/// Errors from shape checks, numerics, and checkpoint I/O.
#[derive(Debug)]
pub enum NnError {
    ShapeMismatch { expected: usize, got: usize, what: &'static str },
    NonFinite { what: &'static str },
    /// A NaN gradient reached the optimizer; the training step must abort.
    NanGradient,
    Format(String),
    Json(serde_json::Error),
    Io(std::io::Error),
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::ShapeMismatch { expected, got, what } => {
                write!(f, "shape mismatch in {what}: expected length {expected}, got {got}")
            }
            NnError::NonFinite { what } => write!(f, "non-finite value in {what}"),
            NnError::NanGradient => write!(f, "NaN gradient reached the optimizer"),
            NnError::Format(msg) => write!(f, "malformed checkpoint: {msg}"),
            NnError::Json(e) => write!(f, "json error: {e}"),
            NnError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for NnError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            NnError::Json(e) => Some(e),
            NnError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<serde_json::Error> for NnError {
    fn from(e: serde_json::Error) -> Self {
        NnError::Json(e)
    }
}

impl From<std::io::Error> for NnError {
    fn from(e: std::io::Error) -> Self {
        NnError::Io(e)
    }
}
