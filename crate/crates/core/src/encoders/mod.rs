//! Token embeddings to per-tag scores.
//!
//! Three paths are built from these pieces:
//!
//! * embeddings → [`project`] → CRF
//! * embeddings → [`bilstm_forward`] → [`project`] → CRF
//! * embeddings → [`fc_head_forward`] (two dense layers + log-softmax)
//!
//! Every forward pass returns a cache consumed by the matching backward pass.

mod bilstm;
mod embedding;
mod fc_head;
mod projection;

use rand::{Rng, RngCore};

use crate::tensor::Matrix;

pub use bilstm::{bilstm_backward, bilstm_forward, BiLstmCache, BiLstmParams, LstmParams};
pub use embedding::{embed, embed_backward, EmbedCache, EmbeddingSource, EmbeddingTable};
pub use fc_head::{
    cross_entropy_and_grads, fc_head_forward, Activation, FcCache, FcHeadParams, FcOutput,
    CrossEntropyGrads,
};
pub use projection::{project, project_backward, ProjectionParams};

/// Range of the uniform weight initializer.
pub const INIT_SCALE: f64 = 0.1;

/// Training mode carries the RNG used for dropout; evaluation is deterministic.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

impl Mode<'_> {
    pub fn reborrow(&mut self) -> Mode<'_> {
        match self {
            Mode::Eval => Mode::Eval,
            Mode::Train(rng) => Mode::Train(&mut **rng),
        }
    }

    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Inverted dropout. Returns the multiplicative mask when one was applied.
pub(crate) fn apply_dropout(x: &mut Matrix, rate: f64, mode: &mut Mode<'_>) -> Option<Vec<f64>> {
    let Mode::Train(rng) = mode else {
        return None;
    };
    if rate <= 0.0 {
        return None;
    }
    let scale = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.as_slice().len())
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
        .collect();
    for (v, m) in x.as_mut_slice().iter_mut().zip(&mask) {
        *v *= m;
    }
    Some(mask)
}

pub(crate) fn apply_mask(grad: &mut Matrix, mask: Option<&[f64]>) {
    if let Some(mask) = mask {
        for (g, m) in grad.as_mut_slice().iter_mut().zip(mask) {
            *g *= m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dropout_is_identity_in_eval() {
        let mut x = Matrix::filled(3, 4, 2.0);
        assert!(apply_dropout(&mut x, 0.5, &mut Mode::Eval).is_none());
        assert_eq!(x, Matrix::filled(3, 4, 2.0));
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut x = Matrix::filled(200, 100, 1.0);
        let mask = apply_dropout(&mut x, 0.3, &mut Mode::Train(&mut rng)).unwrap();
        let mean = x.as_slice().iter().sum::<f64>() / 20000.0;
        assert!((mean - 1.0).abs() < 0.03);
        assert!(mask.iter().all(|&m| m == 0.0 || (m - 1.0 / 0.7).abs() < 1e-12));
    }
}
