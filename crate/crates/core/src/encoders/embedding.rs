use rand::Rng;

use super::{apply_dropout, apply_mask, Mode, INIT_SCALE};
use crate::conll::{EmbeddingSet, Sentence, TokenVocabulary};
use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::tensor::Matrix;

/// Trainable `|V| x d` lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocabulary: TokenVocabulary,
    weights: Matrix,
}

impl EmbeddingTable {
    pub fn new<R: Rng + ?Sized>(vocabulary: TokenVocabulary, dim: usize, rng: &mut R) -> Self {
        let weights = Matrix::uniform(vocabulary.len(), dim, INIT_SCALE, rng);
        EmbeddingTable {
            vocabulary,
            weights,
        }
    }

    pub fn from_parts(vocabulary: TokenVocabulary, weights: Matrix) -> Result<Self> {
        if weights.rows() != vocabulary.len() {
            return Err(Error::Dimension(format!(
                "embedding table has {} rows for {} vocabulary entries",
                weights.rows(),
                vocabulary.len()
            )));
        }
        Ok(EmbeddingTable {
            vocabulary,
            weights,
        })
    }

    pub fn vocabulary(&self) -> &TokenVocabulary {
        &self.vocabulary
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    /// Zero gradient buffer with the table's shape.
    pub fn zeros_like(&self) -> Matrix {
        Matrix::zeros(self.weights.rows(), self.weights.cols())
    }
}

impl Parameters for EmbeddingTable {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![("weights".into(), &self.weights)]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        vec![("weights".into(), &mut self.weights)]
    }
}

/// Where token vectors come from: precomputed per-sentence matrices, or a
/// lookup table trained with the rest of the model.
#[derive(Debug, Clone, Copy)]
pub enum EmbeddingSource<'a> {
    Ingested(&'a EmbeddingSet),
    Trainable(&'a EmbeddingTable),
}

impl EmbeddingSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingSource::Ingested(set) => set.dim(),
            EmbeddingSource::Trainable(table) => table.dim(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmbedCache {
    token_ids: Option<Vec<usize>>,
    mask: Option<Vec<f64>>,
}

/// Row `i` is the vector for token `i`, with dropout in training mode.
pub fn embed(
    sentence: &Sentence,
    source: EmbeddingSource<'_>,
    dropout: f64,
    mut mode: Mode<'_>,
) -> Result<(Matrix, EmbedCache)> {
    let (mut x, token_ids) = match source {
        EmbeddingSource::Ingested(set) => {
            let m = set.get(&sentence.id).ok_or_else(|| {
                Error::invalid(format!("no embeddings for sentence `{}`", sentence.id))
            })?;
            if m.rows() != sentence.len() {
                return Err(Error::Dimension(format!(
                    "sentence `{}`: {} embedding rows for {} tokens",
                    sentence.id,
                    m.rows(),
                    sentence.len()
                )));
            }
            (m.clone(), None)
        }
        EmbeddingSource::Trainable(table) => {
            let ids: Vec<usize> = sentence
                .tokens
                .iter()
                .map(|t| table.vocabulary.lookup(t))
                .collect();
            let mut x = Matrix::zeros(ids.len(), table.dim());
            for (r, &id) in ids.iter().enumerate() {
                x.row_mut(r).copy_from_slice(table.weights.row(id));
            }
            (x, Some(ids))
        }
    };
    let mask = apply_dropout(&mut x, dropout, &mut mode);
    Ok((x, EmbedCache { token_ids, mask }))
}

/// Accumulates `grad_x` into `table_grad` for a trainable source; a no-op for
/// ingested embeddings.
pub fn embed_backward(cache: &EmbedCache, grad_x: &Matrix, table_grad: Option<&mut Matrix>) {
    let (Some(ids), Some(table_grad)) = (&cache.token_ids, table_grad) else {
        return;
    };
    let mut grad = grad_x.clone();
    apply_mask(&mut grad, cache.mask.as_deref());
    for (r, &id) in ids.iter().enumerate() {
        for (g, v) in table_grad.row_mut(id).iter_mut().zip(grad.row(r)) {
            *g += v;
        }
    }
}
