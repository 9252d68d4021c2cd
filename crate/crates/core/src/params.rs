//! Named access to parameter tensors, shared by the optimizer and checkpoints.

use crate::tensor::Matrix;

pub trait Parameters {
    /// Tensors in a fixed order with stable, unique names.
    fn named_tensors(&self) -> Vec<(String, &Matrix)>;

    /// Same order and names as [`Parameters::named_tensors`].
    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)>;

    fn parameter_count(&self) -> usize {
        self.named_tensors()
            .iter()
            .map(|(_, m)| m.as_slice().len())
            .sum()
    }

    fn zero(&mut self) {
        for (_, m) in self.named_tensors_mut() {
            m.fill(0.0);
        }
    }
}

pub(crate) fn prefixed<'a>(
    prefix: &str,
    tensors: Vec<(String, &'a Matrix)>,
) -> impl Iterator<Item = (String, &'a Matrix)> + 'a {
    let prefix = prefix.to_string();
    tensors
        .into_iter()
        .map(move |(name, m)| (format!("{prefix}.{name}"), m))
}

pub(crate) fn prefixed_mut<'a>(
    prefix: &str,
    tensors: Vec<(String, &'a mut Matrix)>,
) -> impl Iterator<Item = (String, &'a mut Matrix)> + 'a {
    let prefix = prefix.to_string();
    tensors
        .into_iter()
        .map(move |(name, m)| (format!("{prefix}.{name}"), m))
}

/// A bare matrix is a single tensor named `value`.
impl Parameters for Matrix {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![("value".into(), self)]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        vec![("value".into(), self)]
    }
}
