use rand::Rng;

use super::INIT_SCALE;
use crate::crf::Emissions;
use crate::error::Result;
use crate::params::Parameters;
use crate::tensor::{dot, Matrix};

/// Dense `features -> k` layer producing emission scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionParams {
    /// `k x m`
    pub weight: Matrix,
    /// `1 x k`
    pub bias: Matrix,
}

impl ProjectionParams {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, k: usize, rng: &mut R) -> Self {
        ProjectionParams {
            weight: Matrix::uniform(k, input_dim, INIT_SCALE, rng),
            bias: Matrix::zeros(1, k),
        }
    }

    pub fn zeros(input_dim: usize, k: usize) -> Self {
        ProjectionParams {
            weight: Matrix::zeros(k, input_dim),
            bias: Matrix::zeros(1, k),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub(crate) fn check(&self) -> Result<()> {
        self.bias.expect_shape(1, self.output_dim(), "projection bias")
    }
}

impl Parameters for ProjectionParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        vec![
            ("weight".into(), &mut self.weight),
            ("bias".into(), &mut self.bias),
        ]
    }
}

/// Row `i` of the result is `W · features_i + b`.
pub fn project(features: &Matrix, params: &ProjectionParams) -> Result<Emissions> {
    params.check()?;
    features.expect_shape(features.rows(), params.input_dim(), "projection input")?;
    let k = params.output_dim();
    let mut out = Matrix::zeros(features.rows(), k);
    for r in 0..features.rows() {
        let x = features.row(r);
        for (j, o) in out.row_mut(r).iter_mut().enumerate() {
            *o = dot(params.weight.row(j), x) + params.bias.as_slice()[j];
        }
    }
    Emissions::new(out)
}

/// Gradients of a scalar loss with respect to the input features and the
/// layer parameters, given `grad_out = dL/d(emissions)`.
pub fn project_backward(
    features: &Matrix,
    params: &ProjectionParams,
    grad_out: &Matrix,
) -> Result<(Matrix, ProjectionParams)> {
    params.check()?;
    let (n, m, k) = (features.rows(), params.input_dim(), params.output_dim());
    features.expect_shape(n, m, "projection input")?;
    grad_out.expect_shape(n, k, "projection output gradient")?;
    let mut grads = ProjectionParams::zeros(m, k);
    let mut grad_x = Matrix::zeros(n, m);
    for r in 0..n {
        let x = features.row(r);
        for j in 0..k {
            let g = grad_out[(r, j)];
            if g == 0.0 {
                continue;
            }
            grads.bias.as_mut_slice()[j] += g;
            for (w, xv) in grads.weight.row_mut(j).iter_mut().zip(x) {
                *w += g * xv;
            }
            for (gx, w) in grad_x.row_mut(r).iter_mut().zip(params.weight.row(j)) {
                *gx += g * w;
            }
        }
    }
    Ok((grad_x, grads))
}
