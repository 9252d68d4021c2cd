use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::tensor::Matrix;

/// Moment accumulators and hyperparameters for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl OptimizerState {
    /// Zeroed accumulators shaped like `params`, with the usual defaults
    /// (β1 = 0.9, β2 = 0.999, ε = 1e-8).
    pub fn new<P: Parameters + ?Sized>(params: &P) -> Self {
        let zeros: Vec<Matrix> = params
            .named_tensors()
            .iter()
            .map(|(_, m)| Matrix::zeros(m.rows(), m.cols()))
            .collect();
        OptimizerState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn check_shapes<P: Parameters + ?Sized>(
    params: &P,
    grads: &P,
    state: &OptimizerState,
) -> Result<()> {
    let (p, g) = (params.named_tensors(), grads.named_tensors());
    if p.len() != g.len() || p.len() != state.first.len() {
        return Err(Error::shape(format!(
            "{} parameter tensors, {} gradient tensors, {} accumulators",
            p.len(),
            g.len(),
            state.first.len()
        )));
    }
    for (((name, pm), (_, gm)), acc) in p.iter().zip(&g).zip(&state.first) {
        if pm.shape() != gm.shape() || pm.shape() != acc.shape() {
            return Err(Error::shape(format!(
                "tensor `{name}`: parameter {:?}, gradient {:?}, accumulator {:?}",
                pm.shape(),
                gm.shape(),
                acc.shape()
            )));
        }
        if !gm.is_finite() {
            return Err(Error::NonFinite(format!("gradient of `{name}`")));
        }
    }
    Ok(())
}

/// One bias-corrected Adam update. Nothing is modified when an error is
/// returned.
pub fn adam_step<P: Parameters + ?Sized>(
    params: &mut P,
    grads: &P,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    check_shapes(params, grads, state)?;
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let grads = grads.named_tensors();
    for (i, (_, p)) in params.named_tensors_mut().into_iter().enumerate() {
        let g = grads[i].1.as_slice();
        let m = state.first[i].as_mut_slice();
        let v = state.second[i].as_mut_slice();
        for (j, w) in p.as_mut_slice().iter_mut().enumerate() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            *w -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
        }
    }
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm<P: Parameters + ?Sized>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads
        .named_tensors()
        .iter()
        .map(|(_, m)| m.squared_norm())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        for (_, m) in grads.named_tensors_mut() {
            m.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}
