use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{apply_dropout, apply_mask, Mode, INIT_SCALE};
use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::tensor::{dot, log_sum_exp, Matrix};

/// Nonlinearity between the two dense layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("relu")
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

/// `d -> hidden -> k` classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FcHeadParams {
    /// `hidden x d`
    pub w1: Matrix,
    /// `1 x hidden`
    pub b1: Matrix,
    /// `k x hidden`
    pub w2: Matrix,
    /// `1 x k`
    pub b2: Matrix,
    pub activation: Activation,
}

impl FcHeadParams {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: usize, k: usize, rng: &mut R) -> Self {
        FcHeadParams {
            w1: Matrix::uniform(hidden, input_dim, INIT_SCALE, rng),
            b1: Matrix::zeros(1, hidden),
            w2: Matrix::uniform(k, hidden, INIT_SCALE, rng),
            b2: Matrix::zeros(1, k),
            activation: Activation::Relu,
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize, k: usize) -> Self {
        FcHeadParams {
            w1: Matrix::zeros(hidden, input_dim),
            b1: Matrix::zeros(1, hidden),
            w2: Matrix::zeros(k, hidden),
            b2: Matrix::zeros(1, k),
            activation: Activation::Relu,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.rows()
    }

    fn check(&self) -> Result<()> {
        let (h, k) = (self.hidden(), self.output_dim());
        self.b1.expect_shape(1, h, "FC layer 1 bias")?;
        self.w2.expect_shape(k, h, "FC layer 2 weight")?;
        self.b2.expect_shape(1, k, "FC layer 2 bias")
    }
}

impl Parameters for FcHeadParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![
            ("w1".into(), &self.w1),
            ("b1".into(), &self.b1),
            ("w2".into(), &self.w2),
            ("b2".into(), &self.b2),
        ]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        vec![
            ("w1".into(), &mut self.w1),
            ("b1".into(), &mut self.b1),
            ("w2".into(), &mut self.w2),
            ("b2".into(), &mut self.b2),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FcCache {
    x: Matrix,
    /// Layer 1 pre-activation.
    pre: Matrix,
    /// Activated, dropped-out hidden layer fed to layer 2.
    hidden: Matrix,
    mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct FcOutput {
    pub logits: Matrix,
    pub log_probs: Matrix,
    pub cache: FcCache,
}

fn dense(x: &Matrix, w: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), w.rows());
    for r in 0..x.rows() {
        let xr = x.row(r);
        for (j, o) in out.row_mut(r).iter_mut().enumerate() {
            *o = dot(w.row(j), xr) + b.as_slice()[j];
        }
    }
    out
}

pub fn fc_head_forward(
    x: &Matrix,
    params: &FcHeadParams,
    dropout: f64,
    mut mode: Mode<'_>,
) -> Result<FcOutput> {
    params.check()?;
    x.expect_shape(x.rows(), params.input_dim(), "FC head input")?;
    let pre = dense(x, &params.w1, &params.b1);
    let mut hidden = pre.clone();
    match params.activation {
        Activation::Relu => hidden.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0)),
    }
    let mask = apply_dropout(&mut hidden, dropout, &mut mode);
    let logits = dense(&hidden, &params.w2, &params.b2);
    let mut log_probs = logits.clone();
    for r in 0..log_probs.rows() {
        let row = log_probs.row_mut(r);
        let lse = log_sum_exp(row);
        row.iter_mut().for_each(|v| *v -= lse);
    }
    Ok(FcOutput {
        logits,
        log_probs,
        cache: FcCache {
            x: x.clone(),
            pre,
            hidden,
            mask,
        },
    })
}

#[derive(Debug, Clone)]
pub struct CrossEntropyGrads {
    /// Mean token negative log-likelihood.
    pub loss: f64,
    pub params: FcHeadParams,
    /// Gradient with respect to the head's input (embeddings).
    pub input: Matrix,
}

/// Mean per-token cross-entropy against `gold` and its exact gradients.
pub fn cross_entropy_and_grads(
    log_probs: &Matrix,
    gold: &[usize],
    cache: &FcCache,
    params: &FcHeadParams,
) -> Result<CrossEntropyGrads> {
    params.check()?;
    let (n, k) = log_probs.shape();
    if gold.len() != n || cache.x.rows() != n || k != params.output_dim() {
        return Err(Error::shape(format!(
            "cross-entropy: {n}x{k} log-probabilities, {} gold tags, {} cached rows",
            gold.len(),
            cache.x.rows()
        )));
    }
    if let Some(t) = gold.iter().find(|&&t| t >= k) {
        return Err(Error::shape(format!("gold tag {t} out of range")));
    }

    let scale = 1.0 / n as f64;
    let loss = -gold
        .iter()
        .enumerate()
        .map(|(t, &y)| log_probs[(t, y)])
        .sum::<f64>()
        * scale;

    let mut d_logits = Matrix::zeros(n, k);
    for t in 0..n {
        for j in 0..k {
            d_logits[(t, j)] = log_probs[(t, j)].exp() * scale;
        }
        d_logits[(t, gold[t])] -= scale;
    }

    let (d, hdim) = (params.input_dim(), params.hidden());
    let mut grads = FcHeadParams::zeros(d, hdim, k);
    let mut d_hidden = Matrix::zeros(n, hdim);
    for t in 0..n {
        let h = cache.hidden.row(t);
        for j in 0..k {
            let g = d_logits[(t, j)];
            grads.b2.as_mut_slice()[j] += g;
            for (w, hv) in grads.w2.row_mut(j).iter_mut().zip(h) {
                *w += g * hv;
            }
            for (dh, w) in d_hidden.row_mut(t).iter_mut().zip(params.w2.row(j)) {
                *dh += g * w;
            }
        }
    }
    apply_mask(&mut d_hidden, cache.mask.as_deref());
    match params.activation {
        Activation::Relu => {
            for (g, &p) in d_hidden.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
                if p <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }

    let mut d_x = Matrix::zeros(n, d);
    for t in 0..n {
        let x = cache.x.row(t);
        for u in 0..hdim {
            let g = d_hidden[(t, u)];
            if g == 0.0 {
                continue;
            }
            grads.b1.as_mut_slice()[u] += g;
            for (w, xv) in grads.w1.row_mut(u).iter_mut().zip(x) {
                *w += g * xv;
            }
            for (dx, w) in d_x.row_mut(t).iter_mut().zip(params.w1.row(u)) {
                *dx += g * w;
            }
        }
    }

    Ok(CrossEntropyGrads {
        loss,
        params: grads,
        input: d_x,
    })
}
