use rand::Rng;

use super::INIT_SCALE;
use crate::error::{Error, Result};
use crate::params::{prefixed, prefixed_mut, Parameters};
use crate::tensor::{dot, sigmoid, Matrix};

/// One LSTM direction. Gate blocks are stacked `[input, forget, cell, output]`,
/// each `h` rows tall.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4h x d`
    pub w_ih: Matrix,
    /// `4h x h`
    pub w_hh: Matrix,
    /// `1 x 4h`
    pub bias: Matrix,
}

impl LstmParams {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut bias = Matrix::zeros(1, 4 * hidden);
        bias.as_mut_slice()[hidden..2 * hidden].fill(1.0);
        LstmParams {
            w_ih: Matrix::uniform(4 * hidden, input_dim, INIT_SCALE, rng),
            w_hh: Matrix::uniform(4 * hidden, hidden, INIT_SCALE, rng),
            bias,
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmParams {
            w_ih: Matrix::zeros(4 * hidden, input_dim),
            w_hh: Matrix::zeros(4 * hidden, hidden),
            bias: Matrix::zeros(1, 4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.cols()
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        self.w_ih.expect_shape(4 * h, self.input_dim(), "LSTM input weights")?;
        self.w_hh.expect_shape(4 * h, h, "LSTM recurrent weights")?;
        self.bias.expect_shape(1, 4 * h, "LSTM bias")
    }
}

impl Parameters for LstmParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![
            ("w_ih".into(), &self.w_ih),
            ("w_hh".into(), &self.w_hh),
            ("bias".into(), &self.bias),
        ]
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        vec![
            ("w_ih".into(), &mut self.w_ih),
            ("w_hh".into(), &mut self.w_hh),
            ("bias".into(), &mut self.bias),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstmParams {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        BiLstmParams {
            forward: LstmParams::new(input_dim, hidden, rng),
            backward: LstmParams::new(input_dim, hidden, rng),
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        BiLstmParams {
            forward: LstmParams::zeros(input_dim, hidden),
            backward: LstmParams::zeros(input_dim, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    /// Width of the concatenated output, `2h`.
    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }

    pub fn swapped(&self) -> Self {
        BiLstmParams {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    fn check(&self) -> Result<()> {
        self.forward.check()?;
        self.backward.check()?;
        if self.forward.w_ih.shape() != self.backward.w_ih.shape()
            || self.forward.w_hh.shape() != self.backward.w_hh.shape()
        {
            return Err(Error::shape("BiLSTM directions disagree in shape"));
        }
        Ok(())
    }
}

impl Parameters for BiLstmParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        prefixed("forward", self.forward.named_tensors())
            .chain(prefixed("backward", self.backward.named_tensors()))
            .collect()
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        prefixed_mut("forward", self.forward.named_tensors_mut())
            .chain(prefixed_mut("backward", self.backward.named_tensors_mut()))
            .collect()
    }
}

/// Activations of one direction, indexed by processing step (not position).
#[derive(Debug, Clone)]
struct DirectionCache {
    positions: Vec<usize>,
    /// `n x 4h`, post-nonlinearity gates `[i, f, g, o]`.
    gates: Matrix,
    /// `n x h`
    cells: Matrix,
    /// `n x h`
    hidden: Matrix,
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    x: Matrix,
    forward: DirectionCache,
    backward: DirectionCache,
}

fn run_direction(x: &Matrix, p: &LstmParams, positions: Vec<usize>) -> DirectionCache {
    let (n, h) = (x.rows(), p.hidden());
    let mut gates = Matrix::zeros(n, 4 * h);
    let mut cells = Matrix::zeros(n, h);
    let mut hidden = Matrix::zeros(n, h);
    let zero = vec![0.0; h];
    for (step, &pos) in positions.iter().enumerate() {
        let input = x.row(pos);
        let (h_prev, c_prev) = if step == 0 {
            (zero.clone(), zero.clone())
        } else {
            (hidden.row(step - 1).to_vec(), cells.row(step - 1).to_vec())
        };
        let z: Vec<f64> = (0..4 * h)
            .map(|r| dot(p.w_ih.row(r), input) + dot(p.w_hh.row(r), &h_prev) + p.bias[(0, r)])
            .collect();
        let g = gates.row_mut(step);
        for u in 0..h {
            g[u] = sigmoid(z[u]);
            g[h + u] = sigmoid(z[h + u]);
            g[2 * h + u] = z[2 * h + u].tanh();
            g[3 * h + u] = sigmoid(z[3 * h + u]);
        }
        for u in 0..h {
            let g = gates.row(step);
            let c = g[h + u] * c_prev[u] + g[u] * g[2 * h + u];
            cells[(step, u)] = c;
            hidden[(step, u)] = g[3 * h + u] * c.tanh();
        }
    }
    DirectionCache {
        positions,
        gates,
        cells,
        hidden,
    }
}

/// Runs both directions and concatenates their states: row `t` is
/// `[forward h_t ; backward h_t]`.
pub fn bilstm_forward(x: &Matrix, params: &BiLstmParams) -> Result<(Matrix, BiLstmCache)> {
    params.check()?;
    if x.rows() == 0 {
        return Err(Error::shape("BiLSTM input has no rows"));
    }
    x.expect_shape(x.rows(), params.input_dim(), "BiLSTM input")?;
    let n = x.rows();
    let h = params.hidden();
    let forward = run_direction(x, &params.forward, (0..n).collect());
    let backward = run_direction(x, &params.backward, (0..n).rev().collect());

    let mut out = Matrix::zeros(n, 2 * h);
    for (dir, offset) in [(&forward, 0), (&backward, h)] {
        for (step, &pos) in dir.positions.iter().enumerate() {
            out.row_mut(pos)[offset..offset + h].copy_from_slice(dir.hidden.row(step));
        }
    }
    Ok((
        out,
        BiLstmCache {
            x: x.clone(),
            forward,
            backward,
        },
    ))
}

/// Backpropagation through time for one direction. `grad_h` is indexed by
/// position; input gradients are accumulated into `grad_x`.
fn backprop_direction(
    cache: &DirectionCache,
    x: &Matrix,
    p: &LstmParams,
    grad_h: &Matrix,
    grads: &mut LstmParams,
    grad_x: &mut Matrix,
) {
    let h = p.hidden();
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for (step, &pos) in cache.positions.iter().enumerate().rev() {
        let g = cache.gates.row(step);
        let c = cache.cells.row(step);
        for u in 0..h {
            let (i, f, gg, o) = (g[u], g[h + u], g[2 * h + u], g[3 * h + u]);
            let tanh_c = c[u].tanh();
            let c_prev = if step == 0 { 0.0 } else { cache.cells[(step - 1, u)] };
            let dh = grad_h[(pos, u)] + dh_next[u];
            let d_o = dh * tanh_c;
            let dc = dh * o * (1.0 - tanh_c * tanh_c) + dc_next[u];
            dz[u] = dc * gg * i * (1.0 - i);
            dz[h + u] = dc * c_prev * f * (1.0 - f);
            dz[2 * h + u] = dc * i * (1.0 - gg * gg);
            dz[3 * h + u] = d_o * o * (1.0 - o);
            dc_next[u] = dc * f;
        }

        let input = x.row(pos);
        dh_next.fill(0.0);
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grads.bias.as_mut_slice()[r] += d;
            for (w, xv) in grads.w_ih.row_mut(r).iter_mut().zip(input) {
                *w += d * xv;
            }
            for (gx, w) in grad_x.row_mut(pos).iter_mut().zip(p.w_ih.row(r)) {
                *gx += d * w;
            }
            if step > 0 {
                let h_prev = cache.hidden.row(step - 1);
                for (w, hv) in grads.w_hh.row_mut(r).iter_mut().zip(h_prev) {
                    *w += d * hv;
                }
            }
            for (dh, w) in dh_next.iter_mut().zip(p.w_hh.row(r)) {
                *dh += d * w;
            }
        }
    }
}

/// Gradients of a scalar loss with respect to the BiLSTM input and
/// parameters, given `grad_out = dL/d(output)` (`n x 2h`).
pub fn bilstm_backward(
    cache: &BiLstmCache,
    params: &BiLstmParams,
    grad_out: &Matrix,
) -> Result<(Matrix, BiLstmParams)> {
    params.check()?;
    let (n, d, h) = (cache.x.rows(), params.input_dim(), params.hidden());
    cache.x.expect_shape(n, d, "cached BiLSTM input")?;
    grad_out.expect_shape(n, 2 * h, "BiLSTM output gradient")?;
    if cache.forward.hidden.cols() != h {
        return Err(Error::shape("BiLSTM cache does not match parameters"));
    }

    let mut split = [Matrix::zeros(n, h), Matrix::zeros(n, h)];
    for t in 0..n {
        let row = grad_out.row(t);
        split[0].row_mut(t).copy_from_slice(&row[..h]);
        split[1].row_mut(t).copy_from_slice(&row[h..]);
    }

    let mut grads = BiLstmParams::zeros(d, h);
    let mut grad_x = Matrix::zeros(n, d);
    backprop_direction(
        &cache.forward,
        &cache.x,
        &params.forward,
        &split[0],
        &mut grads.forward,
        &mut grad_x,
    );
    backprop_direction(
        &cache.backward,
        &cache.x,
        &params.backward,
        &split[1],
        &mut grads.backward,
        &mut grad_x,
    );
    Ok((grad_x, grads))
}
