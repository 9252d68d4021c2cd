//! Linear-chain CRF over per-token emission scores.
//!
//! A path `y = (y_1..y_n)` is scored as
//!
//! ```text
//! s(y) = A[START, y_1] + P[1, y_1] + A[y_1, y_2] + P[2, y_2] + ... + A[y_n, STOP]
//! ```
//!
//! and normalized over all `k^n` paths. Every dynamic program runs in log
//! space. Cells into START and out of STOP hold [`FORBIDDEN`] and are never
//! trained.

use crate::error::{Error, Result};
use crate::tagscheme::TransitionMask;
use crate::tensor::{log_sum_exp, Matrix};

/// Finite stand-in for `-inf` on structurally impossible transitions.
pub const FORBIDDEN: f64 = -1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct Emissions(Matrix);

impl Emissions {
    pub fn new(scores: Matrix) -> Result<Self> {
        if scores.rows() == 0 || scores.cols() == 0 {
            return Err(Error::shape("emission matrix must be at least 1x1"));
        }
        if !scores.is_finite() {
            return Err(Error::NonFinite("emission scores".into()));
        }
        Ok(Emissions(scores))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_tags(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for Emissions {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// `(k+2) x (k+2)` transition scores; rows are the source state.
#[derive(Debug, Clone, PartialEq)]
pub struct Transitions {
    k: usize,
    values: Matrix,
}

impl Transitions {
    /// All allowed cells zero.
    pub fn zeros(k: usize) -> Self {
        let mut t = Transitions {
            k,
            values: Matrix::zeros(k + 2, k + 2),
        };
        t.pin_forbidden();
        t
    }

    /// Wraps explicit values; forbidden cells are overwritten with the sentinel.
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let n = values.rows();
        if n < 3 || values.cols() != n {
            return Err(Error::shape(format!(
                "transition matrix must be square with at least 3 states, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(Error::NonFinite("transition scores".into()));
        }
        let mut t = Transitions { k: n - 2, values };
        t.pin_forbidden();
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn start(&self) -> usize {
        self.k
    }

    pub fn stop(&self) -> usize {
        self.k + 1
    }

    pub fn matrix(&self) -> &Matrix {
        &self.values
    }

    /// Mutable access for optimizers. Call [`Transitions::pin_forbidden`] after
    /// writing.
    pub fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.values
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.values[(from, to)]
    }

    pub fn set(&mut self, from: usize, to: usize, value: f64) {
        if !self.is_forbidden(from, to) {
            self.values[(from, to)] = value;
        }
    }

    pub fn is_forbidden(&self, from: usize, to: usize) -> bool {
        to == self.start() || from == self.stop()
    }

    pub fn pin_forbidden(&mut self) {
        let (start, stop) = (self.start(), self.stop());
        for s in 0..self.k + 2 {
            self.values[(s, start)] = FORBIDDEN;
            self.values[(stop, s)] = FORBIDDEN;
        }
    }

    fn check(&self, p: &Emissions) -> Result<()> {
        if p.num_tags() != self.k {
            return Err(Error::shape(format!(
                "emissions have {} tags, transitions expect {}",
                p.num_tags(),
                self.k
            )));
        }
        Ok(())
    }
}

fn check_path(p: &Emissions, path: &[usize]) -> Result<()> {
    if path.len() != p.len() {
        return Err(Error::shape(format!(
            "path length {} does not match {} emission rows",
            path.len(),
            p.len()
        )));
    }
    if let Some(t) = path.iter().find(|&&t| t >= p.num_tags()) {
        return Err(Error::shape(format!("path tag {t} out of range")));
    }
    Ok(())
}

/// Unnormalized path score. Terms are accumulated in path order, the same
/// order [`viterbi_decode`] uses, so the two agree bit for bit.
pub fn sequence_score(p: &Emissions, a: &Transitions, path: &[usize]) -> Result<f64> {
    a.check(p)?;
    check_path(p, path)?;
    let mut prev = a.start();
    let mut score = 0.0;
    for (i, &y) in path.iter().enumerate() {
        score = score + a.get(prev, y) + p[(i, y)];
        prev = y;
    }
    Ok(score + a.get(prev, a.stop()))
}

/// `alpha[t][j]`: log-sum of scores of all prefixes ending in tag `j` at `t`.
fn forward_table(p: &Emissions, a: &Transitions) -> Matrix {
    let (n, k) = (p.len(), p.num_tags());
    let mut alpha = Matrix::zeros(n, k);
    for j in 0..k {
        alpha[(0, j)] = a.get(a.start(), j) + p[(0, j)];
    }
    let mut terms = vec![0.0; k];
    for t in 1..n {
        for j in 0..k {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = alpha[(t - 1, i)] + a.get(i, j);
            }
            alpha[(t, j)] = log_sum_exp(&terms) + p[(t, j)];
        }
    }
    alpha
}

/// `beta[t][i]`: log-sum of scores of all suffixes after tag `i` at `t`,
/// including the STOP transition.
fn backward_table(p: &Emissions, a: &Transitions) -> Matrix {
    let (n, k) = (p.len(), p.num_tags());
    let mut beta = Matrix::zeros(n, k);
    for i in 0..k {
        beta[(n - 1, i)] = a.get(i, a.stop());
    }
    let mut terms = vec![0.0; k];
    for t in (0..n - 1).rev() {
        for i in 0..k {
            for (j, term) in terms.iter_mut().enumerate() {
                *term = a.get(i, j) + p[(t + 1, j)] + beta[(t + 1, j)];
            }
            beta[(t, i)] = log_sum_exp(&terms);
        }
    }
    beta
}

fn partition_from_alpha(alpha: &Matrix, a: &Transitions) -> f64 {
    let last = alpha.rows() - 1;
    let terms: Vec<f64> = (0..a.k())
        .map(|j| alpha[(last, j)] + a.get(j, a.stop()))
        .collect();
    log_sum_exp(&terms)
}

/// `log Z`: log-sum-exp of [`sequence_score`] over every path (forward algorithm).
pub fn log_partition(p: &Emissions, a: &Transitions) -> Result<f64> {
    a.check(p)?;
    Ok(partition_from_alpha(&forward_table(p, a), a))
}

/// `log p(path)` under the CRF; always `<= 0`.
pub fn log_likelihood(p: &Emissions, a: &Transitions, path: &[usize]) -> Result<f64> {
    Ok(sequence_score(p, a, path)? - log_partition(p, a)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    /// `n x k`, `node[(t, j)] = p(y_t = j)`.
    pub node: Matrix,
    /// `n - 1` slabs of `k x k`, `edge[t][(i, j)] = p(y_t = i, y_{t+1} = j)`.
    pub edge: Vec<Matrix>,
    /// `p(y_1 = j)`, the START edge marginal.
    pub start: Vec<f64>,
    /// `p(y_n = j)`, the STOP edge marginal.
    pub stop: Vec<f64>,
    pub log_partition: f64,
}

pub fn forward_backward(p: &Emissions, a: &Transitions) -> Result<Marginals> {
    a.check(p)?;
    let (n, k) = (p.len(), p.num_tags());
    let alpha = forward_table(p, a);
    let beta = backward_table(p, a);
    let log_z = partition_from_alpha(&alpha, a);

    let mut node = Matrix::zeros(n, k);
    for t in 0..n {
        for j in 0..k {
            node[(t, j)] = (alpha[(t, j)] + beta[(t, j)] - log_z).exp();
        }
    }
    let edge = (0..n.saturating_sub(1))
        .map(|t| {
            let mut slab = Matrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    slab[(i, j)] = (alpha[(t, i)] + a.get(i, j) + p[(t + 1, j)]
                        + beta[(t + 1, j)]
                        - log_z)
                        .exp();
                }
            }
            slab
        })
        .collect();
    Ok(Marginals {
        start: node.row(0).to_vec(),
        stop: node.row(n - 1).to_vec(),
        node,
        edge,
        log_partition: log_z,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfGradients {
    /// `n x k`
    pub emissions: Matrix,
    /// `(k+2) x (k+2)`, zero on forbidden cells.
    pub transitions: Matrix,
    /// The negative log-likelihood the gradients belong to.
    pub loss: f64,
}

/// Gradients of `-log_likelihood(p, a, path)`: model expectations minus gold
/// counts, for emissions and for every transition including START/STOP edges.
pub fn nll_gradients(p: &Emissions, a: &Transitions, path: &[usize]) -> Result<CrfGradients> {
    check_path(p, path)?;
    let m = forward_backward(p, a)?;
    let (n, k) = (p.len(), p.num_tags());

    let mut d_emit = m.node.clone();
    for (t, &y) in path.iter().enumerate() {
        d_emit[(t, y)] -= 1.0;
    }

    let mut d_trans = Matrix::zeros(k + 2, k + 2);
    for j in 0..k {
        d_trans[(a.start(), j)] = m.start[j];
        d_trans[(j, a.stop())] = m.stop[j];
    }
    for slab in &m.edge {
        for i in 0..k {
            for j in 0..k {
                d_trans[(i, j)] += slab[(i, j)];
            }
        }
    }
    d_trans[(a.start(), path[0])] -= 1.0;
    d_trans[(path[n - 1], a.stop())] -= 1.0;
    for w in path.windows(2) {
        d_trans[(w[0], w[1])] -= 1.0;
    }

    let score = sequence_score(p, a, path)?;
    Ok(CrfGradients {
        emissions: d_emit,
        transitions: d_trans,
        loss: m.log_partition - score,
    })
}

/// Highest-scoring path and its score, optionally restricted to transitions
/// allowed by `mask`. Ties go to the lowest tag index at every backtracking
/// step.
pub fn viterbi_decode(
    p: &Emissions,
    a: &Transitions,
    mask: Option<&TransitionMask>,
) -> Result<(Vec<usize>, f64)> {
    a.check(p)?;
    let (n, k) = (p.len(), p.num_tags());
    if let Some(mask) = mask {
        if mask.num_states() != k + 2 {
            return Err(Error::shape(format!(
                "mask covers {} states, model has {}",
                mask.num_states(),
                k + 2
            )));
        }
    }
    let allowed = |from: usize, to: usize| mask.is_none_or(|m| m.allowed(from, to));
    let step = |from: usize, to: usize| {
        if allowed(from, to) {
            a.get(from, to)
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut delta = Matrix::zeros(n, k);
    let mut back = vec![0usize; n * k];
    for j in 0..k {
        delta[(0, j)] = step(a.start(), j) + p[(0, j)];
    }
    for t in 1..n {
        for j in 0..k {
            let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
            for i in 0..k {
                let s = delta[(t - 1, i)] + step(i, j);
                if s > best {
                    best = s;
                    best_i = i;
                }
            }
            delta[(t, j)] = best + p[(t, j)];
            back[t * k + j] = best_i;
        }
    }

    let (mut last, mut best) = (0, f64::NEG_INFINITY);
    for j in 0..k {
        let s = delta[(n - 1, j)] + step(j, a.stop());
        if s > best {
            best = s;
            last = j;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::NoValidPath);
    }

    let mut path = vec![0; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t * k + path[t]];
    }
    Ok((path, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagscheme::{count_invalid_transitions, expand_bio, EntityTypeSet};
    use crate::gradcheck::relative_error as rel_err;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Every path of length `n` over `k` tags, in lexicographic order.
    fn all_paths(k: usize, n: usize) -> Vec<Vec<usize>> {
        let total = k.pow(n as u32);
        (0..total)
            .map(|mut code| {
                let mut path = vec![0; n];
                for slot in path.iter_mut().rev() {
                    *slot = code % k;
                    code /= k;
                }
                path
            })
            .collect()
    }

    /// Independent term-by-term scorer reading raw matrices.
    fn brute_score(p: &Matrix, a: &Matrix, path: &[usize]) -> f64 {
        let k = p.cols();
        let (start, stop) = (k, k + 1);
        let mut s = 0.0;
        let mut prev = start;
        for (i, &y) in path.iter().enumerate() {
            s = s + a[(prev, y)] + p[(i, y)];
            prev = y;
        }
        s + a[(prev, stop)]
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (Emissions, Transitions) {
        let p = Matrix::uniform(n, k, 5.0, rng);
        let a = Matrix::uniform(k + 2, k + 2, 5.0, rng);
        (Emissions::new(p).unwrap(), Transitions::from_matrix(a).unwrap())
    }

    #[test]
    fn zero_model_scores_zero() {
        let p = Emissions::new(Matrix::zeros(3, 4)).unwrap();
        let a = Transitions::zeros(4);
        assert_eq!(sequence_score(&p, &a, &[1, 3, 0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_summed_score() {
        let p = Emissions::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let mut a = Transitions::zeros(2);
        a.set(a.start(), 1, 0.5);
        a.set(1, a.stop(), 0.25);
        assert_eq!(sequence_score(&p, &a, &[1]).unwrap(), 2.75);
        assert_eq!(brute_score(p.matrix(), a.matrix(), &[1]), 2.75);
    }

    #[test]
    fn shape_errors() {
        let p = Emissions::new(Matrix::zeros(2, 3)).unwrap();
        let a = Transitions::zeros(4);
        assert!(sequence_score(&p, &a, &[0, 0]).is_err());
        assert!(log_partition(&p, &a).is_err());
        let a = Transitions::zeros(3);
        assert!(sequence_score(&p, &a, &[0]).is_err());
        assert!(sequence_score(&p, &a, &[0, 3]).is_err());
        assert!(Emissions::new(Matrix::zeros(0, 3)).is_err());
        assert!(Emissions::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn forbidden_cells_are_pinned() {
        let mut a = Transitions::zeros(3);
        a.set(0, a.start(), 7.0);
        a.set(a.stop(), 0, 7.0);
        assert_eq!(a.get(0, a.start()), FORBIDDEN);
        assert_eq!(a.get(a.stop(), 0), FORBIDDEN);
    }

    #[test]
    fn partition_closed_forms() {
        let p = Emissions::from_rows(&[vec![0.3, -1.2]]).unwrap();
        let a = Transitions::zeros(2);
        let expected = (0.3f64.exp() + (-1.2f64).exp()).ln();
        assert!((log_partition(&p, &a).unwrap() - expected).abs() < 1e-12);

        let (n, k) = (5, 4);
        let p = Emissions::new(Matrix::zeros(n, k)).unwrap();
        let expected = (n as f64) * (k as f64).ln();
        assert!((log_partition(&p, &Transitions::zeros(k)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn partition_is_stable_at_large_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = Emissions::new(Matrix::uniform(4, 3, 1000.0, &mut rng)).unwrap();
        let a = Transitions::from_matrix(Matrix::uniform(5, 5, 1000.0, &mut rng)).unwrap();
        let z = log_partition(&p, &a).unwrap();
        assert!(z.is_finite());
        let scores: Vec<f64> = all_paths(3, 4)
            .iter()
            .map(|y| brute_score(p.matrix(), a.matrix(), y))
            .collect();
        assert!((z - log_sum_exp(&scores)).abs() < 1e-9);
    }

    #[test]
    fn likelihood_examples() {
        let p = Emissions::from_rows(&[vec![0.7]]).unwrap();
        assert!(log_likelihood(&p, &Transitions::zeros(1), &[0]).unwrap().abs() < 1e-15);
        let p = Emissions::new(Matrix::zeros(2, 3)).unwrap();
        let ll = log_likelihood(&p, &Transitions::zeros(3), &[2, 1]).unwrap();
        assert!((ll + 9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn partition_and_likelihood_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=5));
            let (p, a) = random_instance(&mut rng, n, k);
            let paths = all_paths(k, n);
            let scores: Vec<f64> = paths
                .iter()
                .map(|y| brute_score(p.matrix(), a.matrix(), y))
                .collect();
            let brute_z = log_sum_exp(&scores);
            assert!((log_partition(&p, &a).unwrap() - brute_z).abs() < 1e-8);
            for (y, s) in paths.iter().zip(&scores).take(20) {
                let ll = log_likelihood(&p, &a, y).unwrap();
                assert!(ll <= 1e-12);
                assert!((ll - (s - brute_z)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let (n, k) = (rng.gen_range(1..=5), rng.gen_range(1..=4));
            let (p, a) = random_instance(&mut rng, n, k);
            let total: f64 = all_paths(k, n)
                .iter()
                .map(|y| log_likelihood(&p, &a, y).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn marginal_closed_forms() {
        let p = Emissions::new(Matrix::zeros(3, 4)).unwrap();
        let m = forward_backward(&p, &Transitions::zeros(4)).unwrap();
        assert!(m.node.as_slice().iter().all(|v| (v - 0.25).abs() < 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, a) = random_instance(&mut rng, 1, 3);
        let m = forward_backward(&p, &a).unwrap();
        let logits: Vec<f64> = (0..3)
            .map(|j| p[(0, j)] + a.get(a.start(), j) + a.get(j, a.stop()))
            .collect();
        let lse = log_sum_exp(&logits);
        for j in 0..3 {
            assert!((m.node[(0, j)] - (logits[j] - lse).exp()).abs() < 1e-12);
        }
        assert!(m.edge.is_empty());
    }

    #[test]
    fn marginals_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (n, k) = (rng.gen_range(1..=5), rng.gen_range(1..=4));
            let (p, a) = random_instance(&mut rng, n, k);
            let m = forward_backward(&p, &a).unwrap();
            let mut node = Matrix::zeros(n, k);
            let mut edge = vec![Matrix::zeros(k, k); n.saturating_sub(1)];
            let paths = all_paths(k, n);
            let scores: Vec<f64> = paths
                .iter()
                .map(|y| brute_score(p.matrix(), a.matrix(), y))
                .collect();
            let z = log_sum_exp(&scores);
            for (y, s) in paths.iter().zip(&scores) {
                let prob = (s - z).exp();
                for t in 0..n {
                    node[(t, y[t])] += prob;
                    if t + 1 < n {
                        edge[t][(y[t], y[t + 1])] += prob;
                    }
                }
            }
            for (x, y) in m.node.as_slice().iter().zip(node.as_slice()) {
                assert!((x - y).abs() < 1e-8);
            }
            for (slab, brute) in m.edge.iter().zip(&edge) {
                for (x, y) in slab.as_slice().iter().zip(brute.as_slice()) {
                    assert!((x - y).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn marginal_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (n, k) = (rng.gen_range(1..=8), rng.gen_range(1..=6));
            let (p, a) = random_instance(&mut rng, n, k);
            let m = forward_backward(&p, &a).unwrap();
            for t in 0..n {
                assert!((m.node.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            for (t, slab) in m.edge.iter().enumerate() {
                assert!((slab.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                for i in 0..k {
                    let row: f64 = slab.row(i).iter().sum();
                    assert!((row - m.node[(t, i)]).abs() < 1e-9);
                    let col: f64 = (0..k).map(|r| slab[(r, i)]).sum();
                    assert!((col - m.node[(t + 1, i)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn gradient_closed_forms() {
        let p = Emissions::new(Matrix::zeros(1, 2)).unwrap();
        let g = nll_gradients(&p, &Transitions::zeros(2), &[0]).unwrap();
        assert_eq!(g.emissions.row(0), &[-0.5, 0.5]);

        // A peaked model: gradients vanish.
        let p = Emissions::from_rows(&[vec![60.0, 0.0], vec![0.0, 60.0]]).unwrap();
        let g = nll_gradients(&p, &Transitions::zeros(2), &[0, 1]).unwrap();
        assert!(g.emissions.as_slice().iter().all(|v| v.abs() < 1e-20));
        assert!(g.transitions.as_slice().iter().all(|v| v.abs() < 1e-20));
        assert!(g.loss < 1e-20);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = 1e-5;
        for _ in 0..20 {
            let (n, k) = (rng.gen_range(1..=5), rng.gen_range(1..=4));
            let (p, a) = random_instance(&mut rng, n, k);
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let g = nll_gradients(&p, &a, &y).unwrap();
            let nll = |p: &Emissions, a: &Transitions| -log_likelihood(p, a, &y).unwrap();
            for idx in 0..n * k {
                let mut plus = p.matrix().clone();
                plus.as_mut_slice()[idx] += h;
                let mut minus = p.matrix().clone();
                minus.as_mut_slice()[idx] -= h;
                let fd = (nll(&Emissions::new(plus).unwrap(), &a)
                    - nll(&Emissions::new(minus).unwrap(), &a))
                    / (2.0 * h);
                assert!(rel_err(g.emissions.as_slice()[idx], fd) <= 1e-4);
            }
            for from in 0..k + 2 {
                for to in 0..k + 2 {
                    let analytic = g.transitions[(from, to)];
                    if a.is_forbidden(from, to) {
                        assert_eq!(analytic, 0.0);
                        continue;
                    }
                    let mut plus = a.clone();
                    plus.set(from, to, a.get(from, to) + h);
                    let mut minus = a.clone();
                    minus.set(from, to, a.get(from, to) - h);
                    let fd = (nll(&p, &plus) - nll(&p, &minus)) / (2.0 * h);
                    assert!(rel_err(analytic, fd) <= 1e-4, "{analytic} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn viterbi_examples() {
        let p = Emissions::from_rows(&[vec![3.0, 1.0]]).unwrap();
        assert_eq!(viterbi_decode(&p, &Transitions::zeros(2), None).unwrap(), (vec![0], 3.0));

        let voc = expand_bio(&EntityTypeSet::default());
        let mask = TransitionMask::bio(&voc);
        let p = Emissions::new(Matrix::zeros(2, voc.k())).unwrap();
        let (path, score) = viterbi_decode(&p, &Transitions::zeros(voc.k()), Some(&mask)).unwrap();
        assert_eq!(path, vec![0, 0]);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn viterbi_without_valid_path() {
        let mut mask = TransitionMask::allow_all(3);
        mask.set(1, 0, false);
        let p = Emissions::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            viterbi_decode(&p, &Transitions::zeros(1), Some(&mask)),
            Err(Error::NoValidPath)
        ));
    }

    #[test]
    fn viterbi_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=5));
            let (p, a) = random_instance(&mut rng, n, k);
            let (path, score) = viterbi_decode(&p, &a, None).unwrap();
            let mut best: Option<(Vec<usize>, f64)> = None;
            for y in all_paths(k, n) {
                let s = brute_score(p.matrix(), a.matrix(), &y);
                if best.as_ref().is_none_or(|(_, b)| s > *b) {
                    best = Some((y, s));
                }
            }
            let (best_path, best_score) = best.unwrap();
            assert_eq!(score, best_score);
            assert_eq!(path, best_path);
        }
    }

    #[test]
    fn emission_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=5));
            let (p, a) = random_instance(&mut rng, n, k);
            let row = rng.gen_range(0..n);
            let c = rng.gen_range(-10.0..10.0);
            let mut shifted = p.matrix().clone();
            shifted.row_mut(row).iter_mut().for_each(|v| *v += c);
            let shifted = Emissions::new(shifted).unwrap();
            let dz = log_partition(&shifted, &a).unwrap() - log_partition(&p, &a).unwrap();
            assert!((dz - c).abs() < 1e-9);
            assert_eq!(
                viterbi_decode(&shifted, &a, None).unwrap().0,
                viterbi_decode(&p, &a, None).unwrap().0
            );
        }
    }

    #[test]
    fn constrained_viterbi_is_bio_valid() {
        let voc = expand_bio(&EntityTypeSet::default());
        let mask = TransitionMask::bio(&voc);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..500 {
            let n = rng.gen_range(1..=12);
            let p = Emissions::new(Matrix::uniform(n, voc.k(), 5.0, &mut rng)).unwrap();
            let a = Transitions::from_matrix(Matrix::uniform(15, 15, 5.0, &mut rng)).unwrap();
            let (path, _) = viterbi_decode(&p, &a, Some(&mask)).unwrap();
            assert_eq!(count_invalid_transitions(&voc, &path), 0);
        }
    }

    #[test]
    fn partition_bounds_every_path_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let (n, k) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let (p, a) = random_instance(&mut rng, n, k);
            let z = log_partition(&p, &a).unwrap();
            for y in all_paths(k, n) {
                assert!(sequence_score(&p, &a, &y).unwrap() <= z + 1e-12);
            }
        }
    }
}
