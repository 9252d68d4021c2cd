//! Runs the bidirectional LSTM on random input, backpropagates a simple loss
//! and compares one gradient entry with a finite difference.
//!
//!     cargo run --example bilstm_encoder

use nertag::encoders::{bilstm_backward, bilstm_forward, BiLstmParams};
use nertag::tensor::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nertag::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, d, h) = (4, 3, 2);
    let params = BiLstmParams::new(d, h, &mut rng);
    let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect())?;

    let (out, cache) = bilstm_forward(&x, &params)?;
    println!("output is {} x {} (forward and backward halves):", out.rows(), out.cols());
    for t in 0..n {
        let row: Vec<String> = out.row(t).iter().map(|v| format!("{v:+.4}")).collect();
        println!("  {}", row.join(" "));
    }

    // Loss = sum of outputs, so the upstream gradient is all ones.
    let ones = Matrix::from_vec(n, 2 * h, vec![1.0; n * 2 * h])?;
    let (grad_x, _) = bilstm_backward(&cache, &params, &ones)?;
    let loss = |x: &Matrix| -> nertag::Result<f64> {
        Ok(bilstm_forward(x, &params)?.0.as_slice().iter().sum())
    };
    let eps = 1e-5;
    let (mut plus, mut minus) = (x.clone(), x.clone());
    plus[(1, 2)] += eps;
    minus[(1, 2)] -= eps;
    let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * eps);
    println!("\nd loss / d x[1][2]: analytic {:.8}, numeric {numeric:.8}", grad_x[(1, 2)]);
    Ok(())
}
