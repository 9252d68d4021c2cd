//! Trains a per-token softmax model, then breaks its dev errors into type
//! errors, boundary errors, misses and spurious spans.
//!
//!     cargo run --release --example error_analysis

use nertag::metrics::{error_breakdown, ScoreOptions};
use nertag::synthetic::{generate, SyntheticConfig};
use nertag::training::{evaluate, predict_corpus, train, Architecture, TrainConfig};

fn main() -> nertag::Result<()> {
    let cfg = SyntheticConfig::default();
    let (train_set, dev) = (generate(400, "train", &cfg, 1), generate(100, "dev", &cfg, 2));
    let config = TrainConfig {
        architecture: Architecture::Linear,
        epochs: 3,
        embedding_dim: 16,
        fc_size: 32,
        lr_min: 1e-4,
        lr_max: 1e-2,
        ..TrainConfig::default()
    };
    let model = train(&train_set, &dev, &config, None)?.checkpoint.model;
    let report = evaluate(&model, &dev, None)?;
    let predicted = predict_corpus(&model, &dev, None, true)?;
    let breakdown = error_breakdown(&dev, &predicted, ScoreOptions::default())?;
    print!("{}", breakdown.render(&report));
    if let Some(e) = breakdown.boundary_errors.first() {
        println!("\nfirst boundary error: {e:?}");
    }
    Ok(())
}
