//! Trains a CRF and a per-token softmax head on a generated corpus where
//! some tags depend only on the previous tag, and compares dev F1.
//!
//!     cargo run --release --example train_crf

use nertag::synthetic::standard_splits;
use nertag::training::{train_with_progress, Architecture, TrainConfig};

fn main() -> nertag::Result<()> {
    let (train, dev) = standard_splits(2024);
    for architecture in [Architecture::Crf, Architecture::Linear] {
        let config = TrainConfig {
            architecture,
            embedding_dim: 32,
            lr_min: 1e-4,
            lr_max: 1e-2,
            ..TrainConfig::default()
        };
        println!("== {architecture}");
        let outcome = train_with_progress(&train, &dev, &config, None, &mut |e| println!("{e}"))?;
        println!(
            "best epoch {} dev macro-F1 {:.4}\n{}",
            outcome.checkpoint.best_epoch, outcome.checkpoint.best_dev_f1, outcome.dev_report
        );
    }
    Ok(())
}
