//! Trains a small BiLSTM-CRF, saves it, reloads it and checks that the
//! reloaded model makes the same predictions.
//!
//!     cargo run --release --example checkpoint

use nertag::synthetic::{generate, SyntheticConfig};
use nertag::training::{
    load_checkpoint, predict_corpus, save_checkpoint, train, Architecture, TrainConfig,
};

fn main() -> nertag::Result<()> {
    let cfg = SyntheticConfig::default();
    let (train_set, dev) = (generate(200, "train", &cfg, 1), generate(50, "dev", &cfg, 2));
    let config = TrainConfig {
        architecture: Architecture::BiLstmCrf,
        epochs: 3,
        hidden: 16,
        fc_size: 32,
        embedding_dim: 16,
        lr_min: 1e-4,
        lr_max: 1e-2,
        ..TrainConfig::default()
    };
    let outcome = train(&train_set, &dev, &config, None)?;
    let dir = std::env::temp_dir().join(format!("nertag-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ckpt");
    save_checkpoint(&outcome.checkpoint, &path)?;
    let bytes = std::fs::metadata(&path)?.len();
    println!("saved {} ({bytes} bytes, best epoch {})", path.display(), outcome.checkpoint.best_epoch);

    let loaded = load_checkpoint(&path)?;
    let before = predict_corpus(&outcome.checkpoint.model, &dev, None, false)?;
    let after = predict_corpus(&loaded.model, &dev, None, false)?;
    println!("identical checkpoint: {}", loaded == outcome.checkpoint);
    println!("identical predictions: {}", before == after);
    println!("{}", loaded.config);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
