use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, clip_global_norm, OptimizerState};
use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::model::{predict_corpus, Model};
use super::schedule::{lr_at, LrSchedule};
use crate::conll::{build_token_vocabulary, Corpus, EmbeddingSet};
use crate::encoders::{EmbeddingTable, Mode};
use crate::error::{Error, Result};
use crate::metrics::{score, Averages, MetricsReport, ScoreOptions};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss over the epoch's updates.
    pub mean_loss: f64,
    pub dev: Averages,
    /// Learning rate at the last update of the epoch.
    pub lr: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} nll={:.6} dev_precision={:.4} dev_recall={:.4} dev_f1={:.4} lr={:.3e}",
            self.epoch, self.mean_loss, self.dev.precision, self.dev.recall, self.dev.f1, self.lr
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev macro-F1.
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    /// Dev report for the selected epoch.
    pub dev_report: MetricsReport,
}

/// Scores `model` on a labeled corpus with its default decoding.
pub fn evaluate(model: &Model, corpus: &Corpus, ingested: Option<&EmbeddingSet>) -> Result<MetricsReport> {
    let constrained = model.architecture().constrained_by_default();
    let predicted = predict_corpus(model, corpus, ingested, constrained)?;
    score(corpus, &predicted, ScoreOptions::default())
}

fn check_inputs(train: &Corpus, dev: &Corpus, ingested: Option<&EmbeddingSet>) -> Result<()> {
    if train.is_empty() || dev.is_empty() {
        return Err(Error::invalid("training and dev corpora must be non-empty"));
    }
    if !train.is_labeled() || !dev.is_labeled() {
        return Err(Error::invalid("training and dev corpora must be labeled"));
    }
    if train.vocabulary() != dev.vocabulary() {
        return Err(Error::invalid("training and dev corpora use different tag sets"));
    }
    if let Some(set) = ingested {
        for s in train.sentences().iter().chain(dev.sentences()) {
            match set.get(&s.id) {
                None => {
                    return Err(Error::invalid(format!("no embeddings for sentence `{}`", s.id)))
                }
                Some(m) if m.rows() != s.len() => {
                    return Err(Error::Dimension(format!(
                        "sentence `{}`: {} embedding rows for {} tokens",
                        s.id,
                        m.rows(),
                        s.len()
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}

/// Trains with supplied embeddings (`ingested`) or, when `None`, a trainable
/// table over the training tokens.
pub fn train(
    train: &Corpus,
    dev: &Corpus,
    config: &TrainConfig,
    ingested: Option<&EmbeddingSet>,
) -> Result<TrainOutcome> {
    train_with_progress(train, dev, config, ingested, &mut |_| {})
}

/// [`train`], calling `progress` after each epoch.
pub fn train_with_progress(
    train: &Corpus,
    dev: &Corpus,
    config: &TrainConfig,
    ingested: Option<&EmbeddingSet>,
    progress: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    check_inputs(train, dev, ingested)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (table, input_dim) = match ingested {
        Some(set) => (None, set.dim()),
        None => {
            let tokens = build_token_vocabulary(train, config.min_count);
            let table = EmbeddingTable::new(tokens, config.embedding_dim, &mut rng);
            (Some(table), config.embedding_dim)
        }
    };
    let mut model = Model::new(
        config.architecture,
        train.vocabulary().clone(),
        input_dim,
        table,
        config.hidden,
        config.fc_size,
        &mut rng,
    )?;
    let mut state = OptimizerState::new(&model);
    let cycle = config.cycle_length.unwrap_or(2 * train.len()).max(2);
    let schedule = LrSchedule::new(config.lr_min, config.lr_max, cycle)?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0u64;
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(Model, MetricsReport, usize)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut lr = lr_at(&schedule, step);
        for &i in &order {
            let sentence = &train.sentences()[i];
            let gold = sentence.tags.as_deref().expect("checked labeled");
            let (loss, mut grads) = model.loss_and_gradients(
                sentence,
                gold,
                ingested,
                config.dropout,
                Mode::Train(&mut rng),
            )?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss is {loss} at epoch {epoch}, step {step}, sentence `{}`",
                    sentence.id
                )));
            }
            clip_global_norm(&mut grads, config.clip_norm);
            lr = lr_at(&schedule, step);
            adam_step(&mut model, &grads, &mut state, lr)?;
            model.pin_forbidden();
            step += 1;
            total += loss;
        }

        let report = evaluate(&model, dev, ingested)?;
        let entry = EpochLog {
            epoch,
            mean_loss: total / train.len() as f64,
            dev: report.macro_avg,
            lr,
        };
        progress(&entry);
        log.push(entry);
        if best.as_ref().is_none_or(|(_, b, _)| report.macro_avg.f1 > b.macro_avg.f1) {
            best = Some((model.clone(), report, epoch));
        }
    }

    let (model, dev_report, best_epoch) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            config: config.clone(),
            model,
            best_dev_f1: dev_report.macro_avg.f1,
            best_epoch,
        },
        log,
        dev_report,
    })
}
