use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which encoder and output layer sit on top of the token embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Architecture {
    /// Embeddings projected to emission scores, decoded by a CRF.
    #[default]
    Crf,
    /// Embeddings through a BiLSTM, projected, decoded by a CRF.
    BiLstmCrf,
    /// Two dense layers and a per-token softmax.
    Linear,
}

impl Architecture {
    pub fn uses_crf(self) -> bool {
        !matches!(self, Architecture::Linear)
    }

    /// A CRF learns which transitions are plausible; a per-token softmax
    /// cannot, so it is decoded under the BIO mask unless told otherwise.
    pub fn constrained_by_default(self) -> bool {
        !self.uses_crf()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Crf => "crf",
            Architecture::BiLstmCrf => "bilstm-crf",
            Architecture::Linear => "linear",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crf" => Ok(Architecture::Crf),
            "bilstm-crf" => Ok(Architecture::BiLstmCrf),
            "linear" => Ok(Architecture::Linear),
            other => Err(Error::invalid(format!(
                "unknown architecture `{other}` (expected crf, bilstm-crf or linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub epochs: usize,
    /// Applied to embeddings and to the BiLSTM output or FC hidden layer.
    pub dropout: f64,
    /// BiLSTM state size per direction.
    pub hidden: usize,
    /// Width of the FC head's hidden layer.
    pub fc_size: usize,
    pub seed: u64,
    pub lr_min: f64,
    pub lr_max: f64,
    /// Steps per learning-rate cycle; `None` means two epochs.
    pub cycle_length: Option<usize>,
    /// Dimension of trainable embeddings (ignored for ingested ones).
    pub embedding_dim: usize,
    /// Tokens seen fewer times in training map to `<unk>`.
    pub min_count: usize,
    /// Global gradient-norm cap.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::Crf,
            epochs: 10,
            dropout: 0.3,
            hidden: 256,
            fc_size: 512,
            seed: 42,
            lr_min: 1e-6,
            lr_max: 1e-4,
            cycle_length: None,
            embedding_dim: 64,
            min_count: 1,
            clip_norm: 5.0,
        }
    }
}

/// Dev-set metric used to pick the returned epoch.
pub const SELECTION_METRIC: &str = "dev-macro-f1";

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("`{key}`: cannot parse `{value}`")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.epochs < 1 {
            return fail("epochs must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.hidden == 0 || self.fc_size == 0 || self.embedding_dim == 0 {
            return fail("layer sizes must be positive".into());
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return fail(format!(
                "learning rates must satisfy 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            ));
        }
        if self.cycle_length.is_some_and(|c| c < 2) {
            return fail("cycle_length must be at least 2".into());
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return fail(format!("clip_norm must be positive, got {}", self.clip_norm));
        }
        Ok(())
    }

    /// Every field as `(key, value)`; [`TrainConfig::set`] accepts the same keys.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("arch", self.architecture.to_string()),
            ("epochs", self.epochs.to_string()),
            ("dropout", self.dropout.to_string()),
            ("hidden", self.hidden.to_string()),
            ("fc_size", self.fc_size.to_string()),
            ("seed", self.seed.to_string()),
            ("lr_min", self.lr_min.to_string()),
            ("lr_max", self.lr_max.to_string()),
            (
                "cycle_length",
                self.cycle_length.map_or("auto".into(), |c| c.to_string()),
            ),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("min_count", self.min_count.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
        ]
    }

    /// Sets one field by key. Dashes in keys are treated as underscores.
    /// Returns `Ok(false)` for keys that are not training settings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "arch" | "architecture" => self.architecture = value.trim().parse()?,
            "epochs" => self.epochs = parse(&key, value)?,
            "dropout" => self.dropout = parse(&key, value)?,
            "hidden" => self.hidden = parse(&key, value)?,
            "fc_size" => self.fc_size = parse(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "lr_min" => self.lr_min = parse(&key, value)?,
            "lr_max" => self.lr_max = parse(&key, value)?,
            "cycle_length" => {
                self.cycle_length = match value.trim() {
                    "auto" => None,
                    v => Some(parse(&key, v)?),
                }
            }
            "embedding_dim" => self.embedding_dim = parse(&key, value)?,
            "min_count" => self.min_count = parse(&key, value)?,
            "clip_norm" => self.clip_norm = parse(&key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_pairs() {
            writeln!(f, "{k}={v}")?;
        }
        writeln!(f, "selection={SELECTION_METRIC}")
    }
}
