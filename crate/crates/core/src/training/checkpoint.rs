//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    b"NERTAGCK"
//! version  u32
//! meta     u32 count, then count x (string key, string value)
//! tokens   u32 count, then count x string     (trainable embeddings only)
//! tensors  u32 count, then count x (string name, u64 rows, u64 cols, rows*cols f64)
//! ```
//!
//! A string is a u32 byte length followed by UTF-8 bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{TrainConfig, SELECTION_METRIC};
use super::model::Model;
use crate::conll::TokenVocabulary;
use crate::encoders::{Activation, EmbeddingTable};
use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::tagscheme::TagVocabulary;
use crate::tensor::Matrix;

pub const MAGIC: &[u8; 8] = b"NERTAGCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model with everything needed to use it again.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub model: Model,
    pub best_dev_f1: f64,
    pub best_epoch: usize,
}

impl Checkpoint {
    pub fn ensure_vocabulary(&self, tags: &TagVocabulary) -> Result<()> {
        self.model.ensure_vocabulary(tags)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());

        let mut meta: Vec<(String, String)> = self
            .config
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (format!("config.{k}"), v))
            .collect();
        meta.push(("selection".into(), SELECTION_METRIC.into()));
        meta.push((
            "entity_types".into(),
            self.model.tags().entity_types().names().join(" "),
        ));
        meta.push(("input_dim".into(), self.model.input_dim().to_string()));
        let source = if self.model.embeddings().is_some() { "trainable" } else { "ingested" };
        meta.push(("embeddings".into(), source.into()));
        if let Some(fc) = self.model.fc_head() {
            meta.push(("activation".into(), fc.activation.to_string()));
        }
        meta.push(("best_dev_f1".into(), self.best_dev_f1.to_string()));
        meta.push(("best_epoch".into(), self.best_epoch.to_string()));
        put_u32(&mut out, meta.len());
        for (k, v) in &meta {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }

        let tokens = self
            .model
            .embeddings()
            .map_or(&[][..], |t| t.vocabulary().entries());
        put_u32(&mut out, tokens.len());
        for t in tokens {
            put_str(&mut out, t);
        }

        let tensors = self.model.named_tensors();
        put_u32(&mut out, tensors.len());
        for (name, m) in tensors {
            put_str(&mut out, &name);
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::CorruptCheckpoint("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }

        let mut meta = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            meta.insert(k, v);
        }
        let token_count = r.u32()?;
        let mut tokens = Vec::with_capacity(token_count.min(1 << 20) as usize);
        for _ in 0..token_count {
            tokens.push(r.string()?);
        }
        let mut tensors = BTreeMap::new();
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let len = rows
                .checked_mul(cols)
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| Error::CorruptCheckpoint(format!("tensor `{name}` is too large")))?;
            let data = r
                .take(len)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.insert(name, Matrix::from_vec(rows, cols, data)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        assemble(&meta, tokens, tensors)
    }
}

fn get<'a>(meta: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    meta.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::CorruptCheckpoint(format!("missing metadata `{key}`")))
}

fn parse_meta<T: std::str::FromStr>(meta: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let v = get(meta, key)?;
    v.parse()
        .map_err(|_| Error::CorruptCheckpoint(format!("metadata `{key}` has bad value `{v}`")))
}

fn assemble(
    meta: &BTreeMap<String, String>,
    tokens: Vec<String>,
    mut tensors: BTreeMap<String, Matrix>,
) -> Result<Checkpoint> {
    let mut config = TrainConfig::default();
    for (k, v) in meta {
        if let Some(key) = k.strip_prefix("config.") {
            let known = config
                .set(key, v)
                .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
            if !known {
                return Err(Error::CorruptCheckpoint(format!("unknown setting `{key}`")));
            }
        }
    }
    let tags = TagVocabulary::from_type_names(get(meta, "entity_types")?.split_whitespace())
        .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    let input_dim: usize = parse_meta(meta, "input_dim")?;

    let embeddings = match get(meta, "embeddings")? {
        "trainable" => {
            let voc = TokenVocabulary::from_tokens(tokens)
                .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
            let rows = voc.len();
            Some(EmbeddingTable::from_parts(voc, Matrix::zeros(rows, input_dim))?)
        }
        "ingested" if tokens.is_empty() => None,
        other => {
            return Err(Error::CorruptCheckpoint(format!(
                "bad embeddings entry `{other}` with {} tokens",
                tokens.len()
            )))
        }
    };

    let mut model = Model::skeleton(
        config.architecture,
        tags,
        input_dim,
        embeddings,
        config.hidden,
        config.fc_size,
    )?;
    if let Some(a) = meta.get("activation") {
        let _: Activation = a.parse()?;
    }
    for (name, slot) in model.named_tensors_mut() {
        let m = tensors.remove(&name).ok_or_else(|| {
            Error::CorruptCheckpoint(format!("tensor `{name}` is missing"))
        })?;
        if m.shape() != slot.shape() {
            return Err(Error::Dimension(format!(
                "tensor `{name}` is {}x{}, the declared layout needs {}x{}",
                m.rows(),
                m.cols(),
                slot.rows(),
                slot.cols()
            )));
        }
        *slot = m;
    }
    if let Some(name) = tensors.keys().next() {
        return Err(Error::CorruptCheckpoint(format!("unexpected tensor `{name}`")));
    }
    Ok(Checkpoint {
        config,
        model,
        best_dev_f1: parse_meta(meta, "best_dev_f1")?,
        best_epoch: parse_meta(meta, "best_epoch")?,
    })
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&u32::try_from(n).expect("count fits in u32").to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptCheckpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::CorruptCheckpoint("metadata is not UTF-8".into()))
    }
}

fn file_error(path: &Path, source: std::io::Error) -> Error {
    Error::File {
        path: path.display().to_string(),
        source,
    }
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// save never leaves a partial checkpoint at `path`.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("`{}` is not a file path", path.display())))?;
    tmp.set_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&checkpoint.to_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        file_error(path, e)
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| file_error(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
