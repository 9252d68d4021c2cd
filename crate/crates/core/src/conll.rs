//! CoNLL-style column files, token vocabularies and precomputed embeddings.
//!
//! Column files hold one token per line with whitespace-separated fields and
//! a blank line between sentences. A `# id <name>` line names the sentence
//! that follows; any other line starting with `#` is a comment.
//!
//! Embedding files start with `dim <d>`, then for each sentence a
//! `# id <name>` line followed by one row of `d` floats per token.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::tagscheme::TagVocabulary;
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub tags: Option<Vec<usize>>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    vocabulary: TagVocabulary,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>, vocabulary: TagVocabulary) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if s.tokens.is_empty() {
                return Err(Error::invalid(format!("sentence `{}` has no tokens", s.id)));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::invalid(format!("duplicate sentence id `{}`", s.id)));
            }
            if let Some(tags) = &s.tags {
                if tags.len() != s.tokens.len() {
                    return Err(Error::invalid(format!(
                        "sentence `{}`: {} tags for {} tokens",
                        s.id,
                        tags.len(),
                        s.tokens.len()
                    )));
                }
                vocabulary.check_tags(tags)?;
            }
        }
        Ok(Corpus {
            sentences,
            vocabulary,
        })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn vocabulary(&self) -> &TagVocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn is_labeled(&self) -> bool {
        self.sentences.iter().all(|s| s.tags.is_some())
    }

    /// Copy of this corpus with `tags[i]` attached to sentence `i`.
    pub fn with_tags(&self, tags: Vec<Vec<usize>>) -> Result<Corpus> {
        if tags.len() != self.sentences.len() {
            return Err(Error::shape(format!(
                "{} tag sequences for {} sentences",
                tags.len(),
                self.sentences.len()
            )));
        }
        let sentences = self
            .sentences
            .iter()
            .zip(tags)
            .map(|(s, t)| Sentence {
                tags: Some(t),
                ..s.clone()
            })
            .collect();
        Corpus::new(sentences, self.vocabulary.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub token_column: usize,
    /// `None` selects the last field.
    pub tag_column: Option<usize>,
    pub has_labels: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            token_column: 0,
            tag_column: None,
            has_labels: true,
        }
    }
}

pub fn parse_conll<R: BufRead>(
    reader: R,
    vocabulary: &TagVocabulary,
    options: &ParseOptions,
) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut pending_id: Option<String> = None;
    let mut tokens = Vec::new();
    let mut tags = Vec::new();

    let mut flush = |id: &mut Option<String>, tokens: &mut Vec<String>, tags: &mut Vec<usize>| {
        if tokens.is_empty() {
            return;
        }
        let id = id
            .take()
            .unwrap_or_else(|| format!("sent-{}", sentences.len() + 1));
        sentences.push(Sentence {
            id,
            tokens: std::mem::take(tokens),
            tags: options.has_labels.then(|| std::mem::take(tags)),
        });
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut pending_id, &mut tokens, &mut tags);
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(id) = comment.trim_start().strip_prefix("id") {
                if id.starts_with(char::is_whitespace) {
                    // an id line always starts a new sentence
                    flush(&mut pending_id, &mut tokens, &mut tags);
                    pending_id = Some(id.trim().to_string());
                }
            }
            continue;
        }

        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let token = fields.get(options.token_column).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!(
                "{} fields, token column {} missing",
                fields.len(),
                options.token_column
            ),
        })?;
        if options.has_labels {
            let tag_column = match options.tag_column {
                Some(c) => c,
                None if fields.len() > options.token_column + 1 => fields.len() - 1,
                None => usize::MAX,
            };
            let name = fields.get(tag_column).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("{} fields, tag column missing", fields.len()),
            })?;
            let tag = vocabulary.index_of(name).ok_or_else(|| Error::UnknownTag {
                line: lineno,
                tag: name.to_string(),
            })?;
            tags.push(tag);
        }
        tokens.push(token.to_string());
    }
    flush(&mut pending_id, &mut tokens, &mut tags);

    Corpus::new(sentences, vocabulary.clone())
}

/// Writes `corpus` as `# id` blocks of `token _ _ tag` lines.
pub fn write_conll<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let voc = corpus.vocabulary();
    for s in corpus.sentences() {
        let tags = s
            .tags
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("sentence `{}` has no tags to write", s.id)))?;
        writeln!(out, "# id {}", s.id)?;
        for (token, &tag) in s.tokens.iter().zip(tags) {
            writeln!(out, "{token} _ _ {}", voc.tags()[tag])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const RESERVED: [&str; 2] = ["<pad>", "<unk>"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenVocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl TokenVocabulary {
    /// Vocabulary over `tokens` (reserved entries are prepended).
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Result<Self> {
        let mut voc = TokenVocabulary {
            tokens: RESERVED.iter().map(|s| s.to_string()).collect(),
            index: HashMap::new(),
        };
        for token in tokens {
            if voc.index.contains_key(&token) || RESERVED.contains(&token.as_str()) {
                return Err(Error::invalid(format!("duplicate token `{token}`")));
            }
            voc.index.insert(token.clone(), voc.tokens.len());
            voc.tokens.push(token);
        }
        Ok(voc)
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    /// Includes the reserved entries.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Non-reserved entries in index order.
    pub fn entries(&self) -> &[String] {
        &self.tokens[RESERVED.len()..]
    }
}

pub fn build_token_vocabulary(corpus: &Corpus, min_count: usize) -> TokenVocabulary {
    let min_count = min_count.max(1);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order = Vec::new();
    for token in corpus.sentences().iter().flat_map(|s| &s.tokens) {
        let c = counts.entry(token.as_str()).or_insert(0);
        if *c == 0 {
            order.push(token.as_str());
        }
        *c += 1;
    }
    let kept = order
        .into_iter()
        .filter(|t| counts[t] >= min_count && !RESERVED.contains(t))
        .map(str::to_string);
    TokenVocabulary::from_tokens(kept).expect("tokens are unique")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    matrices: HashMap<String, Matrix>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            dim,
            matrices: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, matrix: Matrix) -> Result<()> {
        if matrix.cols() != self.dim {
            return Err(Error::Dimension(format!(
                "embedding rows have {} values, expected {}",
                matrix.cols(),
                self.dim
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("embedding matrix".into()));
        }
        self.matrices.insert(id.into(), matrix);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&Matrix> {
        self.matrices.get(id)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.matrices.keys().map(String::as_str)
    }
}

/// Reads an embedding file, checking every block against `corpus`.
pub fn load_embeddings<R: BufRead>(reader: R, corpus: &Corpus) -> Result<EmbeddingSet> {
    let mut lines = reader.lines().enumerate();
    let dim = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::Parse {
                line: 1,
                message: "missing `dim <d>` header".into(),
            });
        };
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let dim = line
            .strip_prefix("dim")
            .and_then(|d| d.trim().parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `dim <d>` header, found `{line}`"),
            })?;
        break dim;
    };

    let mut set = EmbeddingSet::new(dim);
    let mut current: Option<(String, Vec<f64>, usize)> = None;

    let finish = |set: &mut EmbeddingSet, block: Option<(String, Vec<f64>, usize)>| -> Result<()> {
        let Some((id, values, rows)) = block else {
            return Ok(());
        };
        let sentence = corpus
            .get(&id)
            .ok_or_else(|| Error::invalid(format!("embeddings for unknown sentence `{id}`")))?;
        if rows != sentence.len() {
            return Err(Error::Dimension(format!(
                "sentence `{id}` has {} tokens but {rows} embedding rows",
                sentence.len()
            )));
        }
        if set.get(&id).is_some() {
            return Err(Error::invalid(format!("duplicate embeddings for `{id}`")));
        }
        set.insert(id, Matrix::from_vec(rows, dim, values)?)
    };

    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let id = rest
                .trim_start()
                .strip_prefix("id")
                .filter(|r| r.starts_with(char::is_whitespace))
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("expected `# id <sid>`, found `{line}`"),
                })?;
            finish(&mut set, current.take())?;
            current = Some((id.trim().to_string(), Vec::new(), 0));
            continue;
        }
        let Some((_, values, rows)) = current.as_mut() else {
            return Err(Error::Parse {
                line: lineno,
                message: "embedding row before any `# id` line".into(),
            });
        };
        let before = values.len();
        for field in line.split_whitespace() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("embedding value on line {lineno}")));
            }
            values.push(v);
        }
        if values.len() - before != dim {
            return Err(Error::Dimension(format!(
                "line {lineno}: {} values, header says {dim}",
                values.len() - before
            )));
        }
        *rows += 1;
    }
    finish(&mut set, current)?;
    Ok(set)
}

/// Writes `set` in the format read by [`load_embeddings`]; blocks follow
/// `order` so output is deterministic.
pub fn write_embeddings<'a, W, I>(set: &EmbeddingSet, order: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a str>,
{
    writeln!(out, "dim {}", set.dim())?;
    for id in order {
        let m = set
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no embeddings for `{id}`")))?;
        writeln!(out, "# id {id}")?;
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
