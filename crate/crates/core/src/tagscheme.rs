//! BIO label space: entity types, their tag expansion, transition validity,
//! span extraction and repair of malformed tag sequences.
//!
//! Tags are laid out as `[O, B-T1, I-T1, B-T2, I-T2, ...]` following the
//! order of the [`EntityTypeSet`]. Two virtual states, START and STOP, sit
//! just past the real tags at indices `k` and `k + 1`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const OUTSIDE: usize = 0;

pub const DEFAULT_ENTITY_TYPES: [&str; 6] = ["PER", "LOC", "GRP", "CORP", "PROD", "CW"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityTypeSet {
    types: Vec<String>,
}

impl EntityTypeSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let types: Vec<String> = names.into_iter().map(Into::into).collect();
        if types.is_empty() {
            return Err(Error::invalid("entity type set is empty"));
        }
        for (i, name) in types.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::invalid("entity type name is empty"));
            }
            if name.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!(
                    "entity type `{name}` contains whitespace"
                )));
            }
            if types[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate entity type `{name}`")));
            }
        }
        Ok(EntityTypeSet { types })
    }

    pub fn names(&self) -> &[String] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }
}

impl Default for EntityTypeSet {
    fn default() -> Self {
        EntityTypeSet {
            types: DEFAULT_ENTITY_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Decoded form of a real tag index. The payload is an entity type index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Outside,
    Begin(usize),
    Inside(usize),
}

/// Either a real tag or one of the two virtual boundary states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Start,
    Stop,
    Real(Tag),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagVocabulary {
    types: EntityTypeSet,
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

/// Builds the BIO vocabulary for `types`: `O` first, then `B-X`, `I-X` per type.
pub fn expand_bio(types: &EntityTypeSet) -> TagVocabulary {
    let mut tags = Vec::with_capacity(1 + 2 * types.len());
    tags.push("O".to_string());
    for name in types.names() {
        tags.push(format!("B-{name}"));
        tags.push(format!("I-{name}"));
    }
    let index = tags
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    TagVocabulary {
        types: types.clone(),
        tags,
        index,
    }
}

impl TagVocabulary {
    /// Validates the names and expands them in one step.
    pub fn from_type_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Ok(expand_bio(&EntityTypeSet::new(names)?))
    }

    pub fn entity_types(&self) -> &EntityTypeSet {
        &self.types
    }

    /// Number of real tags.
    pub fn k(&self) -> usize {
        self.tags.len()
    }

    pub fn start(&self) -> usize {
        self.tags.len()
    }

    pub fn stop(&self) -> usize {
        self.tags.len() + 1
    }

    /// Real tags plus START and STOP.
    pub fn num_states(&self) -> usize {
        self.tags.len() + 2
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name_of(&self, index: usize) -> Option<&str> {
        self.tags.get(index).map(String::as_str)
    }

    pub fn type_name(&self, entity_type: usize) -> &str {
        &self.types.names()[entity_type]
    }

    pub fn begin(&self, entity_type: usize) -> usize {
        1 + 2 * entity_type
    }

    pub fn inside(&self, entity_type: usize) -> usize {
        2 + 2 * entity_type
    }

    /// Decodes a real tag index. Panics on virtual or out-of-range indices.
    pub fn tag(&self, index: usize) -> Tag {
        assert!(index < self.k(), "tag index {index} out of range");
        match index {
            OUTSIDE => Tag::Outside,
            i if i % 2 == 1 => Tag::Begin((i - 1) / 2),
            i => Tag::Inside((i - 2) / 2),
        }
    }

    fn state(&self, index: usize) -> Result<State> {
        match index {
            i if i < self.k() => Ok(State::Real(self.tag(i))),
            i if i == self.start() => Ok(State::Start),
            i if i == self.stop() => Ok(State::Stop),
            i => Err(Error::invalid(format!(
                "state index {i} outside 0..{}",
                self.num_states()
            ))),
        }
    }

    fn state_name(&self, index: usize) -> String {
        match index {
            i if i < self.k() => self.tags[i].clone(),
            i if i == self.start() => "START".to_string(),
            i if i == self.stop() => "STOP".to_string(),
            i => format!("#{i}"),
        }
    }

    pub(crate) fn check_tags(&self, tags: &[usize]) -> Result<()> {
        match tags.iter().find(|&&t| t >= self.k()) {
            Some(t) => Err(Error::invalid(format!(
                "tag index {t} is not a real tag (k = {})",
                self.k()
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    /// Index into the vocabulary's [`EntityTypeSet`].
    pub entity_type: usize,
}

impl EntitySpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// BIO validity of a transition between states (real tags or START/STOP).
///
/// Only transitions into `I-X` can be invalid: they require the previous
/// state to be `B-X` or `I-X` of the same type.
pub fn is_valid_transition(voc: &TagVocabulary, from: usize, to: usize) -> Result<bool> {
    let from = voc.state(from)?;
    let to = voc.state(to)?;
    Ok(match to {
        State::Real(Tag::Inside(x)) => {
            matches!(from, State::Real(Tag::Begin(y)) | State::Real(Tag::Inside(y)) if y == x)
        }
        _ => true,
    })
}

/// Allowed-transition table over all `k + 2` states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMask {
    size: usize,
    allowed: Vec<bool>,
}

impl TransitionMask {
    pub fn allow_all(num_states: usize) -> Self {
        TransitionMask {
            size: num_states,
            allowed: vec![true; num_states * num_states],
        }
    }

    /// The BIO constraint mask for `voc`.
    pub fn bio(voc: &TagVocabulary) -> Self {
        let n = voc.num_states();
        let mut allowed = Vec::with_capacity(n * n);
        for from in 0..n {
            for to in 0..n {
                allowed.push(is_valid_transition(voc, from, to).expect("indices in range"));
            }
        }
        TransitionMask { size: n, allowed }
    }

    pub fn num_states(&self) -> usize {
        self.size
    }

    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.size + to]
    }

    pub fn set(&mut self, from: usize, to: usize, allowed: bool) {
        self.allowed[from * self.size + to] = allowed;
    }
}

/// Counts adjacent pairs (including the START edge) that violate BIO.
pub fn count_invalid_transitions(voc: &TagVocabulary, tags: &[usize]) -> usize {
    let mut prev = voc.start();
    let mut count = 0;
    for &t in tags {
        if !is_valid_transition(voc, prev, t).unwrap_or(false) {
            count += 1;
        }
        prev = t;
    }
    count
}

/// Decodes entity spans from a tag sequence.
///
/// A span opens at each `B-X` and extends through the following run of
/// `I-X`. Orphan `I-` tags never open a span; use [`repair_bio`] first if
/// they should.
pub fn extract_spans(voc: &TagVocabulary, tags: &[usize]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    for (i, &t) in tags.iter().enumerate() {
        match voc.tag(t) {
            Tag::Inside(x) if matches!(open, Some((_, y)) if y == x) => {}
            tag => {
                if let Some((start, x)) = open.take() {
                    spans.push(EntitySpan {
                        start,
                        end: i,
                        entity_type: x,
                    });
                }
                if let Tag::Begin(x) = tag {
                    open = Some((i, x));
                }
            }
        }
    }
    if let Some((start, x)) = open {
        spans.push(EntitySpan {
            start,
            end: tags.len(),
            entity_type: x,
        });
    }
    spans
}

/// Renders non-overlapping spans back into a length-`n` BIO sequence.
pub fn spans_to_tags(voc: &TagVocabulary, spans: &[EntitySpan], n: usize) -> Result<Vec<usize>> {
    let mut tags = vec![OUTSIDE; n];
    for span in spans {
        if span.start >= span.end || span.end > n || span.entity_type >= voc.types.len() {
            return Err(Error::invalid(format!("span {span:?} invalid for length {n}")));
        }
        if tags[span.start..span.end].iter().any(|&t| t != OUTSIDE) {
            return Err(Error::invalid(format!("span {span:?} overlaps another span")));
        }
        tags[span.start] = voc.begin(span.entity_type);
        for t in &mut tags[span.start + 1..span.end] {
            *t = voc.inside(span.entity_type);
        }
    }
    Ok(tags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepairMode {
    /// Reject any invalid transition.
    Strict,
    /// Promote an orphan `I-X` to `B-X`.
    #[default]
    Convert,
    /// Replace an orphan `I-X` with `O`.
    Ignore,
}

impl FromStr for RepairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(RepairMode::Strict),
            "convert" => Ok(RepairMode::Convert),
            "ignore" => Ok(RepairMode::Ignore),
            other => Err(Error::invalid(format!(
                "unknown repair mode `{other}` (expected strict, convert or ignore)"
            ))),
        }
    }
}

impl fmt::Display for RepairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairMode::Strict => "strict",
            RepairMode::Convert => "convert",
            RepairMode::Ignore => "ignore",
        })
    }
}

/// Fixes orphan `I-` tags according to `mode`. The output never contains an
/// invalid transition.
pub fn repair_bio(voc: &TagVocabulary, tags: &[usize], mode: RepairMode) -> Result<Vec<usize>> {
    voc.check_tags(tags)?;
    let mut out = Vec::with_capacity(tags.len());
    let mut prev = voc.start();
    for (i, &t) in tags.iter().enumerate() {
        let fixed = if is_valid_transition(voc, prev, t)? {
            t
        } else {
            let Tag::Inside(x) = voc.tag(t) else {
                unreachable!("only I- tags can be invalid")
            };
            match mode {
                RepairMode::Strict => {
                    return Err(Error::SchemeViolation {
                        position: i,
                        from: voc.state_name(prev),
                        to: voc.state_name(t),
                    })
                }
                RepairMode::Convert => voc.begin(x),
                RepairMode::Ignore => OUTSIDE,
            }
        };
        out.push(fixed);
        prev = fixed;
    }
    Ok(out)
}
