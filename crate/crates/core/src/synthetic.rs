//! Generated corpora where some tags can only be recovered from the previous
//! tag.
//!
//! The vocabulary has 50 tokens in three groups:
//!
//! * 24 entity starters (4 per type), always tagged `B-X`;
//! * 16 ambiguous tokens, tagged `O` after `O` or sentence start and `I-X`
//!   after `B-X` or `I-X`;
//! * 10 fillers, always tagged `O`.
//!
//! A tagger that looks at one token at a time cannot label ambiguous tokens,
//! while a model of tag transitions can.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conll::{Corpus, Sentence};
use crate::tagscheme::{expand_bio, EntityTypeSet, Tag, TagVocabulary};

pub const STARTERS_PER_TYPE: usize = 4;
pub const AMBIGUOUS: usize = 16;
pub const FILLERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub min_len: usize,
    pub max_len: usize,
    /// Chance that a token is an entity starter.
    pub p_starter: f64,
    /// Chance that a token is ambiguous; the rest are fillers.
    pub p_ambiguous: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            min_len: 5,
            max_len: 12,
            p_starter: 0.3,
            p_ambiguous: 0.45,
        }
    }
}

fn starter(vocabulary: &TagVocabulary, entity_type: usize, j: usize) -> String {
    format!("{}{j}", vocabulary.type_name(entity_type).to_lowercase())
}

/// All 50 token strings (for the default entity types).
pub fn token_inventory(vocabulary: &TagVocabulary) -> Vec<String> {
    let types = vocabulary.entity_types().len();
    let mut out: Vec<String> = (0..types)
        .flat_map(|t| (0..STARTERS_PER_TYPE).map(move |j| (t, j)))
        .map(|(t, j)| starter(vocabulary, t, j))
        .collect();
    out.extend((0..AMBIGUOUS).map(|j| format!("amb{j}")));
    out.extend((0..FILLERS).map(|j| format!("fill{j}")));
    out
}

fn sentence<R: Rng>(
    vocabulary: &TagVocabulary,
    config: &SyntheticConfig,
    id: String,
    rng: &mut R,
) -> Sentence {
    let types = vocabulary.entity_types().len();
    let n = rng.gen_range(config.min_len..=config.max_len);
    let mut tokens = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    let mut prev: Option<usize> = None;
    for _ in 0..n {
        let u: f64 = rng.gen();
        let (token, tag) = if u < config.p_starter {
            let t = rng.gen_range(0..types);
            (starter(vocabulary, t, rng.gen_range(0..STARTERS_PER_TYPE)), vocabulary.begin(t))
        } else if u < config.p_starter + config.p_ambiguous {
            let tag = match prev.map(|p| vocabulary.tag(p)) {
                Some(Tag::Begin(t) | Tag::Inside(t)) => vocabulary.inside(t),
                _ => 0,
            };
            (format!("amb{}", rng.gen_range(0..AMBIGUOUS)), tag)
        } else {
            (format!("fill{}", rng.gen_range(0..FILLERS)), 0)
        };
        tokens.push(token);
        tags.push(tag);
        prev = Some(tag);
    }
    Sentence {
        id,
        tokens,
        tags: Some(tags),
    }
}

/// `count` labeled sentences with ids `{prefix}-{i}`.
pub fn generate(count: usize, prefix: &str, config: &SyntheticConfig, seed: u64) -> Corpus {
    let vocabulary = expand_bio(&EntityTypeSet::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = (0..count)
        .map(|i| sentence(&vocabulary, config, format!("{prefix}-{i}"), &mut rng))
        .collect();
    Corpus::new(sentences, vocabulary).expect("generated sentences are well formed")
}

/// 2,000 training and 400 dev sentences from independent streams.
pub fn standard_splits(seed: u64) -> (Corpus, Corpus) {
    let config = SyntheticConfig::default();
    (
        generate(2000, "train", &config, seed),
        generate(400, "dev", &config, seed.wrapping_add(1)),
    )
}
