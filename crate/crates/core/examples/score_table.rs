//! Span-level scoring: per-class precision, recall and F1 with their macro
//! average, from a gold and a predicted tagging.
//!
//!     cargo run --example score_table

use nertag::conll::{Corpus, Sentence};
use nertag::metrics::{f1, score, ScoreOptions};
use nertag::tagscheme::{expand_bio, EntityTypeSet};

fn main() -> nertag::Result<()> {
    let voc = expand_bio(&EntityTypeSet::new(["PER", "LOC"])?);
    let idx = |names: &str| -> Vec<usize> {
        names.split(' ').map(|t| voc.index_of(t).unwrap()).collect()
    };
    let gold = Corpus::new(
        vec![
            Sentence {
                id: "a".into(),
                tokens: "Ana María vive en Lima".split(' ').map(String::from).collect(),
                tags: Some(idx("B-PER I-PER O O B-LOC")),
            },
            Sentence {
                id: "b".into(),
                tokens: "Luis fue a Quito".split(' ').map(String::from).collect(),
                tags: Some(idx("B-PER O O B-LOC")),
            },
        ],
        voc.clone(),
    )?;
    // A truncated person, a correct location, a type error and a miss.
    let predicted = vec![idx("B-PER O O O B-LOC"), idx("B-LOC O O O")];
    let report = score(&gold, &predicted, ScoreOptions::default())?;
    println!("{report}");
    println!("{}", report.to_kv());
    println!("f1(0.75, 0.6) = {:.4}", f1(0.75, 0.6)?);
    Ok(())
}
