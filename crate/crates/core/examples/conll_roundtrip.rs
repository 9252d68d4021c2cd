//! Reads a two-column CoNLL file, prints its entities and writes it back.
//!
//!     cargo run --example conll_roundtrip

use nertag::conll::{build_token_vocabulary, parse_conll, write_conll, ParseOptions};
use nertag::tagscheme::{expand_bio, extract_spans, EntityTypeSet};

const TEXT: &str = "\
Ana B-PER
María I-PER
vive O
en O
Lima B-LOC

Leí O
Cien B-CW
Años I-CW
";

fn main() -> nertag::Result<()> {
    let voc = expand_bio(&EntityTypeSet::default());
    let corpus = parse_conll(TEXT.as_bytes(), &voc, &ParseOptions::default())?;
    for s in corpus.sentences() {
        println!("{} ({} tokens)", s.id, s.len());
        for span in extract_spans(&voc, s.tags.as_deref().unwrap_or_default()) {
            let text = s.tokens[span.start..span.end].join(" ");
            println!("  {:<5} {text}", voc.type_name(span.entity_type));
        }
    }
    let tokens = build_token_vocabulary(&corpus, 1);
    println!("\n{} token types (including the unknown token)", tokens.len());

    let mut out = Vec::new();
    write_conll(&corpus, &mut out)?;
    let again = parse_conll(&out[..], &voc, &ParseOptions::default())?;
    println!("round trip identical: {}", again == corpus);
    print!("\n{}", String::from_utf8_lossy(&out));
    Ok(())
}
