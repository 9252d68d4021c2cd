//! BIO tag expansion, span extraction and the three repair modes.
//!
//!     cargo run --example tag_scheme

use nertag::tagscheme::{
    count_invalid_transitions, expand_bio, extract_spans, repair_bio, EntityTypeSet, RepairMode,
};

fn main() -> nertag::Result<()> {
    let voc = expand_bio(&EntityTypeSet::default());
    println!("{} tags: {}", voc.k(), voc.tags().join(" "));

    // An I- tag right after O has no matching B-.
    let names = ["O", "I-PER", "I-PER", "O", "B-LOC", "I-CW"];
    let tags: Vec<usize> = names.iter().map(|t| voc.index_of(t).unwrap()).collect();
    println!("\ninput:   {}", names.join(" "));
    println!("invalid transitions: {}", count_invalid_transitions(&voc, &tags));

    for mode in [RepairMode::Convert, RepairMode::Ignore, RepairMode::Strict] {
        match repair_bio(&voc, &tags, mode) {
            Ok(fixed) => {
                let shown: Vec<&str> = fixed.iter().map(|&t| voc.name_of(t).unwrap()).collect();
                println!("{mode:<8} {}", shown.join(" "));
                for span in extract_spans(&voc, &fixed) {
                    println!("         {}[{}..{})", voc.type_name(span.entity_type), span.start, span.end);
                }
            }
            Err(e) => println!("{mode:<8} error: {e}"),
        }
    }
    Ok(())
}
