//! Exact CRF inference on a small hand-built problem: partition function,
//! path scores, posterior marginals and Viterbi decoding with and without
//! the BIO mask.
//!
//!     cargo run --example crf_inference

use nertag::crf::{
    forward_backward, log_likelihood, log_partition, sequence_score, viterbi_decode, Emissions,
    Transitions,
};
use nertag::tagscheme::{expand_bio, EntityTypeSet, TransitionMask};

fn main() -> nertag::Result<()> {
    let voc = expand_bio(&EntityTypeSet::new(["PER"])?);
    let (o, b, i) = (0, voc.begin(0), voc.inside(0));

    // The middle token prefers I-PER on its own, which is only legal after B-PER.
    let p = Emissions::from_rows(&[
        vec![1.0, 0.2, 0.0],
        vec![0.0, 0.5, 2.0],
        vec![0.8, 0.0, 0.9],
    ])?;
    // Untrained transitions: nothing but the mask rules out `O -> I-PER`.
    let a = Transitions::zeros(voc.k());

    let log_z = log_partition(&p, &a)?;
    println!("log Z = {log_z:.6}");
    for path in [[o, i, i], [b, i, o], [o, b, o]] {
        let names: Vec<&str> = path.iter().map(|&t| voc.name_of(t).unwrap()).collect();
        println!(
            "{:<16} score {:>7.4}  p = {:.4}",
            names.join(" "),
            sequence_score(&p, &a, &path)?,
            log_likelihood(&p, &a, &path)?.exp()
        );
    }

    let m = forward_backward(&p, &a)?;
    println!("\nposterior marginals:");
    for t in 0..p.len() {
        let row: Vec<String> = m.node.row(t).iter().map(|v| format!("{v:.4}")).collect();
        println!("  token {t}: {}", row.join("  "));
    }

    let show = |path: &[usize]| -> String {
        path.iter().map(|&t| voc.name_of(t).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let (free, s) = viterbi_decode(&p, &a, None)?;
    println!("\nviterbi:             {} ({s:.4})", show(&free));
    let (masked, s) = viterbi_decode(&p, &a, Some(&TransitionMask::bio(&voc)))?;
    println!("viterbi with mask:   {} ({s:.4})", show(&masked));
    Ok(())
}
