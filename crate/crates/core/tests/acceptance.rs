//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.
//!
//!     cargo test --test acceptance

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nertag::conll::{parse_conll, write_conll, Corpus, ParseOptions, Sentence};
use nertag::crf::{
    forward_backward, log_partition, nll_gradients, viterbi_decode, Emissions, Transitions,
};
use nertag::encoders::{
    bilstm_backward, bilstm_forward, cross_entropy_and_grads, fc_head_forward, BiLstmParams,
    FcHeadParams, Mode,
};
use nertag::gradcheck::{central_differences, max_relative_error, STEP, TOLERANCE};
use nertag::metrics::{f1, macro_average, ClassScore};
use nertag::params::Parameters;
use nertag::synthetic::{generate, standard_splits, SyntheticConfig};
use nertag::tagscheme::{
    count_invalid_transitions, expand_bio, repair_bio, EntityTypeSet, RepairMode,
    TransitionMask,
};
use nertag::tensor::{log_sum_exp, Matrix};
use nertag::training::{
    load_checkpoint, predict_corpus, save_checkpoint, train, Architecture, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(failures: Vec<String>, summary: String) -> Self {
        Outcome {
            pass: failures.is_empty(),
            summary,
            details: failures,
        }
    }
}

fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn random_crf(n: usize, k: usize, rng: &mut ChaCha8Rng) -> (Emissions, Transitions) {
    let p = Emissions::new(uniform_matrix(n, k, -5.0, 5.0, rng)).unwrap();
    let a = Transitions::from_matrix(uniform_matrix(k + 2, k + 2, -5.0, 5.0, rng)).unwrap();
    (p, a)
}

/// Every path of length `n` over `k` tags, in lexicographic order.
fn all_paths(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    out
}

/// Path score summed term by term: start edge, then emission and transition
/// per position, then the stop edge.
fn brute_score(p: &Emissions, a: &Transitions, path: &[usize]) -> f64 {
    let m = a.matrix();
    let (start, stop) = (a.k(), a.k() + 1);
    let mut prev = start;
    let mut s = 0.0;
    for (i, &y) in path.iter().enumerate() {
        s = s + m[(prev, y)] + p.matrix()[(i, y)];
        prev = y;
    }
    s + m[(prev, stop)]
}

fn crf_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    let instances = 200;
    for case in 0..instances {
        let n = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=5);
        let (p, a) = random_crf(n, k, &mut rng);
        let paths = all_paths(n, k);
        let scores: Vec<f64> = paths.iter().map(|y| brute_score(&p, &a, y)).collect();
        let z = log_partition(&p, &a).unwrap();
        let err = (z - log_sum_exp(&scores)).abs();
        worst_z = worst_z.max(err);
        if err > 1e-8 {
            failures.push(format!("case {case} (n={n}, k={k}): log Z off by {err:e}"));
        }
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Among optimal paths, the one that is smallest when read from the end.
        let expected = paths
            .iter()
            .zip(&scores)
            .filter(|(_, &s)| s == best)
            .map(|(y, _)| y)
            .min_by(|x, y| x.iter().rev().cmp(y.iter().rev()))
            .unwrap();
        let (path, score) = viterbi_decode(&p, &a, None).unwrap();
        if score != best || &path != expected {
            failures.push(format!(
                "case {case}: viterbi {path:?} ({score}) vs enumeration {expected:?} ({best})"
            ));
        }
    }

    // Integer scores make ties common and exercise the tie-break.
    let mut ties = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=4);
        let p = Emissions::new(
            Matrix::from_vec(n, k, (0..n * k).map(|_| rng.gen_range(-1..=1) as f64).collect())
                .unwrap(),
        )
        .unwrap();
        let m = Matrix::from_vec(
            k + 2,
            k + 2,
            (0..(k + 2) * (k + 2)).map(|_| rng.gen_range(-1..=1) as f64).collect(),
        )
        .unwrap();
        let a = Transitions::from_matrix(m).unwrap();
        let paths = all_paths(n, k);
        let scores: Vec<f64> = paths.iter().map(|y| brute_score(&p, &a, y)).collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let optimal: Vec<&Vec<usize>> = paths
            .iter()
            .zip(&scores)
            .filter(|(_, &s)| s == best)
            .map(|(y, _)| y)
            .collect();
        if optimal.len() > 1 {
            ties += 1;
        }
        let expected = optimal
            .into_iter()
            .min_by(|x, y| x.iter().rev().cmp(y.iter().rev()))
            .unwrap();
        let (path, score) = viterbi_decode(&p, &a, None).unwrap();
        if score != best || &path != expected {
            failures.push(format!("tie case {case}: viterbi {path:?} vs {expected:?}"));
        }
    }
    Outcome::new(
        failures,
        format!("{instances} random instances + 100 tie instances ({ties} with ties); max |log Z error| {worst_z:.1e}"),
    )
}

fn check(label: String, analytic: &[f64], numeric: &[f64], failures: &mut Vec<String>, worst: &mut f64) {
    let err = max_relative_error(analytic, numeric);
    *worst = worst.max(err);
    if err > TOLERANCE {
        failures.push(format!("{label}: relative error {err:e}"));
    }
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let instances = 25;

    for case in 0..instances {
        // CRF negative log-likelihood.
        let n = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=4);
        let (p, a) = random_crf(n, k, &mut rng);
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let g = nll_gradients(&p, &a, &gold).unwrap();
        let nll = |p: &Emissions, a: &Transitions| nll_gradients(p, a, &gold).unwrap().loss;
        let fd = central_differences(p.matrix().as_slice(), STEP, |v| {
            nll(&Emissions::new(Matrix::from_vec(n, k, v.to_vec()).unwrap()).unwrap(), &a)
        });
        check(format!("crf case {case} emissions"), g.emissions.as_slice(), &fd, &mut failures, &mut worst);
        let fd = central_differences(a.matrix().as_slice(), STEP, |v| {
            let mut b = a.clone();
            b.matrix_mut().as_mut_slice().copy_from_slice(v);
            nll(&p, &b)
        });
        check(format!("crf case {case} transitions"), g.transitions.as_slice(), &fd, &mut failures, &mut worst);

        // BiLSTM against the loss sum(grad_out * output).
        let (n, d, h) = (rng.gen_range(1..=5), rng.gen_range(1..=4), rng.gen_range(1..=4));
        let mut params = BiLstmParams::new(d, h, &mut rng);
        for (_, m) in params.named_tensors_mut() {
            m.as_mut_slice().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        }
        let x = uniform_matrix(n, d, -1.0, 1.0, &mut rng);
        let grad_out = uniform_matrix(n, 2 * h, -1.0, 1.0, &mut rng);
        let loss = |x: &Matrix, q: &BiLstmParams| -> f64 {
            let (out, _) = bilstm_forward(x, q).unwrap();
            out.as_slice().iter().zip(grad_out.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = bilstm_forward(&x, &params).unwrap();
        let (grad_x, grads) = bilstm_backward(&cache, &params, &grad_out).unwrap();
        let fd = central_differences(x.as_slice(), STEP, |v| {
            loss(&Matrix::from_vec(n, d, v.to_vec()).unwrap(), &params)
        });
        check(format!("bilstm case {case} input"), grad_x.as_slice(), &fd, &mut failures, &mut worst);
        let analytic = grads.named_tensors();
        for (t, (name, tensor)) in params.named_tensors().into_iter().enumerate() {
            let fd = central_differences(tensor.as_slice(), STEP, |v| {
                let mut q = params.clone();
                q.named_tensors_mut()[t].1.as_mut_slice().copy_from_slice(v);
                loss(&x, &q)
            });
            check(format!("bilstm case {case} {name}"), analytic[t].1.as_slice(), &fd, &mut failures, &mut worst);
        }

        // Softmax head with mean cross-entropy.
        let (n, d, hidden, k) = (
            rng.gen_range(1..=5),
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
            rng.gen_range(2..=5),
        );
        let mut fc = FcHeadParams::new(d, hidden, k, &mut rng);
        for (_, m) in fc.named_tensors_mut() {
            m.as_mut_slice().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        }
        let x = uniform_matrix(n, d, -1.0, 1.0, &mut rng);
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let ce = |x: &Matrix, q: &FcHeadParams| -> f64 {
            let out = fc_head_forward(x, q, 0.0, Mode::Eval).unwrap();
            -gold.iter().enumerate().map(|(i, &g)| out.log_probs[(i, g)]).sum::<f64>() / n as f64
        };
        let out = fc_head_forward(&x, &fc, 0.0, Mode::Eval).unwrap();
        let g = cross_entropy_and_grads(&out.log_probs, &gold, &out.cache, &fc).unwrap();
        let fd = central_differences(x.as_slice(), STEP, |v| {
            ce(&Matrix::from_vec(n, d, v.to_vec()).unwrap(), &fc)
        });
        check(format!("fc case {case} input"), g.input.as_slice(), &fd, &mut failures, &mut worst);
        let analytic = g.params.named_tensors();
        for (t, (name, tensor)) in fc.named_tensors().into_iter().enumerate() {
            let fd = central_differences(tensor.as_slice(), STEP, |v| {
                let mut q = fc.clone();
                q.named_tensors_mut()[t].1.as_mut_slice().copy_from_slice(v);
                ce(&x, &q)
            });
            check(format!("fc case {case} {name}"), analytic[t].1.as_slice(), &fd, &mut failures, &mut worst);
        }
    }
    Outcome::new(
        failures,
        format!("{instances} instances each for CRF, BiLSTM, softmax head; max relative error {worst:.1e}"),
    )
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let (mut worst_sum, mut worst_enum): (f64, f64) = (0.0, 0.0);
    let mut sums = |m: &nertag::crf::Marginals, label: &str, failures: &mut Vec<String>| {
        let mut slabs: Vec<f64> = (0..m.node.rows()).map(|t| m.node.row(t).iter().sum()).collect();
        slabs.extend(m.edge.iter().map(|e| e.as_slice().iter().sum::<f64>()));
        slabs.push(m.start.iter().sum());
        slabs.push(m.stop.iter().sum());
        for s in slabs {
            worst_sum = worst_sum.max((s - 1.0).abs());
            if (s - 1.0).abs() > 1e-9 {
                failures.push(format!("{label}: slab sums to {s}"));
            }
        }
    };

    for case in 0..200 {
        let n = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=4);
        let (p, a) = random_crf(n, k, &mut rng);
        let m = forward_backward(&p, &a).unwrap();
        sums(&m, &format!("case {case}"), &mut failures);

        let paths = all_paths(n, k);
        let scores: Vec<f64> = paths.iter().map(|y| brute_score(&p, &a, y)).collect();
        let log_z = log_sum_exp(&scores);
        let mut node = Matrix::zeros(n, k);
        let mut edge = vec![Matrix::zeros(k, k); n.saturating_sub(1)];
        for (y, s) in paths.iter().zip(&scores) {
            let prob = (s - log_z).exp();
            for t in 0..n {
                node[(t, y[t])] += prob;
                if t + 1 < n {
                    edge[t][(y[t], y[t + 1])] += prob;
                }
            }
        }
        let mut diff = max_abs(node.as_slice(), m.node.as_slice());
        for (e, f) in edge.iter().zip(&m.edge) {
            diff = diff.max(max_abs(e.as_slice(), f.as_slice()));
        }
        worst_enum = worst_enum.max(diff);
        if diff > 1e-8 {
            failures.push(format!("case {case} (n={n}, k={k}): marginals off by {diff:e}"));
        }
    }
    // Longer sequences over the full tag set, normalization only.
    for case in 0..50 {
        let n = rng.gen_range(1..=40);
        let (p, a) = random_crf(n, 13, &mut rng);
        sums(&forward_backward(&p, &a).unwrap(), &format!("long case {case}"), &mut failures);
    }
    Outcome::new(
        failures,
        format!("250 instances; max |sum - 1| {worst_sum:.1e}; max enumeration gap {worst_enum:.1e}"),
    )
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Per-class (precision, recall, F1) cells and the Average row of the CRF
/// columns of the two validation-result tables.
const SPANISH: [(&str, f64, f64, f64); 6] = [
    ("LOC", 0.8368, 0.8796, 0.8577),
    ("PER", 0.9065, 0.9028, 0.9047),
    ("PROD", 0.6970, 0.7468, 0.7210),
    ("GRP", 0.7952, 0.7857, 0.7904),
    ("CW", 0.7965, 0.7135, 0.7527),
    ("CORP", 0.8657, 0.8227, 0.8436),
];
const SPANISH_AVERAGE: (f64, f64, f64) = (0.8163, 0.8085, 0.8117);
const CHINESE: [(&str, f64, f64, f64); 6] = [
    ("LOC", 0.9465, 0.9365, 0.9415),
    ("PER", 0.8497, 0.9225, 0.9084),
    ("PROD", 0.8867, 0.8285, 0.8566),
    ("GRP", 0.7500, 0.6923, 0.7200),
    ("CW", 0.8265, 0.8617, 0.8437),
    ("CORP", 0.8615, 0.8750, 0.8682),
];
const CHINESE_AVERAGE: (f64, f64, f64) = (0.8610, 0.8527, 0.8564);

fn table_arithmetic() -> Outcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    for (language, rows, average) in [
        ("Spanish", &SPANISH, SPANISH_AVERAGE),
        ("Chinese", &CHINESE, CHINESE_AVERAGE),
    ] {
        let mut classes = Vec::new();
        for &(name, p, r, printed) in rows.iter() {
            let computed = f1(p, r).unwrap();
            checks += 1;
            if (computed - printed).abs() > 1e-4 {
                failures.push(format!(
                    "{language} {name}: f1({p}, {r}) = {computed:.4}, table has {printed}"
                ));
            }
            classes.push(ClassScore {
                entity_type: name.into(),
                true_positives: 0,
                false_positives: 0,
                false_negatives: 0,
                precision: p,
                recall: r,
                f1: computed,
            });
        }
        let m = macro_average(&classes);
        for (label, got, want) in [
            ("precision", m.precision, average.0),
            ("recall", m.recall, average.1),
            ("F1", m.f1, average.2),
        ] {
            checks += 1;
            if (got - want).abs() > 5e-4 {
                failures.push(format!(
                    "{language} macro {label}: computed {got:.4}, table has {want}"
                ));
            }
        }
    }
    let n = failures.len();
    Outcome::new(failures, format!("{} of {checks} cell checks agree", checks - n))
}

fn separation() -> Outcome {
    let start = Instant::now();
    let (train_set, dev) = standard_splits(2024);
    let base = TrainConfig {
        embedding_dim: 32,
        lr_min: 1e-4,
        lr_max: 1e-2,
        ..TrainConfig::default()
    };
    let crf = train(&train_set, &dev, &TrainConfig { architecture: Architecture::Crf, ..base.clone() }, None)
        .unwrap();
    let linear = train(&train_set, &dev, &TrainConfig { architecture: Architecture::Linear, ..base }, None)
        .unwrap();
    // The softmax head is also scored without the BIO mask.
    let model = &linear.checkpoint.model;
    let free = predict_corpus(model, &dev, None, false).unwrap();
    let free_f1 = nertag::metrics::score(&dev, &free, Default::default()).unwrap().macro_avg.f1;
    let best_linear = linear
        .log
        .iter()
        .map(|e| e.dev.f1)
        .fold(free_f1, f64::max);
    let elapsed = start.elapsed();

    let crf_f1 = crf.checkpoint.best_dev_f1;
    let crf_epochs = crf.log.iter().position(|e| e.dev.f1 >= 0.95).map(|i| i + 1);
    let mut failures = Vec::new();
    if crf_f1 < 0.95 {
        failures.push(format!("CRF dev F1 {crf_f1:.4} < 0.95"));
    }
    if best_linear > 0.80 {
        failures.push(format!("linear dev F1 reached {best_linear:.4} > 0.80"));
    }
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("took {:.0}s", elapsed.as_secs_f64()));
    }
    Outcome::new(
        failures,
        format!(
            "CRF dev F1 {crf_f1:.4} (>= 0.95 from epoch {}), linear best {best_linear:.4} (unmasked {free_f1:.4}), {:.0}s",
            crf_epochs.map_or("-".into(), |e| e.to_string()),
            elapsed.as_secs_f64()
        ),
    )
}

fn memorization() -> Outcome {
    let voc = expand_bio(&EntityTypeSet::default());
    let tags = ["B-PER", "I-PER", "O", "O", "B-LOC", "O", "B-CW", "I-CW", "I-CW"];
    let sentence = Sentence {
        id: "only".into(),
        tokens: "Ana María vive en Lima y lee Cien Años".split(' ').map(String::from).collect(),
        tags: Some(tags.iter().map(|t| voc.index_of(t).unwrap()).collect()),
    };
    let corpus = Corpus::new(vec![sentence], voc).unwrap();
    let config = TrainConfig {
        epochs: 100,
        embedding_dim: 16,
        lr_min: 1e-3,
        lr_max: 5e-2,
        ..TrainConfig::default()
    };
    let out = train(&corpus, &corpus, &config, None).unwrap();
    let min_nll = out.log.iter().map(|e| e.mean_loss).fold(f64::INFINITY, f64::min);
    let reached = out.log.iter().position(|e| e.mean_loss < 0.01).map(|i| i + 1);
    let predicted = predict_corpus(&out.checkpoint.model, &corpus, None, false).unwrap();
    let gold = corpus.sentences()[0].tags.clone().unwrap();
    let mut failures = Vec::new();
    if min_nll >= 0.01 {
        failures.push(format!("training NLL never below 0.01 (min {min_nll:e})"));
    }
    if predicted[0] != gold {
        failures.push(format!("prediction {:?} differs from gold {gold:?}", predicted[0]));
    }
    Outcome::new(
        failures,
        format!(
            "NLL < 0.01 from epoch {}, min {min_nll:.1e}; prediction exact: {}",
            reached.map_or("-".into(), |e| e.to_string()),
            predicted[0] == gold
        ),
    )
}

fn bio_guarantees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let voc = expand_bio(&EntityTypeSet::default());
    let k = voc.k();
    let mask = TransitionMask::bio(&voc);
    let mut failures = Vec::new();
    let mut invalid_inputs = 0;
    let mut strict_rejections = 0;
    for case in 0..10_000 {
        let n = rng.gen_range(1..=15);
        let (p, a) = random_crf(n, k, &mut rng);
        let (constrained, _) = viterbi_decode(&p, &a, Some(&mask)).unwrap();
        if count_invalid_transitions(&voc, &constrained) != 0 {
            failures.push(format!("case {case}: constrained path {constrained:?} is invalid"));
        }
        let (free, _) = viterbi_decode(&p, &a, None).unwrap();
        let argmax: Vec<usize> = (0..n)
            .map(|i| {
                let row = p.matrix().row(i);
                (0..k).fold(0, |b, j| if row[j] > row[b] { j } else { b })
            })
            .collect();
        for raw in [free, argmax] {
            let bad = count_invalid_transitions(&voc, &raw);
            if bad > 0 {
                invalid_inputs += 1;
            }
            for mode in [RepairMode::Strict, RepairMode::Convert, RepairMode::Ignore] {
                match repair_bio(&voc, &raw, mode) {
                    Ok(fixed) if count_invalid_transitions(&voc, &fixed) != 0 => {
                        failures.push(format!("case {case}: {mode} left {fixed:?} invalid"));
                    }
                    Ok(_) if mode == RepairMode::Strict && bad > 0 => {
                        failures.push(format!("case {case}: strict accepted {raw:?}"));
                    }
                    Err(_) if mode == RepairMode::Strict && bad > 0 => strict_rejections += 1,
                    Err(e) => failures.push(format!("case {case}: {mode} failed: {e}")),
                    Ok(_) => {}
                }
            }
        }
    }
    failures.truncate(20);
    Outcome::new(
        failures,
        format!(
            "10000 matrices; {invalid_inputs} invalid raw decodes repaired, {strict_rejections} rejected by strict"
        ),
    )
}

fn determinism_and_round_trips() -> Outcome {
    let mut failures = Vec::new();
    let cfg = SyntheticConfig::default();
    let train_set = generate(80, "tr", &cfg, 5);
    let dev = generate(30, "dv", &cfg, 6);
    let dir = tempfile::tempdir().unwrap();
    for architecture in [Architecture::Crf, Architecture::BiLstmCrf, Architecture::Linear] {
        let config = TrainConfig {
            architecture,
            epochs: 2,
            embedding_dim: 8,
            hidden: 8,
            fc_size: 16,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(&train_set, &dev, &config, None).unwrap().checkpoint;
        let b = train(&train_set, &dev, &config, None).unwrap().checkpoint;
        if a.to_bytes() != b.to_bytes() {
            failures.push(format!("{architecture}: repeated training differs"));
        }
        let path = dir.path().join(format!("{architecture}.ckpt"));
        save_checkpoint(&a, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        if back != a || back.to_bytes() != std::fs::read(&path).unwrap() {
            failures.push(format!("{architecture}: checkpoint round trip differs"));
        }
    }

    let corpus = generate(500, "rt", &cfg, 9);
    let mut text = Vec::new();
    write_conll(&corpus, &mut text).unwrap();
    let parsed = parse_conll(&text[..], corpus.vocabulary(), &ParseOptions::default()).unwrap();
    let mut again = Vec::new();
    write_conll(&parsed, &mut again).unwrap();
    if parsed != corpus || again != text {
        failures.push("CoNLL parse/write round trip differs".into());
    }
    Outcome::new(
        failures,
        "3 architectures retrained and reloaded; 500-sentence CoNLL round trip".into(),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("CRF enumeration equivalence", crf_enumeration),
        ("gradient correctness", gradient_checks),
        ("probability normalization", normalization),
        ("table arithmetic reproduction", table_arithmetic),
        ("transition-learning separation", separation),
        ("memorization sanity", memorization),
        ("BIO guarantees", bio_guarantees),
        ("determinism and round trips", determinism_and_round_trips),
    ];
    let limits = [30, 60, 60, 5, 300, 60, 60, 120];
    let mut passed = 0;
    for (i, ((name, run), limit)) in criteria.iter().zip(limits).enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(vec![format!("panicked: {msg}")], "did not complete".into())
        });
        let secs = start.elapsed().as_secs_f64();
        let mut details = outcome.details;
        if secs > limit as f64 {
            details.push(format!("runtime {secs:.1}s exceeds {limit}s"));
        }
        let pass = outcome.pass && details.is_empty();
        passed += pass as usize;
        println!(
            "{} criterion {}: {name} -- {} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.summary
        );
        for d in details {
            println!("      {d}");
        }
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
