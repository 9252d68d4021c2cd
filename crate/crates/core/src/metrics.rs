//! Entity-level precision, recall and F1 with exact span matching, plus an
//! error breakdown separating type confusions from boundary mistakes.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use crate::conll::Corpus;
use crate::error::{Error, Result};
use crate::tagscheme::{count_invalid_transitions, extract_spans, repair_bio, EntitySpan, RepairMode};

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> Result<f64> {
    for v in [precision, recall] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{v} is not a probability")));
        }
    }
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub entity_type: String,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassScore {
    pub fn from_counts(entity_type: impl Into<String>, tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassScore {
            entity_type: entity_type.into(),
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1: f1(precision, recall).expect("ratios lie in [0, 1]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted mean of per-class precision, recall and F1.
pub fn macro_average(classes: &[ClassScore]) -> Averages {
    let n = classes.len().max(1) as f64;
    Averages {
        precision: classes.iter().map(|c| c.precision).sum::<f64>() / n,
        recall: classes.iter().map(|c| c.recall).sum::<f64>() / n,
        f1: classes.iter().map(|c| c.f1).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreOptions {
    /// Applied to predictions before span extraction.
    pub repair: RepairMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class: Vec<ClassScore>,
    pub macro_avg: Averages,
    /// `confusion[gold][predicted]` over overlapping spans of different types.
    pub confusion: Vec<Vec<usize>>,
    /// Invalid BIO transitions in the raw predictions.
    pub invalid_transitions: usize,
}

impl MetricsReport {
    pub fn total_true_positives(&self) -> usize {
        self.per_class.iter().map(|c| c.true_positives).sum()
    }

    pub fn total_false_positives(&self) -> usize {
        self.per_class.iter().map(|c| c.false_positives).sum()
    }

    pub fn total_false_negatives(&self) -> usize {
        self.per_class.iter().map(|c| c.false_negatives).sum()
    }

    /// `key=value` lines for machine consumption.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for c in &self.per_class {
            let t = &c.entity_type;
            let _ = writeln!(out, "class.{t}.precision={}", c.precision);
            let _ = writeln!(out, "class.{t}.recall={}", c.recall);
            let _ = writeln!(out, "class.{t}.f1={}", c.f1);
            let _ = writeln!(out, "class.{t}.tp={}", c.true_positives);
            let _ = writeln!(out, "class.{t}.fp={}", c.false_positives);
            let _ = writeln!(out, "class.{t}.fn={}", c.false_negatives);
        }
        let _ = writeln!(out, "macro.precision={}", self.macro_avg.precision);
        let _ = writeln!(out, "macro.recall={}", self.macro_avg.recall);
        let _ = writeln!(out, "macro.f1={}", self.macro_avg.f1);
        let _ = writeln!(out, "invalid_transitions={}", self.invalid_transitions);
        for (g, row) in self.confusion.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                if count > 0 {
                    let _ = writeln!(
                        out,
                        "confusion.{}.{}={count}",
                        self.per_class[g].entity_type, self.per_class[p].entity_type
                    );
                }
            }
        }
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .per_class
            .iter()
            .map(|c| c.entity_type.len())
            .chain(["Class Label".len(), "Average".len()])
            .max()
            .unwrap_or(0);
        writeln!(f, "{:<width$}  {:>6}  {:>6}  {:>6}", "Class Label", "Prec", "Rec", "F1")?;
        for c in &self.per_class {
            writeln!(
                f,
                "{:<width$}  {:.4}  {:.4}  {:.4}",
                c.entity_type, c.precision, c.recall, c.f1
            )?;
        }
        writeln!(
            f,
            "{:<width$}  {:.4}  {:.4}  {:.4}",
            "Average", self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1
        )
    }
}

struct SentenceSpans<'a> {
    id: &'a str,
    gold: Vec<EntitySpan>,
    predicted: Vec<EntitySpan>,
}

fn collect_spans<'a>(
    gold: &'a Corpus,
    predicted: &[Vec<usize>],
    options: ScoreOptions,
) -> Result<(Vec<SentenceSpans<'a>>, usize)> {
    if predicted.len() != gold.len() {
        return Err(Error::shape(format!(
            "{} predicted sequences for {} gold sentences",
            predicted.len(),
            gold.len()
        )));
    }
    let voc = gold.vocabulary();
    let mut invalid = 0;
    let mut out = Vec::with_capacity(gold.len());
    for (s, pred) in gold.sentences().iter().zip(predicted) {
        let gold_tags = s
            .tags
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("gold sentence `{}` is unlabeled", s.id)))?;
        if pred.len() != gold_tags.len() {
            return Err(Error::shape(format!(
                "sentence `{}`: {} predicted tags for {} tokens",
                s.id,
                pred.len(),
                gold_tags.len()
            )));
        }
        voc.check_tags(pred)?;
        invalid += count_invalid_transitions(voc, pred);
        let repaired = repair_bio(voc, pred, options.repair)?;
        out.push(SentenceSpans {
            id: &s.id,
            gold: extract_spans(voc, gold_tags),
            predicted: extract_spans(voc, &repaired),
        });
    }
    Ok((out, invalid))
}

/// A span-level mistake located in a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanError {
    pub sentence_id: String,
    pub gold: Option<EntitySpan>,
    pub predicted: Option<EntitySpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorBreakdown {
    pub entity_types: Vec<String>,
    /// `confusion[gold][predicted]`
    pub confusion: Vec<Vec<usize>>,
    /// Overlapping gold/predicted spans with different types.
    pub type_errors: Vec<SpanError>,
    /// Overlapping gold/predicted spans with the right type and wrong extent.
    pub boundary_errors: Vec<SpanError>,
    /// Every unmatched gold span.
    pub false_negatives: Vec<SpanError>,
    /// Every unmatched predicted span.
    pub false_positives: Vec<SpanError>,
}

impl ErrorBreakdown {
    pub fn is_empty(&self) -> bool {
        self.false_negatives.is_empty() && self.false_positives.is_empty()
    }

    /// `(false negatives, false positives)` for one entity type.
    pub fn class_errors(&self, entity_type: usize) -> (usize, usize) {
        let count = |errs: &[SpanError], pick: fn(&SpanError) -> Option<EntitySpan>| {
            errs.iter()
                .filter(|e| pick(e).is_some_and(|s| s.entity_type == entity_type))
                .count()
        };
        (
            count(&self.false_negatives, |e| e.gold),
            count(&self.false_positives, |e| e.predicted),
        )
    }

    pub fn render(&self, report: &MetricsReport) -> String {
        let mut out = String::new();
        let names = &self.entity_types;
        let _ = writeln!(out, "Classes by F1 (worst first):");
        let mut order: Vec<&ClassScore> = report.per_class.iter().collect();
        order.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.entity_type.cmp(&b.entity_type)));
        for c in order {
            let _ = writeln!(
                out,
                "  {:<8} f1={:.4} fn={} fp={}",
                c.entity_type, c.f1, c.false_negatives, c.false_positives
            );
        }
        let _ = writeln!(out, "\nConfusion (rows gold, columns predicted):");
        let width = names.iter().map(String::len).max().unwrap_or(1).max(4);
        let _ = write!(out, "{:<width$}", "");
        for n in names {
            let _ = write!(out, " {n:>width$}");
        }
        let _ = writeln!(out);
        for (g, row) in self.confusion.iter().enumerate() {
            let _ = write!(out, "{:<width$}", names[g]);
            for c in row {
                let _ = write!(out, " {c:>width$}");
            }
            let _ = writeln!(out);
        }
        let span = |s: &EntitySpan| format!("[{},{}) {}", s.start, s.end, names[s.entity_type]);
        let _ = writeln!(out, "\nBoundary errors: {}", self.boundary_errors.len());
        for e in &self.boundary_errors {
            let (g, p) = (e.gold.as_ref().unwrap(), e.predicted.as_ref().unwrap());
            let _ = writeln!(out, "  {}: gold {} predicted {}", e.sentence_id, span(g), span(p));
        }
        let _ = writeln!(out, "Type errors: {}", self.type_errors.len());
        for e in &self.type_errors {
            let (g, p) = (e.gold.as_ref().unwrap(), e.predicted.as_ref().unwrap());
            let _ = writeln!(out, "  {}: gold {} predicted {}", e.sentence_id, span(g), span(p));
        }
        let _ = writeln!(
            out,
            "Unmatched: {} gold (FN), {} predicted (FP)",
            self.false_negatives.len(),
            self.false_positives.len()
        );
        out
    }
}

fn breakdown_from(types: &[String], sentences: &[SentenceSpans<'_>]) -> ErrorBreakdown {
    let n = types.len();
    let mut b = ErrorBreakdown {
        entity_types: types.to_vec(),
        confusion: vec![vec![0; n]; n],
        type_errors: Vec::new(),
        boundary_errors: Vec::new(),
        false_negatives: Vec::new(),
        false_positives: Vec::new(),
    };
    for s in sentences {
        let gold: HashSet<&EntitySpan> = s.gold.iter().collect();
        let pred: HashSet<&EntitySpan> = s.predicted.iter().collect();
        let missed: Vec<&EntitySpan> = s.gold.iter().filter(|g| !pred.contains(g)).collect();
        let spurious: Vec<&EntitySpan> = s.predicted.iter().filter(|p| !gold.contains(p)).collect();
        let err = |g: Option<&EntitySpan>, p: Option<&EntitySpan>| SpanError {
            sentence_id: s.id.to_string(),
            gold: g.copied(),
            predicted: p.copied(),
        };
        for &g in &missed {
            for &p in spurious.iter().filter(|p| p.overlaps(g)) {
                if g.entity_type == p.entity_type {
                    b.boundary_errors.push(err(Some(g), Some(p)));
                } else {
                    b.confusion[g.entity_type][p.entity_type] += 1;
                    b.type_errors.push(err(Some(g), Some(p)));
                }
            }
            b.false_negatives.push(err(Some(g), None));
        }
        for &p in &spurious {
            b.false_positives.push(err(None, Some(p)));
        }
    }
    b
}

/// Exact-match entity scores. `predicted[i]` pairs with `gold.sentences()[i]`.
pub fn score(gold: &Corpus, predicted: &[Vec<usize>], options: ScoreOptions) -> Result<MetricsReport> {
    let (sentences, invalid) = collect_spans(gold, predicted, options)?;
    let types = gold.vocabulary().entity_types().names();
    let mut counts = vec![(0usize, 0usize, 0usize); types.len()];
    for s in &sentences {
        let gold: HashSet<&EntitySpan> = s.gold.iter().collect();
        let pred: HashSet<&EntitySpan> = s.predicted.iter().collect();
        for p in &s.predicted {
            if gold.contains(p) {
                counts[p.entity_type].0 += 1;
            } else {
                counts[p.entity_type].1 += 1;
            }
        }
        for g in s.gold.iter().filter(|g| !pred.contains(g)) {
            counts[g.entity_type].2 += 1;
        }
    }
    let per_class: Vec<ClassScore> = types
        .iter()
        .zip(&counts)
        .map(|(t, &(tp, fp, fn_))| ClassScore::from_counts(t.clone(), tp, fp, fn_))
        .collect();
    Ok(MetricsReport {
        macro_avg: macro_average(&per_class),
        confusion: breakdown_from(types, &sentences).confusion,
        per_class,
        invalid_transitions: invalid,
    })
}

pub fn error_breakdown(
    gold: &Corpus,
    predicted: &[Vec<usize>],
    options: ScoreOptions,
) -> Result<ErrorBreakdown> {
    let (sentences, _) = collect_spans(gold, predicted, options)?;
    Ok(breakdown_from(gold.vocabulary().entity_types().names(), &sentences))
}
