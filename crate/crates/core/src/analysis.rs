//! Draft-versus-gold error analysis.
//!
//! Predictions are aligned to gold quads by a minimum-mismatch one-to-one
//! assignment, each aligned pair is classified by which elements differ, and
//! two prediction stages can be compared on gold-anchored slots to see how
//! errors migrate between classes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assignment::lexicographic_optimal;
use crate::quad::{dedup_quads, mismatch_vector, Element, Quad};

/// Default bound on quads per side accepted by [`align_quads`].
pub const DEFAULT_ALIGN_BOUND: usize = 64;

/// Number of the four elements that differ (0..=4).
pub fn mismatch_cost(pred: &Quad, gold: &Quad) -> u8 {
    mismatch_vector(pred, gold).iter().filter(|d| **d).count() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub gold: usize,
    pub cost: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl Alignment {
    pub fn total_cost(&self) -> u32 {
        self.pairs.iter().map(|p| u32::from(p.cost)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("example has {pred} predicted and {gold} gold quads, above the bound of {bound}")]
    TooLarge {
        pred: usize,
        gold: usize,
        bound: usize,
    },
    #[error("stage lengths differ: {what}")]
    LengthMismatch { what: String },
}

pub fn align_quads(pred: &[Quad], gold: &[Quad]) -> Result<Alignment, AnalysisError> {
    align_quads_bounded(pred, gold, DEFAULT_ALIGN_BOUND)
}

/// Minimum-total-mismatch alignment of `pred` to `gold`.
///
/// Both sides are visited in canonical content order so the result does
/// not depend on how either list is permuted; among optimal assignments
/// the lexicographically smallest one in that order wins. Pairs that
/// differ in all four elements are split into an unmatched prediction and
/// an unmatched gold quad.
pub fn align_quads_bounded(
    pred: &[Quad],
    gold: &[Quad],
    bound: usize,
) -> Result<Alignment, AnalysisError> {
    if pred.len() > bound || gold.len() > bound {
        return Err(AnalysisError::TooLarge {
            pred: pred.len(),
            gold: gold.len(),
            bound,
        });
    }
    let pred_order = content_order(pred);
    let gold_order = content_order(gold);
    let n = pred.len().max(gold.len());
    let cost: Vec<Vec<i64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| match (pred_order.get(r), gold_order.get(c)) {
                    (Some(&p), Some(&g)) => i64::from(mismatch_cost(&pred[p], &gold[g])),
                    _ => 0,
                })
                .collect()
        })
        .collect();
    let (_, assignment) = lexicographic_optimal(&cost);

    let mut out = Alignment::default();
    let mut gold_matched = vec![false; gold.len()];
    for (r, c) in assignment.into_iter().enumerate() {
        match (pred_order.get(r), gold_order.get(c)) {
            (Some(&p), Some(&g)) => {
                let cost = mismatch_cost(&pred[p], &gold[g]);
                if cost < 4 {
                    out.pairs.push(MatchedPair {
                        pred: p,
                        gold: g,
                        cost,
                    });
                    gold_matched[g] = true;
                } else {
                    out.unmatched_pred.push(p);
                }
            }
            (Some(&p), None) => out.unmatched_pred.push(p),
            _ => {}
        }
    }
    out.pairs.sort_by_key(|p| (p.pred, p.gold));
    out.unmatched_pred.sort_unstable();
    out.unmatched_gold = (0..gold.len()).filter(|&g| !gold_matched[g]).collect();
    Ok(out)
}

fn content_order(quads: &[Quad]) -> Vec<usize> {
    let keys: Vec<Quad> = quads.iter().map(Quad::canonical).collect();
    let mut idx: Vec<usize> = (0..quads.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorClass {
    Exact,
    Single(Element),
    Multi,
    Spurious,
    Missing,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 8] = [
        ErrorClass::Exact,
        ErrorClass::Single(Element::Aspect),
        ErrorClass::Single(Element::Category),
        ErrorClass::Single(Element::Opinion),
        ErrorClass::Single(Element::Sentiment),
        ErrorClass::Multi,
        ErrorClass::Spurious,
        ErrorClass::Missing,
    ];

    /// Classes a gold quad can be in; spurious predictions have no gold slot.
    pub const GOLD_ANCHORED: [ErrorClass; 7] = [
        ErrorClass::Exact,
        ErrorClass::Single(Element::Aspect),
        ErrorClass::Single(Element::Category),
        ErrorClass::Single(Element::Opinion),
        ErrorClass::Single(Element::Sentiment),
        ErrorClass::Multi,
        ErrorClass::Missing,
    ];

    pub fn from_mismatch(mismatch: [bool; 4]) -> ErrorClass {
        let wrong: Vec<Element> = Element::ALL
            .into_iter()
            .filter(|e| mismatch[e.index()])
            .collect();
        match wrong[..] {
            [] => ErrorClass::Exact,
            [e] => ErrorClass::Single(e),
            _ => ErrorClass::Multi,
        }
    }

    pub fn is_error(self) -> bool {
        self != ErrorClass::Exact
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Exact => "exact",
            ErrorClass::Single(Element::Aspect) => "single-aspect",
            ErrorClass::Single(Element::Category) => "single-category",
            ErrorClass::Single(Element::Opinion) => "single-opinion",
            ErrorClass::Single(Element::Sentiment) => "single-sentiment",
            ErrorClass::Multi => "multi-element",
            ErrorClass::Spurious => "spurious",
            ErrorClass::Missing => "missing",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown error class {s:?}"))
    }
}

impl Serialize for ErrorClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ErrorClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub example: usize,
    pub pred: Option<usize>,
    pub gold: Option<usize>,
    /// Per-element mismatch in aspect, category, opinion, sentiment order;
    /// absent for one-sided records.
    pub mismatch: Option<[bool; 4]>,
    pub class: ErrorClass,
}

/// Aligns one example (after deduplicating both sides) and classifies every
/// prediction and gold quad. Indices refer to the original lists.
pub fn classify_example(
    example: usize,
    pred: &[Quad],
    gold: &[Quad],
) -> Result<Vec<ErrorRecord>, AnalysisError> {
    let (pred_idx, pred): (Vec<usize>, Vec<Quad>) = dedup_quads(pred).into_iter().unzip();
    let (gold_idx, gold): (Vec<usize>, Vec<Quad>) = dedup_quads(gold).into_iter().unzip();
    let alignment = align_quads(&pred, &gold)?;
    let mut records = Vec::with_capacity(pred.len().max(gold.len()));
    for pair in &alignment.pairs {
        let mismatch = mismatch_vector(&pred[pair.pred], &gold[pair.gold]);
        records.push(ErrorRecord {
            example,
            pred: Some(pred_idx[pair.pred]),
            gold: Some(gold_idx[pair.gold]),
            mismatch: Some(mismatch),
            class: ErrorClass::from_mismatch(mismatch),
        });
    }
    records.extend(alignment.unmatched_pred.iter().map(|&p| ErrorRecord {
        example,
        pred: Some(pred_idx[p]),
        gold: None,
        mismatch: None,
        class: ErrorClass::Spurious,
    }));
    records.extend(alignment.unmatched_gold.iter().map(|&g| ErrorRecord {
        example,
        pred: None,
        gold: Some(gold_idx[g]),
        mismatch: None,
        class: ErrorClass::Missing,
    }));
    Ok(records)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub counts: BTreeMap<ErrorClass, usize>,
    pub records: Vec<ErrorRecord>,
}

impl ErrorSummary {
    pub fn count(&self, class: ErrorClass) -> usize {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn error_total(&self) -> usize {
        self.counts
            .iter()
            .filter(|(c, _)| c.is_error())
            .map(|(_, n)| n)
            .sum()
    }

    pub fn single_element_total(&self) -> usize {
        Element::ALL
            .into_iter()
            .map(|e| self.count(ErrorClass::Single(e)))
            .sum()
    }

    /// `class,count` rows for every class, including zero counts.
    pub fn chart_csv(&self) -> String {
        let mut out = String::from("class,count\n");
        for class in ErrorClass::ALL {
            out.push_str(&format!("{},{}\n", class, self.count(class)));
        }
        out
    }
}

pub fn classify_errors(
    preds: &[Vec<Quad>],
    golds: &[Vec<Quad>],
) -> Result<ErrorSummary, AnalysisError> {
    if preds.len() != golds.len() {
        return Err(AnalysisError::LengthMismatch {
            what: format!("{} predicted vs {} gold examples", preds.len(), golds.len()),
        });
    }
    let mut summary = ErrorSummary::default();
    for (i, (p, g)) in preds.iter().zip(golds).enumerate() {
        for record in classify_example(i, p, g)? {
            *summary.counts.entry(record.class).or_default() += 1;
            summary.records.push(record);
        }
    }
    Ok(summary)
}

/// Status of every (deduplicated) gold quad under one prediction set, in
/// gold order.
pub fn gold_statuses(pred: &[Quad], gold: &[Quad]) -> Result<Vec<ErrorClass>, AnalysisError> {
    let records = classify_example(0, pred, gold)?;
    let mut by_gold: BTreeMap<usize, ErrorClass> = BTreeMap::new();
    for r in records {
        if let Some(g) = r.gold {
            by_gold.insert(g, r.class);
        }
    }
    Ok(by_gold.into_values().collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationReport {
    pub stage1: BTreeMap<ErrorClass, usize>,
    pub stage2: BTreeMap<ErrorClass, usize>,
    /// Gold-anchored `stage-1 class -> stage-2 class -> count`.
    pub transitions: BTreeMap<ErrorClass, BTreeMap<ErrorClass, usize>>,
    /// Multi-element errors that became single-element errors.
    pub compression: usize,
    /// Exact gold slots that became errors.
    pub regressions: usize,
}

impl MigrationReport {
    pub fn transition(&self, from: ErrorClass, to: ErrorClass) -> usize {
        self.transitions
            .get(&from)
            .and_then(|row| row.get(&to))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.transitions
            .iter()
            .all(|(from, row)| row.iter().all(|(to, n)| from == to || *n == 0))
    }
}

impl fmt::Display for MigrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<18}", "stage1 \\ stage2")?;
        for to in ErrorClass::GOLD_ANCHORED {
            write!(f, " {:>16}", to.name())?;
        }
        writeln!(f)?;
        for from in ErrorClass::GOLD_ANCHORED {
            write!(f, "{:<18}", from.name())?;
            for to in ErrorClass::GOLD_ANCHORED {
                write!(f, " {:>16}", self.transition(from, to))?;
            }
            writeln!(f)?;
        }
        writeln!(
            f,
            "spurious: {} -> {}",
            self.stage1.get(&ErrorClass::Spurious).unwrap_or(&0),
            self.stage2.get(&ErrorClass::Spurious).unwrap_or(&0)
        )?;
        write!(
            f,
            "compression: {}  regressions: {}",
            self.compression, self.regressions
        )
    }
}

/// Compares two prediction stages against shared gold.
pub fn migration_matrix(
    stage1: &[Vec<Quad>],
    stage2: &[Vec<Quad>],
    golds: &[Vec<Quad>],
) -> Result<MigrationReport, AnalysisError> {
    if stage1.len() != golds.len() || stage2.len() != golds.len() {
        return Err(AnalysisError::LengthMismatch {
            what: format!(
                "stage1 {} / stage2 {} / gold {} examples",
                stage1.len(),
                stage2.len(),
                golds.len()
            ),
        });
    }
    let s1 = classify_errors(stage1, golds)?;
    let s2 = classify_errors(stage2, golds)?;
    let mut report = MigrationReport {
        stage1: s1.counts,
        stage2: s2.counts,
        ..Default::default()
    };
    let anchored = |summary_records: &[ErrorRecord]| {
        let mut m: BTreeMap<(usize, usize), ErrorClass> = BTreeMap::new();
        for r in summary_records {
            if let Some(g) = r.gold {
                m.insert((r.example, g), r.class);
            }
        }
        m
    };
    let a1 = anchored(&s1.records);
    let a2 = anchored(&s2.records);
    for (slot, from) in &a1 {
        let to = a2[slot];
        *report
            .transitions
            .entry(*from)
            .or_default()
            .entry(to)
            .or_default() += 1;
        if *from == ErrorClass::Multi && matches!(to, ErrorClass::Single(_)) {
            report.compression += 1;
        }
        if *from == ErrorClass::Exact && to.is_error() {
            report.regressions += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{Aspect, Sentiment};

    fn q(a: &str, c: &str, o: &str, s: Sentiment) -> Quad {
        Quad::new(Aspect::term(a), c, o, s)
    }

    fn sushi() -> Vec<Quad> {
        vec![
            q("sushi", "food quality", "fresh", Sentiment::Positive),
            q("sushi", "food prices", "overpriced", Sentiment::Negative),
        ]
    }

    #[test]
    fn cost_examples() {
        let gold = sushi();
        assert_eq!(mismatch_cost(&gold[0], &gold[0]), 0);
        let mut line1 = gold[0].clone();
        line1.category = "food general".into();
        assert_eq!(mismatch_cost(&line1, &gold[0]), 1);
        let other = Quad::new(
            Aspect::Implicit,
            "service general",
            "slow",
            Sentiment::Neutral,
        );
        assert_eq!(mismatch_cost(&other, &gold[0]), 4);
    }

    #[test]
    fn permutation_aligns_perfectly() {
        let gold = sushi();
        let pred = vec![gold[1].clone(), gold[0].clone()];
        let a = align_quads(&pred, &gold).unwrap();
        assert_eq!(a.total_cost(), 0);
        assert_eq!(
            a.pairs,
            vec![
                MatchedPair {
                    pred: 0,
                    gold: 1,
                    cost: 0
                },
                MatchedPair {
                    pred: 1,
                    gold: 0,
                    cost: 0
                }
            ]
        );
    }

    #[test]
    fn empty_prediction_leaves_all_gold_missing() {
        let a = align_quads(&[], &sushi()).unwrap();
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_gold, vec![0, 1]);
    }

    #[test]
    fn cost_four_pairs_dissolve() {
        let gold = vec![sushi()[0].clone()];
        let pred = vec![Quad::new(
            Aspect::Implicit,
            "service general",
            "slow",
            Sentiment::Neutral,
        )];
        let a = align_quads(&pred, &gold).unwrap();
        assert!(a.pairs.is_empty());
        assert_eq!((a.unmatched_pred, a.unmatched_gold), (vec![0], vec![0]));
    }

    #[test]
    fn bound_is_enforced() {
        let many = vec![sushi()[0].clone(); 3];
        assert_eq!(
            align_quads_bounded(&many, &[], 2),
            Err(AnalysisError::TooLarge {
                pred: 3,
                gold: 0,
                bound: 2
            })
        );
    }

    #[test]
    fn crossed_mispairing_is_two_single_errors() {
        // Swapping opinions between two quads: a greedy matcher could pair
        // by aspect alone, the optimal one recovers both opinion errors.
        let gold = vec![
            q("fish", "food quality", "fresh", Sentiment::Positive),
            q("fish", "food quality", "cheap", Sentiment::Positive),
        ];
        let pred = vec![
            q("fish", "food quality", "fresh", Sentiment::Negative),
            q("fish", "food quality", "stale", Sentiment::Positive),
        ];
        let records = classify_example(0, &pred, &gold).unwrap();
        let classes: Vec<_> = records.iter().map(|r| r.class).collect();
        assert_eq!(
            classes,
            vec![
                ErrorClass::Single(Element::Sentiment),
                ErrorClass::Single(Element::Opinion)
            ]
        );
    }

    #[test]
    fn classify_sentiment_flips() {
        let gold = sushi();
        let flipped: Vec<Quad> = gold
            .iter()
            .map(|g| {
                let mut p = g.clone();
                p.sentiment = Sentiment::Neutral;
                p
            })
            .collect();
        let s = classify_errors(&[flipped], std::slice::from_ref(&gold)).unwrap();
        assert_eq!(s.count(ErrorClass::Single(Element::Sentiment)), 2);
        assert_eq!(s.error_total(), 2);

        let perfect =
            classify_errors(std::slice::from_ref(&gold), std::slice::from_ref(&gold)).unwrap();
        assert_eq!(perfect.error_total(), 0);
        assert_eq!(perfect.count(ErrorClass::Exact), 2);
    }

    #[test]
    fn migration_basics() {
        let gold = vec![sushi()];
        let mut wrong = sushi();
        wrong[0].sentiment = Sentiment::Neutral;
        wrong[0].opinion = "stale".into();
        wrong.pop();

        let fixed = migration_matrix(&[wrong.clone()], &gold, &gold).unwrap();
        assert_eq!(fixed.transition(ErrorClass::Multi, ErrorClass::Exact), 1);
        assert_eq!(fixed.transition(ErrorClass::Missing, ErrorClass::Exact), 1);
        assert_eq!(fixed.regressions, 0);

        let same = migration_matrix(&[wrong.clone()], &[wrong.clone()], &gold).unwrap();
        assert!(same.is_diagonal());

        let mut partial = sushi();
        partial[0].sentiment = Sentiment::Neutral;
        let compressed = migration_matrix(&[wrong], &[partial], &gold).unwrap();
        assert_eq!(compressed.compression, 1);
        assert!(compressed.to_string().contains("compression: 1"));
    }

    #[test]
    fn error_class_names_round_trip() {
        for c in ErrorClass::ALL {
            assert_eq!(c.name().parse::<ErrorClass>(), Ok(c));
        }
        let json = serde_json::to_string(&ErrorClass::Single(Element::Opinion)).unwrap();
        assert_eq!(json, "\"single-opinion\"");
    }
}
