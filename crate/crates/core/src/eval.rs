//! Quad-level exact-match precision, recall and F1.
//!
//! A predicted quad counts only when all four elements equal a gold quad.
//! Both sides are deduplicated before counting unless [`CountMode::Multiset`]
//! is requested.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::quad::{dedup_quads, Quad};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    #[default]
    Set,
    Multiset,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            n_pred: self.n_pred + o.n_pred,
            n_gold: self.n_gold + o.n_gold,
        }
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), |a, b| a + b)
    }
}

pub fn score_example(pred: &[Quad], gold: &[Quad]) -> Counts {
    score_example_with(pred, gold, CountMode::Set)
}

pub fn score_example_with(pred: &[Quad], gold: &[Quad], mode: CountMode) -> Counts {
    match mode {
        CountMode::Set => {
            let pred = dedup_quads(pred);
            let gold: std::collections::HashSet<Quad> =
                dedup_quads(gold).into_iter().map(|(_, q)| q).collect();
            Counts {
                tp: pred.iter().filter(|(_, q)| gold.contains(q)).count(),
                n_pred: pred.len(),
                n_gold: gold.len(),
            }
        }
        CountMode::Multiset => {
            let mut gold_counts: HashMap<Quad, usize> = HashMap::new();
            for q in gold {
                *gold_counts.entry(q.canonical()).or_default() += 1;
            }
            let mut tp = 0;
            for q in pred {
                if let Some(n) = gold_counts.get_mut(&q.canonical()) {
                    if *n > 0 {
                        *n -= 1;
                        tp += 1;
                    }
                }
            }
            Counts {
                tp,
                n_pred: pred.len(),
                n_gold: gold.len(),
            }
        }
    }
}

/// Corpus-level micro-averaged scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> EvalReport<T> {
    pub fn from_counts(c: Counts) -> Self {
        let precision = T::ratio(c.tp, c.n_pred);
        let recall = T::ratio(c.tp, c.n_gold);
        let sum = precision.clone() + recall.clone();
        let f1 = if sum == T::zero() {
            T::zero()
        } else {
            let two = T::one() + T::one();
            two * precision.clone() * recall.clone() / sum
        };
        Self {
            tp: c.tp,
            n_pred: c.n_pred,
            n_gold: c.n_gold,
            precision,
            recall,
            f1,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            n_pred: self.n_pred,
            n_gold: self.n_gold,
        }
    }

    /// Precision, recall and F1 as percentages.
    pub fn percentages(&self) -> [f64; 3] {
        [&self.precision, &self.recall, &self.f1].map(|v| v.to_f64_lossy() * 100.0)
    }
}

impl<T: Scalar> fmt::Display for EvalReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [p, r, f1] = self.percentages();
        writeln!(
            f,
            "{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "TP", "#pred", "#gold", "Pre", "Rec", "F1"
        )?;
        write!(
            f,
            "{:>8} {:>8} {:>8} {:>8.2} {:>8.2} {:>8.2}",
            self.tp, self.n_pred, self.n_gold, p, r, f1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("prediction and gold line counts differ: {pred} predicted vs {gold} gold")]
pub struct LengthMismatch {
    pub pred: usize,
    pub gold: usize,
}

/// Sums per-example counts and computes the scores once.
pub fn score_corpus<T: Scalar>(
    preds: &[Vec<Quad>],
    golds: &[Vec<Quad>],
    mode: CountMode,
) -> Result<EvalReport<T>, LengthMismatch> {
    if preds.len() != golds.len() {
        return Err(LengthMismatch {
            pred: preds.len(),
            gold: golds.len(),
        });
    }
    let total = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| score_example_with(p, g, mode))
        .sum();
    Ok(EvalReport::from_counts(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{Aspect, Sentiment};
    use num_rational::Ratio;

    fn sushi_quads() -> Vec<Quad> {
        vec![
            Quad::new(
                Aspect::term("sushi"),
                "food quality",
                "fresh",
                Sentiment::Positive,
            ),
            Quad::new(
                Aspect::term("sushi"),
                "food prices",
                "overpriced",
                Sentiment::Negative,
            ),
        ]
    }

    #[test]
    fn example_counts() {
        let gold = sushi_quads();
        assert_eq!(
            score_example(&gold, &gold),
            Counts {
                tp: 2,
                n_pred: 2,
                n_gold: 2
            }
        );

        let mut flipped = gold.clone();
        flipped[1].sentiment = Sentiment::Neutral;
        assert_eq!(
            score_example(&flipped, &gold),
            Counts {
                tp: 1,
                n_pred: 2,
                n_gold: 2
            }
        );

        let one = vec![gold[0].clone()];
        let pred = vec![gold[0].clone(), gold[0].clone()];
        assert_eq!(
            score_example(&pred, &one),
            Counts {
                tp: 1,
                n_pred: 1,
                n_gold: 1
            }
        );
        assert_eq!(
            score_example_with(&pred, &one, CountMode::Multiset),
            Counts {
                tp: 1,
                n_pred: 2,
                n_gold: 1
            }
        );
    }

    #[test]
    fn corpus_two_thirds_exact() {
        let gold = sushi_quads();
        let mut flipped = gold.clone();
        flipped[1].sentiment = Sentiment::Neutral;
        let preds = vec![flipped, vec![gold[0].clone(), gold[0].clone()]];
        let golds = vec![gold.clone(), vec![gold[0].clone()]];
        let r: EvalReport<Ratio<i64>> = score_corpus(&preds, &golds, CountMode::Set).unwrap();
        let two_thirds = Ratio::new(2, 3);
        assert_eq!(
            (r.precision, r.recall, r.f1),
            (two_thirds, two_thirds, two_thirds)
        );

        let r: EvalReport<f64> = score_corpus(&preds, &golds, CountMode::Set).unwrap();
        assert!(r.to_string().contains("66.67"));
    }

    #[test]
    fn zero_guards() {
        let golds = vec![sushi_quads()];
        let r: EvalReport<f64> = score_corpus(&[vec![]], &golds, CountMode::Set).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r: EvalReport<f32> = score_corpus(&[vec![]], &[vec![]], CountMode::Set).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r: EvalReport<f64> = score_corpus(&golds, &golds, CountMode::Set).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.percentages(), [100.0; 3]);
    }

    #[test]
    fn length_mismatch_names_both_counts() {
        let err = score_corpus::<f64>(&[vec![]], &[], CountMode::Set).unwrap_err();
        assert_eq!(err, LengthMismatch { pred: 1, gold: 0 });
        assert!(err.to_string().contains("1 predicted vs 0 gold"));
    }
}
