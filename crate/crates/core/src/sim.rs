//! Seeded stand-ins for the two neural stages.
//!
//! [`simulate_generator`] corrupts gold quads at configurable per-element
//! rates, reusing the synthesis perturbations. [`simulate_corrector`] is an
//! oracle: it looks at the gold and repairs each error with a fixed
//! probability. It exists to exercise scoring and error analysis end to
//! end; its numbers say nothing about a trained corrector.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{align_quads, migration_matrix, AnalysisError, MigrationReport};
use crate::eval::{score_corpus, CountMode, EvalReport};
use crate::quad::{
    dedup_quads, mismatch_vector, AnnotatedSentence, Aspect, Element, Quad, Sentiment, Taxonomy,
};
use crate::scalar::Scalar;
use crate::synth::{candidate_mentions, example_rng, perturb_quad};

/// Mixed into the seed so the corrector's stream differs from the
/// generator's for the same seed value.
const CORRECTOR_STREAM: u64 = 0xc0_44ec_7042;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub aspect: f64,
    pub category: f64,
    pub opinion: f64,
    pub sentiment: f64,
    /// Probability of deleting each gold quad.
    pub drop: f64,
    /// Probability, per gold quad, of appending a spurious quad.
    pub insert: f64,
    pub seed: u64,
    pub max_span_len: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            aspect: 0.0,
            category: 0.0,
            opinion: 0.0,
            sentiment: 0.0,
            drop: 0.0,
            insert: 0.0,
            seed: 0,
            max_span_len: 3,
        }
    }
}

impl ChannelConfig {
    /// Same error rate for all four elements.
    pub fn uniform(rate: f64, seed: u64) -> Self {
        Self {
            aspect: rate,
            category: rate,
            opinion: rate,
            sentiment: rate,
            seed,
            ..Default::default()
        }
    }

    pub fn rate(&self, e: Element) -> f64 {
        match e {
            Element::Aspect => self.aspect,
            Element::Category => self.category,
            Element::Opinion => self.opinion,
            Element::Sentiment => self.sentiment,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [
            ("aspect", self.aspect),
            ("category", self.category),
            ("opinion", self.opinion),
            ("sentiment", self.sentiment),
            ("drop", self.drop),
            ("insert", self.insert),
        ];
        for (name, value) in rates {
            check_probability(name, value)?;
        }
        Ok(())
    }
}

pub fn check_probability(name: &'static str, value: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SimError::BadRate { name, value })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{name} must be in [0, 1], got {value}")]
    BadRate { name: &'static str, value: f64 },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// What the channel decided and did, for checking rates after the fact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub gold_quads: usize,
    pub dropped: usize,
    /// Per element (aspect, category, opinion, sentiment): draws that fell
    /// under the rate.
    pub selected: [usize; 4],
    /// Per element: selections that actually changed the quad.
    pub corrupted: [usize; 4],
    pub inserted: usize,
}

impl std::ops::AddAssign for ChannelTrace {
    fn add_assign(&mut self, o: Self) {
        self.gold_quads += o.gold_quads;
        self.dropped += o.dropped;
        for i in 0..4 {
            self.selected[i] += o.selected[i];
            self.corrupted[i] += o.corrupted[i];
        }
        self.inserted += o.inserted;
    }
}

/// Noisy draft for one sentence. `index` is its position in the corpus.
pub fn simulate_generator(
    ex: &AnnotatedSentence,
    index: usize,
    cfg: &ChannelConfig,
    taxonomy: &Taxonomy,
) -> Result<(Vec<Quad>, ChannelTrace), SimError> {
    cfg.validate()?;
    let mut rng = example_rng(cfg.seed, index as u64);
    let mut trace = ChannelTrace {
        gold_quads: ex.quads.len(),
        ..Default::default()
    };
    let mut draft = Vec::with_capacity(ex.quads.len());
    let mut spurious = Vec::new();
    for gold in &ex.quads {
        // Selection draws happen whatever the rates, so each one is a
        // fair Bernoulli sample of its rate.
        let drop = rng.gen::<f64>() < cfg.drop;
        let mut q = gold.canonical();
        for e in Element::ALL {
            if rng.gen::<f64>() < cfg.rate(e) {
                trace.selected[e.index()] += 1;
                if let Ok(p) = perturb_quad(
                    &ex.text,
                    &ex.quads,
                    &q,
                    e,
                    taxonomy,
                    cfg.max_span_len,
                    &mut rng,
                ) {
                    q = p;
                    trace.corrupted[e.index()] += 1;
                }
            }
        }
        if rng.gen::<f64>() < cfg.insert {
            if let Some(s) = spurious_quad(ex, taxonomy, cfg.max_span_len, &mut rng) {
                spurious.push(s);
                trace.inserted += 1;
            }
        }
        if drop {
            trace.dropped += 1;
        } else {
            draft.push(q);
        }
    }
    draft.extend(spurious);
    Ok((draft, trace))
}

fn spurious_quad<R: Rng + ?Sized>(
    ex: &AnnotatedSentence,
    taxonomy: &Taxonomy,
    max_span_len: usize,
    rng: &mut R,
) -> Option<Quad> {
    let aspects = candidate_mentions(&ex.text, &ex.quads, Element::Aspect, "", max_span_len);
    let opinions = candidate_mentions(&ex.text, &ex.quads, Element::Opinion, "", max_span_len);
    let aspect = aspects
        .choose(rng)
        .map_or(Aspect::Implicit, |a| Aspect::Term(a.clone()));
    let category = taxonomy.labels().choose(rng)?.clone();
    let opinion = opinions.choose(rng)?.clone();
    let sentiment = *Sentiment::ALL.choose(rng)?;
    Some(Quad::new(aspect, category, opinion, sentiment))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectorTrace {
    /// Wrong elements in aligned pairs, plus one per spurious and per
    /// missing quad.
    pub opportunities: usize,
    pub repaired: usize,
}

impl std::ops::AddAssign for CorrectorTrace {
    fn add_assign(&mut self, o: Self) {
        self.opportunities += o.opportunities;
        self.repaired += o.repaired;
    }
}

/// Oracle repair of one draft: every wrong element of an aligned pair, every
/// spurious quad and every missing gold quad is fixed independently with
/// probability `fix_prob`.
///
/// The random stream is laid out by the alignment alone, so for a fixed
/// seed the set of repairs only grows with `fix_prob`.
pub fn simulate_corrector(
    draft: &[Quad],
    gold: &[Quad],
    fix_prob: f64,
    seed: u64,
    index: usize,
) -> Result<(Vec<Quad>, CorrectorTrace), SimError> {
    check_probability("fix_prob", fix_prob)?;
    let mut rng = example_rng(seed ^ CORRECTOR_STREAM, index as u64);
    let gold: Vec<Quad> = dedup_quads(gold).into_iter().map(|(_, q)| q).collect();
    let alignment = align_quads(draft, &gold)?;
    let mut trace = CorrectorTrace::default();
    let mut repair = |rng: &mut rand_chacha::ChaCha8Rng| {
        trace.opportunities += 1;
        let hit = rng.gen::<f64>() < fix_prob;
        trace.repaired += usize::from(hit);
        hit
    };

    let mut out: Vec<Option<Quad>> = draft.iter().cloned().map(Some).collect();
    for pair in &alignment.pairs {
        let g = &gold[pair.gold];
        let wrong = mismatch_vector(&draft[pair.pred], g);
        let mut q = draft[pair.pred].clone();
        for e in Element::ALL {
            if wrong[e.index()] && repair(&mut rng) {
                q = q.with_element_from(g, e);
            }
        }
        out[pair.pred] = Some(q);
    }
    for &p in &alignment.unmatched_pred {
        if repair(&mut rng) {
            out[p] = None;
        }
    }
    let mut reinstated = Vec::new();
    for &g in &alignment.unmatched_gold {
        if repair(&mut rng) {
            reinstated.push(gold[g].clone());
        }
    }
    let mut corrected: Vec<Quad> = out.into_iter().flatten().collect();
    corrected.extend(reinstated);
    Ok((corrected, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport<T> {
    pub stage1: EvalReport<T>,
    pub stage2: EvalReport<T>,
    pub migration: MigrationReport,
    pub channel: ChannelTrace,
    pub corrector: CorrectorTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun<T> {
    pub report: SimReport<T>,
    pub stage1: Vec<Vec<Quad>>,
    pub stage2: Vec<Vec<Quad>>,
}

/// Both stages for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSim {
    pub draft: Vec<Quad>,
    pub corrected: Vec<Quad>,
    pub channel: ChannelTrace,
    pub corrector: CorrectorTrace,
}

/// Runs the channel and the corrector on sentence `index`. The corrector
/// reuses the channel seed on its own stream.
pub fn simulate_example(
    ex: &AnnotatedSentence,
    index: usize,
    channel: &ChannelConfig,
    fix_prob: f64,
    taxonomy: &Taxonomy,
) -> Result<ExampleSim, SimError> {
    let (draft, channel_trace) = simulate_generator(ex, index, channel, taxonomy)?;
    let (corrected, corrector) =
        simulate_corrector(&draft, &ex.quads, fix_prob, channel.seed, index)?;
    Ok(ExampleSim {
        draft,
        corrected,
        channel: channel_trace,
        corrector,
    })
}

/// Scores and compares per-sentence results given in corpus order.
pub fn summarize_sim<T: Scalar>(
    corpus: &[AnnotatedSentence],
    results: Vec<ExampleSim>,
) -> Result<SimRun<T>, SimError> {
    let mut stage1 = Vec::with_capacity(results.len());
    let mut stage2 = Vec::with_capacity(results.len());
    let mut channel = ChannelTrace::default();
    let mut corrector = CorrectorTrace::default();
    for r in results {
        channel += r.channel;
        corrector += r.corrector;
        stage1.push(r.draft);
        stage2.push(r.corrected);
    }
    let golds: Vec<Vec<Quad>> = corpus.iter().map(|e| e.quads.clone()).collect();
    let migration = migration_matrix(&stage1, &stage2, &golds)?;
    let score = |preds: &[Vec<Quad>]| {
        score_corpus(preds, &golds, CountMode::Set).map_err(|e| {
            SimError::Analysis(AnalysisError::LengthMismatch {
                what: e.to_string(),
            })
        })
    };
    let report = SimReport {
        stage1: score(&stage1)?,
        stage2: score(&stage2)?,
        migration,
        channel,
        corrector,
    };
    Ok(SimRun {
        report,
        stage1,
        stage2,
    })
}

/// Generates drafts, corrects them, and scores and compares both stages.
pub fn run_pipeline_sim<T: Scalar>(
    corpus: &[AnnotatedSentence],
    channel: &ChannelConfig,
    fix_prob: f64,
    taxonomy: &Taxonomy,
) -> Result<SimRun<T>, SimError> {
    channel.validate()?;
    check_probability("fix_prob", fix_prob)?;
    let results = corpus
        .iter()
        .enumerate()
        .map(|(i, ex)| simulate_example(ex, i, channel, fix_prob, taxonomy))
        .collect::<Result<Vec<_>, _>>()?;
    summarize_sim(corpus, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ErrorClass;
    use crate::eval::score_example;

    fn sushi() -> AnnotatedSentence {
        AnnotatedSentence::new(
            "The sushi was fresh but overpriced.",
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
            ],
        )
    }

    #[test]
    fn zero_rates_copy_gold() {
        let t = Taxonomy::restaurant();
        let (d, trace) = simulate_generator(&sushi(), 0, &ChannelConfig::default(), &t).unwrap();
        assert_eq!(d, sushi().quads);
        assert_eq!(trace.corrupted, [0; 4]);
    }

    #[test]
    fn forced_sentiment_flip_changes_nothing_else() {
        let t = Taxonomy::restaurant();
        let cfg = ChannelConfig {
            sentiment: 1.0,
            ..Default::default()
        };
        let (d, _) = simulate_generator(&sushi(), 0, &cfg, &t).unwrap();
        for (p, g) in d.iter().zip(&sushi().quads) {
            assert_eq!(mismatch_vector(p, g), [false, false, false, true]);
        }
    }

    #[test]
    fn drop_and_insert() {
        let t = Taxonomy::restaurant();
        let cfg = ChannelConfig {
            drop: 1.0,
            insert: 1.0,
            ..Default::default()
        };
        let (d, trace) = simulate_generator(&sushi(), 0, &cfg, &t).unwrap();
        assert_eq!((trace.dropped, trace.inserted), (2, 2));
        assert_eq!(d.len(), 2);
        for q in &d {
            assert!(t.contains(&q.category));
            assert!(sushi().text.contains(&q.opinion));
        }
    }

    #[test]
    fn rates_are_validated() {
        let t = Taxonomy::restaurant();
        let cfg = ChannelConfig {
            drop: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            simulate_generator(&sushi(), 0, &cfg, &t),
            Err(SimError::BadRate { name: "drop", .. })
        ));
        assert!(simulate_corrector(&[], &[], -0.1, 0, 0).is_err());
    }

    #[test]
    fn corrector_extremes() {
        let t = Taxonomy::restaurant();
        let cfg = ChannelConfig {
            drop: 0.3,
            insert: 0.3,
            ..ChannelConfig::uniform(0.4, 11)
        };
        for i in 0..50 {
            let (draft, _) = simulate_generator(&sushi(), i, &cfg, &t).unwrap();
            let (same, _) = simulate_corrector(&draft, &sushi().quads, 0.0, 3, i).unwrap();
            assert_eq!(same, draft);
            let (fixed, _) = simulate_corrector(&draft, &sushi().quads, 1.0, 3, i).unwrap();
            let c = score_example(&fixed, &sushi().quads);
            assert_eq!(
                (c.tp, c.n_pred, c.n_gold),
                (2, 2, 2),
                "{draft:?} -> {fixed:?}"
            );
        }
    }

    #[test]
    fn pipeline_extremes() {
        let t = Taxonomy::restaurant();
        let corpus = vec![sushi(); 20];
        let run: SimRun<f64> =
            run_pipeline_sim(&corpus, &ChannelConfig::default(), 0.3, &t).unwrap();
        assert_eq!((run.report.stage1.f1, run.report.stage2.f1), (1.0, 1.0));

        let noisy = ChannelConfig {
            drop: 0.1,
            insert: 0.1,
            ..ChannelConfig::uniform(0.2, 5)
        };
        let run: SimRun<f64> = run_pipeline_sim(&corpus, &noisy, 1.0, &t).unwrap();
        assert_eq!(run.report.stage2.f1, 1.0);
        assert!(run.report.stage1.f1 < 1.0);
        let m = &run.report.migration;
        assert_eq!(m.regressions, 0);
        assert_eq!(m.stage2.get(&ErrorClass::Exact), Some(&40));
    }
}
