//! Rule-based synthesis of near-miss corrector training data.
//!
//! For every gold sentence five drafts are produced, each changing exactly
//! one element of one quad (category, aspect, sentiment, opinion, then a
//! randomly chosen type), followed by an identity pair whose draft equals
//! the gold. Replacement spans are always taken from the sentence itself.
//! A quality-control pass then drops duplicates and anything that would not
//! survive the linearization template.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{parse_quads, serialize_quads};
use crate::corpus::{CorrectorExample, Provenance};
use crate::quad::{
    canonicalize_term, quad_equal, AnnotatedSentence, Aspect, Element, Quad, Taxonomy,
};

/// Redraws allowed when a draft collides with the gold or an earlier draft.
pub const MAX_REDRAWS: usize = 8;

/// Function words never used as the first or last word of a replacement
/// span.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "been", "before", "being", "both", "but", "by", "can", "could", "did", "do", "does",
    "doing", "during", "each", "even", "ever", "for", "from", "had", "has", "have", "having", "he",
    "her", "here", "hers", "him", "his", "how", "i", "if", "in", "into", "is", "it", "it's", "its",
    "just", "me", "more", "most", "my", "no", "nor", "not", "of", "on", "once", "only", "or",
    "other", "our", "ours", "out", "over", "own", "same", "she", "should", "so", "some", "such",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "us", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you",
    "your", "'s", "n't",
];

fn is_stopword(word: &str) -> bool {
    let w = word.to_lowercase();
    STOPWORDS.contains(&w.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Weight of identity pairs.
    pub w_cor: f64,
    /// Weight of error drafts.
    pub w_err: f64,
    /// Longest replacement span, in words.
    pub max_span_len: usize,
    /// Emit the identity pair; off for the no-identity ablation corpus.
    pub include_identity: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            w_cor: 1.0,
            w_err: 1.0,
            max_span_len: 3,
            include_identity: true,
        }
    }
}

/// Per-example generator derived from the global seed and the example's
/// position, so results do not depend on processing order.
pub fn example_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(
        seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)),
    ))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Byte ranges of word tokens: alphanumeric runs, allowing inner `'` and `-`.
fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            let joins = (c == '\'' || c == '-')
                && chars.get(j + 1).is_some_and(|(_, n)| n.is_alphanumeric());
            if c.is_alphanumeric() || joins {
                j += 1;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |(b, _)| *b);
        spans.push((start, end));
        i = j;
    }
    spans
}

fn span_allowed(span: &str, element: Element) -> bool {
    match element {
        // An aspect containing " is " would split wrongly, and "it" reads
        // back as the implicit aspect.
        Element::Aspect => span != "it" && !span.split(' ').any(|w| w == "is"),
        _ => true,
    }
}

/// Replacement candidates for a span element, in two priority tiers:
/// other gold terms of the same element that occur in the sentence, then
/// content-word n-grams of the sentence. Both tiers exclude `original`.
pub fn candidate_tiers(
    sentence: &str,
    gold: &[Quad],
    element: Element,
    original: &str,
    max_span_len: usize,
) -> [Vec<String>; 2] {
    let original = canonicalize_term(original);
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(original.clone());

    let mut tier1: Vec<(usize, String)> = gold
        .iter()
        .filter_map(|q| match element {
            Element::Aspect => q.aspect.as_term().map(canonicalize_term),
            Element::Opinion => Some(canonicalize_term(&q.opinion)),
            _ => None,
        })
        .filter(|t| !t.is_empty() && span_allowed(t, element))
        .filter_map(|t| sentence.find(&t).map(|pos| (pos, t)))
        .collect();
    tier1.sort();
    let tier1: Vec<String> = tier1
        .into_iter()
        .map(|(_, t)| t)
        .filter(|t| seen.insert(t.clone()))
        .collect();

    let words = word_spans(sentence);
    let mut tier2 = Vec::new();
    for i in 0..words.len() {
        if is_stopword(&sentence[words[i].0..words[i].1]) {
            continue;
        }
        for j in i..words.len().min(i + max_span_len) {
            if j > i && &sentence[words[j - 1].1..words[j].0] != " " {
                break;
            }
            let last = &sentence[words[j].0..words[j].1];
            if is_stopword(last) {
                continue;
            }
            let span = &sentence[words[i].0..words[j].1];
            if span_allowed(span, element) && seen.insert(span.to_owned()) {
                tier2.push(span.to_owned());
            }
        }
    }
    [tier1, tier2]
}

/// All replacement candidates, highest priority first.
pub fn candidate_mentions(
    sentence: &str,
    gold: &[Quad],
    element: Element,
    original: &str,
    max_span_len: usize,
) -> Vec<String> {
    let [mut a, b] = candidate_tiers(sentence, gold, element, original, max_span_len);
    a.extend(b);
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "kebab-case")]
pub enum Unavailable {
    #[error("no alternative span in the sentence")]
    NoCandidates,
    #[error("no alternative category in the taxonomy")]
    NoAlternativeCategory,
    #[error("quad index out of range")]
    NoSuchQuad,
    #[error("sentence has no quads")]
    NoQuads,
}

fn category_pool<'t>(taxonomy: &'t Taxonomy, original: &str) -> Vec<&'t str> {
    let related = taxonomy.related(original);
    if !related.is_empty() {
        return related;
    }
    let original = canonicalize_term(original);
    taxonomy
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| *l != original)
        .collect()
}

fn pick_span<R: Rng + ?Sized>(rng: &mut R, tiers: [Vec<String>; 2]) -> Option<String> {
    let [tier1, tier2] = tiers;
    let tier = match (tier1.is_empty(), tier2.is_empty()) {
        (true, true) => return None,
        (false, true) => tier1,
        (true, false) => tier2,
        (false, false) => {
            if rng.gen_bool(0.5) {
                tier1
            } else {
                tier2
            }
        }
    };
    tier.choose(rng).cloned()
}

/// Whether `element` of `quad` can be replaced at all.
pub fn can_perturb(
    sentence: &str,
    gold: &[Quad],
    quad: &Quad,
    element: Element,
    taxonomy: &Taxonomy,
    max_span_len: usize,
) -> bool {
    match element {
        Element::Sentiment => true,
        Element::Category => !category_pool(taxonomy, &quad.category).is_empty(),
        Element::Aspect => {
            let orig = quad.aspect.as_term().unwrap_or("");
            !candidate_mentions(sentence, gold, element, orig, max_span_len).is_empty()
        }
        Element::Opinion => {
            !candidate_mentions(sentence, gold, element, &quad.opinion, max_span_len).is_empty()
        }
    }
}

/// Returns `quad` with `element` replaced by a wrong value: a related
/// taxonomy label, one of the two other polarities, or a span from the
/// sentence.
pub fn perturb_quad<R: Rng + ?Sized>(
    sentence: &str,
    gold: &[Quad],
    quad: &Quad,
    element: Element,
    taxonomy: &Taxonomy,
    max_span_len: usize,
    rng: &mut R,
) -> Result<Quad, Unavailable> {
    let mut out = quad.canonical();
    match element {
        Element::Category => {
            let pool = category_pool(taxonomy, &quad.category);
            out.category =
                (*pool.choose(rng).ok_or(Unavailable::NoAlternativeCategory)?).to_owned();
        }
        Element::Sentiment => {
            out.sentiment = *quad
                .sentiment
                .others()
                .choose(rng)
                .expect("two alternatives");
        }
        Element::Aspect => {
            let orig = quad.aspect.as_term().unwrap_or("");
            let tiers = candidate_tiers(sentence, gold, element, orig, max_span_len);
            out.aspect = Aspect::Term(pick_span(rng, tiers).ok_or(Unavailable::NoCandidates)?);
        }
        Element::Opinion => {
            let tiers = candidate_tiers(sentence, gold, element, &quad.opinion, max_span_len);
            out.opinion = pick_span(rng, tiers).ok_or(Unavailable::NoCandidates)?;
        }
    }
    Ok(out)
}

/// Builds one single-error draft by perturbing `element` of quad
/// `quad_index`.
pub fn perturb_element<R: Rng + ?Sized>(
    ex: &AnnotatedSentence,
    quad_index: usize,
    element: Element,
    cfg: &SynthConfig,
    taxonomy: &Taxonomy,
    rng: &mut R,
) -> Result<CorrectorExample, Unavailable> {
    let target = ex.quads.get(quad_index).ok_or(Unavailable::NoSuchQuad)?;
    let replaced = perturb_quad(
        &ex.text,
        &ex.quads,
        target,
        element,
        taxonomy,
        cfg.max_span_len,
        rng,
    )?;
    let mut draft: Vec<Quad> = ex.quads.iter().map(Quad::canonical).collect();
    draft[quad_index] = replaced;
    Ok(CorrectorExample {
        sentence: ex.text.clone(),
        draft,
        gold: ex.quads.clone(),
        weight: cfg.w_err,
        provenance: Provenance::Error(element),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    Unavailable(Unavailable),
    /// Every redraw collided with the gold or an earlier draft.
    Collision,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::Unavailable(u) => write!(f, "unavailable: {u}"),
            FailureReason::Collision => write!(f, "no distinct draft after {MAX_REDRAWS} redraws"),
        }
    }
}

/// A draft slot (1..=5) that produced nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftFailure {
    pub slot: usize,
    pub element: Option<Element>,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Synthesized {
    pub examples: Vec<CorrectorExample>,
    pub failures: Vec<DraftFailure>,
}

fn canonical_seq(quads: &[Quad]) -> Vec<Quad> {
    quads.iter().map(Quad::canonical).collect()
}

/// Five single-error drafts plus the identity pair for one sentence.
///
/// `index` is the sentence's position in its corpus; together with
/// `cfg.seed` it fully determines the output.
pub fn synthesize_drafts(
    ex: &AnnotatedSentence,
    index: usize,
    cfg: &SynthConfig,
    taxonomy: &Taxonomy,
) -> Synthesized {
    let mut out = Synthesized::default();
    let mut rng = example_rng(cfg.seed, index as u64);

    let available = |e: Element| -> Vec<usize> {
        (0..ex.quads.len())
            .filter(|&i| {
                can_perturb(
                    &ex.text,
                    &ex.quads,
                    &ex.quads[i],
                    e,
                    taxonomy,
                    cfg.max_span_len,
                )
            })
            .collect()
    };
    let per_element: Vec<(Element, Vec<usize>)> = Element::ALL
        .into_iter()
        .map(|e| (e, available(e)))
        .collect();
    let quads_for = |e: Element| &per_element[e.index()].1;

    let mut seen: Vec<Vec<Quad>> = vec![canonical_seq(&ex.quads)];
    let slots = [
        Some(Element::Category),
        Some(Element::Aspect),
        Some(Element::Sentiment),
        Some(Element::Opinion),
        None,
    ];
    for (k, fixed) in slots.into_iter().enumerate() {
        let slot = k + 1;
        if ex.quads.is_empty() {
            out.failures.push(DraftFailure {
                slot,
                element: fixed,
                reason: FailureReason::Unavailable(Unavailable::NoQuads),
            });
            continue;
        }
        let element = match fixed {
            Some(e) => e,
            None => {
                let open: Vec<Element> = per_element
                    .iter()
                    .filter(|(_, q)| !q.is_empty())
                    .map(|(e, _)| *e)
                    .collect();
                // Sentiment is always available when there is a quad.
                *open
                    .choose(&mut rng)
                    .expect("sentiment is always perturbable")
            }
        };
        let candidates = quads_for(element);
        if candidates.is_empty() {
            let reason = if element == Element::Category {
                Unavailable::NoAlternativeCategory
            } else {
                Unavailable::NoCandidates
            };
            out.failures.push(DraftFailure {
                slot,
                element: Some(element),
                reason: FailureReason::Unavailable(reason),
            });
            continue;
        }

        let mut produced = None;
        for _ in 0..=MAX_REDRAWS {
            let qi = *candidates.choose(&mut rng).expect("non-empty");
            let Ok(mut draft) = perturb_element(ex, qi, element, cfg, taxonomy, &mut rng) else {
                continue;
            };
            let seq = canonical_seq(&draft.draft);
            let duplicates_sibling = seq
                .iter()
                .enumerate()
                .any(|(j, q)| j != qi && quad_equal(q, &seq[qi]));
            if duplicates_sibling || seen.contains(&seq) {
                continue;
            }
            seen.push(seq);
            if fixed.is_none() {
                draft.provenance = Provenance::Random(element);
            }
            produced = Some(draft);
            break;
        }
        match produced {
            Some(d) => out.examples.push(d),
            None => out.failures.push(DraftFailure {
                slot,
                element: Some(element),
                reason: FailureReason::Collision,
            }),
        }
    }

    if cfg.include_identity {
        out.examples.push(CorrectorExample {
            sentence: ex.text.clone(),
            draft: ex.quads.clone(),
            gold: ex.quads.clone(),
            weight: cfg.w_cor,
            provenance: Provenance::Identity,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QcReason {
    Duplicate,
    Unparseable { detail: String },
    NotInSentence { element: Element, term: String },
    Taxonomy { label: String },
}

impl fmt::Display for QcReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QcReason::Duplicate => f.write_str("duplicate draft"),
            QcReason::Unparseable { detail } => write!(f, "unparseable: {detail}"),
            QcReason::NotInSentence { element, term } => {
                write!(f, "{element} {term:?} is not in the sentence")
            }
            QcReason::Taxonomy { label } => write!(f, "category {label:?} is not in the taxonomy"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QcOutcome {
    pub kept: Vec<CorrectorExample>,
    pub rejected: Vec<(CorrectorExample, QcReason)>,
}

fn qc_check(ex: &CorrectorExample, taxonomy: &Taxonomy) -> Result<(), QcReason> {
    if let Some(q) = ex
        .draft
        .iter()
        .chain(&ex.gold)
        .find(|q| !taxonomy.contains(&q.category))
    {
        return Err(QcReason::Taxonomy {
            label: q.category.clone(),
        });
    }

    let text = serialize_quads(&ex.draft, taxonomy).map_err(|e| QcReason::Unparseable {
        detail: e.to_string(),
    })?;
    let (back, diag) = parse_quads(&text, taxonomy);
    if !diag.is_clean()
        || back.len() != ex.draft.len()
        || !back.iter().zip(&ex.draft).all(|(a, b)| quad_equal(a, b))
    {
        return Err(QcReason::Unparseable {
            detail: format!("{text:?} does not read back as the same quads"),
        });
    }

    if !ex.is_identity() {
        for q in &ex.draft {
            let spans = [
                (Element::Aspect, q.aspect.as_term().map(canonicalize_term)),
                (Element::Opinion, Some(canonicalize_term(&q.opinion))),
            ];
            for (element, term) in spans {
                let Some(term) = term else { continue };
                let in_gold = ex.gold.iter().any(|g| match element {
                    Element::Aspect => {
                        g.aspect.as_term().map(canonicalize_term).as_ref() == Some(&term)
                    }
                    _ => canonicalize_term(&g.opinion) == term,
                });
                if !ex.sentence.contains(&term) && !in_gold {
                    return Err(QcReason::NotInSentence { element, term });
                }
            }
        }
    }
    Ok(())
}

/// Drops drafts that are out of taxonomy, unparseable, use spans from
/// outside the sentence, or repeat an earlier (sentence, draft) pair.
pub fn qc_filter(examples: Vec<CorrectorExample>, taxonomy: &Taxonomy) -> QcOutcome {
    let mut out = QcOutcome::default();
    let mut seen: HashSet<(String, Vec<Quad>)> = HashSet::new();
    for ex in examples {
        if let Err(reason) = qc_check(&ex, taxonomy) {
            out.rejected.push((ex, reason));
            continue;
        }
        let key = (canonicalize_term(&ex.sentence), canonical_seq(&ex.draft));
        if !seen.insert(key) {
            out.rejected.push((ex, QcReason::Duplicate));
            continue;
        }
        out.kept.push(ex);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSynthesis {
    pub kept: Vec<CorrectorExample>,
    /// `(sentence index, failure)` for every draft slot that produced nothing.
    pub failures: Vec<(usize, DraftFailure)>,
    pub rejected: Vec<(CorrectorExample, QcReason)>,
    pub generated: usize,
}

/// Synthesizes and filters a whole corpus. Deduplication runs across the
/// corpus, not only within a sentence.
pub fn synthesize_corpus(
    corpus: &[AnnotatedSentence],
    cfg: &SynthConfig,
    taxonomy: &Taxonomy,
) -> CorpusSynthesis {
    let per_example: Vec<Synthesized> = corpus
        .iter()
        .enumerate()
        .map(|(i, ex)| synthesize_drafts(ex, i, cfg, taxonomy))
        .collect();
    collect_synthesis(per_example, taxonomy)
}

/// Joins per-sentence results (in corpus order) and applies the filter.
pub fn collect_synthesis(per_example: Vec<Synthesized>, taxonomy: &Taxonomy) -> CorpusSynthesis {
    let mut all = Vec::new();
    let mut failures = Vec::new();
    for (i, s) in per_example.into_iter().enumerate() {
        failures.extend(s.failures.into_iter().map(|f| (i, f)));
        all.extend(s.examples);
    }
    let generated = all.len();
    let qc = qc_filter(all, taxonomy);
    CorpusSynthesis {
        kept: qc.kept,
        failures,
        rejected: qc.rejected,
        generated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Sentiment;

    const SENT: &str = "The sushi was fresh but overpriced.";

    fn sushi() -> AnnotatedSentence {
        AnnotatedSentence::new(
            SENT,
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
    fn tokenizer_keeps_inner_apostrophes() {
        let s = "the chef's 'special' -- well-made!";
        let words: Vec<&str> = word_spans(s).into_iter().map(|(a, b)| &s[a..b]).collect();
        assert_eq!(words, vec!["the", "chef's", "special", "well-made"]);
    }

    #[test]
    fn aspect_candidates_contain_opinion_words() {
        let ex = sushi();
        let c = candidate_mentions(SENT, &ex.quads, Element::Aspect, "sushi", 3);
        assert!(c.contains(&"fresh".to_owned()));
        assert!(c.contains(&"overpriced".to_owned()));
        assert!(!c.contains(&"sushi".to_owned()));
        assert!(c.iter().all(|s| SENT.contains(s.as_str())));
        // "sushi was fresh" is a content-bounded trigram.
        assert!(c.contains(&"sushi was fresh".to_owned()));
        assert!(!c.iter().any(|s| s.starts_with("The") || s.ends_with("but")));
    }

    #[test]
    fn opinion_candidates_put_gold_opinions_first() {
        let ex = sushi();
        let [tier1, tier2] = candidate_tiers(SENT, &ex.quads, Element::Opinion, "overpriced", 3);
        assert_eq!(tier1, vec!["fresh".to_owned()]);
        assert!(!tier2.contains(&"fresh".to_owned()));
        assert!(!tier2.contains(&"overpriced".to_owned()));
    }

    #[test]
    fn no_alternative_mentions() {
        let q = Quad::new(
            Aspect::term("sushi"),
            "food quality",
            "sushi",
            Sentiment::Positive,
        );
        assert!(candidate_mentions(
            "sushi",
            std::slice::from_ref(&q),
            Element::Aspect,
            "sushi",
            3
        )
        .is_empty());
        assert!(candidate_mentions("sushi", &[q], Element::Opinion, "sushi", 3).is_empty());
    }

    #[test]
    fn aspect_spans_never_contain_is() {
        let s = "service is slow but food is good";
        let c = candidate_mentions(s, &[], Element::Aspect, "", 3);
        assert!(c.iter().all(|x| !x.split(' ').any(|w| w == "is")));
        let o = candidate_mentions(s, &[], Element::Opinion, "", 3);
        assert!(o.contains(&"service is slow".to_owned()));
    }

    #[test]
    fn span_length_is_bounded() {
        let s = "crispy golden fried chicken wings";
        let c = candidate_mentions(s, &[], Element::Opinion, "", 2);
        assert!(c.iter().all(|x| x.split(' ').count() <= 2));
        assert!(c.contains(&"fried chicken".to_owned()));
    }

    #[test]
    fn perturb_examples() {
        let ex = sushi();
        let cfg = SynthConfig::default();
        let t = Taxonomy::restaurant();
        let mut rng = example_rng(7, 0);
        let d = perturb_element(&ex, 0, Element::Category, &cfg, &t, &mut rng).unwrap();
        assert_ne!(d.draft[0].category, "food quality");
        assert!(t
            .related("food quality")
            .contains(&d.draft[0].category.as_str()));
        assert_eq!(d.draft[1], ex.quads[1]);
        assert_eq!(d.provenance, Provenance::Error(Element::Category));

        let d = perturb_element(&ex, 0, Element::Sentiment, &cfg, &t, &mut rng).unwrap();
        assert_ne!(d.draft[0].sentiment, Sentiment::Positive);

        let d = perturb_element(&ex, 1, Element::Opinion, &cfg, &t, &mut rng).unwrap();
        assert_ne!(d.draft[1].opinion, "overpriced");
        assert!(SENT.contains(&d.draft[1].opinion));

        assert_eq!(
            perturb_element(&ex, 2, Element::Opinion, &cfg, &t, &mut rng),
            Err(Unavailable::NoSuchQuad)
        );
        let tiny = Taxonomy::new(["food quality"]).unwrap();
        assert_eq!(
            perturb_element(&ex, 0, Element::Category, &cfg, &tiny, &mut rng),
            Err(Unavailable::NoAlternativeCategory)
        );
    }

    #[test]
    fn sentiment_perturbation_is_uniform_over_the_other_two() {
        let q = sushi().quads[0].clone();
        let t = Taxonomy::restaurant();
        let mut rng = example_rng(1, 1);
        let mut neg = 0;
        for _ in 0..2000 {
            let p = perturb_quad(SENT, &[], &q, Element::Sentiment, &t, 3, &mut rng).unwrap();
            assert_ne!(p.sentiment, Sentiment::Positive);
            neg += usize::from(p.sentiment == Sentiment::Negative);
        }
        assert!((900..1100).contains(&neg), "{neg}");
    }

    #[test]
    fn six_lines_identity_last() {
        let t = Taxonomy::restaurant();
        let out = synthesize_drafts(&sushi(), 0, &SynthConfig::default(), &t);
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.examples.len(), 6);
        let prov: Vec<_> = out.examples.iter().map(|e| e.provenance).collect();
        assert_eq!(
            &prov[..4],
            &[
                Provenance::Error(Element::Category),
                Provenance::Error(Element::Aspect),
                Provenance::Error(Element::Sentiment),
                Provenance::Error(Element::Opinion),
            ]
        );
        assert!(matches!(prov[4], Provenance::Random(_)));
        assert_eq!(prov[5], Provenance::Identity);
        let seqs: HashSet<Vec<Quad>> = out
            .examples
            .iter()
            .map(|e| canonical_seq(&e.draft))
            .collect();
        assert_eq!(seqs.len(), 6);
    }

    #[test]
    fn no_spans_means_only_category_and_sentiment() {
        let t = Taxonomy::restaurant();
        let ex = AnnotatedSentence::new(
            "yummy",
            vec![Quad::new(
                Aspect::term("yummy"),
                "food quality",
                "yummy",
                Sentiment::Positive,
            )],
        );
        for seed in 0..20 {
            let cfg = SynthConfig {
                seed,
                ..Default::default()
            };
            let out = synthesize_drafts(&ex, 3, &cfg, &t);
            let failed: Vec<_> = out.failures.iter().map(|f| (f.slot, f.element)).collect();
            assert_eq!(
                failed,
                vec![(2, Some(Element::Aspect)), (4, Some(Element::Opinion))]
            );
            assert!(out.examples.iter().all(|e| matches!(
                e.provenance.element(),
                None | Some(Element::Category) | Some(Element::Sentiment)
            )));
            assert_eq!(out.examples.len(), 4);
        }
    }

    #[test]
    fn collisions_are_dropped_after_redraws() {
        // Two categories and one quad: the category slot and a random
        // category slot can only produce one distinct draft.
        let t = Taxonomy::new(["food quality", "food prices"]).unwrap();
        let ex = AnnotatedSentence::new(
            "yummy",
            vec![Quad::new(
                Aspect::Implicit,
                "food quality",
                "yummy",
                Sentiment::Positive,
            )],
        );
        let mut saw_collision = false;
        for seed in 0..40 {
            let out = synthesize_drafts(
                &ex,
                0,
                &SynthConfig {
                    seed,
                    ..Default::default()
                },
                &t,
            );
            saw_collision |= out
                .failures
                .iter()
                .any(|f| f.reason == FailureReason::Collision);
            let seqs: HashSet<Vec<Quad>> = out
                .examples
                .iter()
                .map(|e| canonical_seq(&e.draft))
                .collect();
            assert_eq!(seqs.len(), out.examples.len());
        }
        assert!(saw_collision);
    }

    #[test]
    fn empty_gold_yields_identity_only() {
        let t = Taxonomy::restaurant();
        let out = synthesize_drafts(
            &AnnotatedSentence::new("nothing here", vec![]),
            0,
            &SynthConfig::default(),
            &t,
        );
        assert_eq!(out.examples.len(), 1);
        assert_eq!(out.failures.len(), 5);
    }

    #[test]
    fn weights_and_ablation() {
        let t = Taxonomy::restaurant();
        let cfg = SynthConfig {
            w_cor: 2.0,
            w_err: 0.5,
            ..Default::default()
        };
        let out = synthesize_drafts(&sushi(), 0, &cfg, &t);
        for e in &out.examples {
            assert_eq!(e.weight, if e.is_identity() { 2.0 } else { 0.5 });
        }
        let cfg = SynthConfig {
            include_identity: false,
            ..Default::default()
        };
        let out = synthesize_drafts(&sushi(), 0, &cfg, &t);
        assert!(out.examples.iter().all(|e| !e.is_identity()));
        assert_eq!(out.examples.len(), 5);
    }

    #[test]
    fn determinism_and_order_independence() {
        let t = Taxonomy::restaurant();
        let cfg = SynthConfig {
            seed: 99,
            ..Default::default()
        };
        let a = synthesize_drafts(&sushi(), 5, &cfg, &t);
        let b = synthesize_drafts(&sushi(), 5, &cfg, &t);
        assert_eq!(a, b);
    }

    fn error_example(draft: Vec<Quad>) -> CorrectorExample {
        CorrectorExample {
            sentence: SENT.into(),
            draft,
            gold: sushi().quads,
            weight: 1.0,
            provenance: Provenance::Error(Element::Category),
        }
    }

    #[test]
    fn qc_reasons() {
        let t = Taxonomy::restaurant();
        let mut cat = sushi().quads;
        cat[0].category = "food general".into();
        let mut flavor = sushi().quads;
        flavor[0].category = "food flavor".into();
        let mut outside = sushi().quads;
        outside[1].opinion = "cheap".into();
        let mut broken = sushi().quads;
        broken[0].aspect = Aspect::term("sushi is");
        let mut it = sushi().quads;
        it[0].aspect = Aspect::term("it");

        let out = qc_filter(
            vec![
                error_example(cat.clone()),
                error_example(cat),
                error_example(flavor),
                error_example(outside),
                error_example(broken),
                error_example(it),
            ],
            &t,
        );
        assert_eq!(out.kept.len(), 1);
        let reasons: Vec<_> = out.rejected.iter().map(|(_, r)| r.clone()).collect();
        assert_eq!(reasons[0], QcReason::Duplicate);
        assert_eq!(
            reasons[1],
            QcReason::Taxonomy {
                label: "food flavor".into()
            }
        );
        assert_eq!(
            reasons[2],
            QcReason::NotInSentence {
                element: Element::Opinion,
                term: "cheap".into()
            }
        );
        assert!(matches!(reasons[3], QcReason::Unparseable { .. }));
        assert!(matches!(reasons[4], QcReason::Unparseable { .. }));
    }

    #[test]
    fn identity_pairs_are_exempt_from_span_check() {
        let t = Taxonomy::restaurant();
        let gold = vec![Quad::new(
            Aspect::term("eel"),
            "food quality",
            "divine",
            Sentiment::Positive,
        )];
        let ex = CorrectorExample {
            sentence: "loved it".into(),
            draft: gold.clone(),
            gold,
            weight: 1.0,
            provenance: Provenance::Identity,
        };
        assert_eq!(qc_filter(vec![ex], &t).kept.len(), 1);
    }
}
