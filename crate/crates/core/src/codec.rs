//! Linearization of quad sets into the `<c> is <s> because <a> is <o>`
//! template and lenient parsing of (possibly malformed) model output.

use serde::{Deserialize, Serialize};

use crate::quad::{
    canonicalize_term, find_reserved, validate_quad, Aspect, Quad, Sentiment, Taxonomy, Violation,
    QUAD_SEP, SENTENCE_SEP,
};

/// Surface form of an implicit aspect.
pub const IMPLICIT_SURFACE: &str = "it";

const IS: &str = " is ";
const BECAUSE: &str = " because ";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("quad {index} is invalid: {violations:?}")]
    InvalidQuad {
        index: usize,
        violations: Vec<Violation>,
    },
    #[error("sentence contains reserved separator {0}")]
    ReservedInSentence(&'static str),
}

/// Renders one quad; the caller is responsible for validity.
fn render(quad: &Quad) -> String {
    let q = quad.canonical();
    let aspect = match &q.aspect {
        Aspect::Implicit => IMPLICIT_SURFACE,
        Aspect::Term(t) => t.as_str(),
    };
    format!(
        "{} is {} because {} is {}",
        q.category,
        q.sentiment.verbalize(),
        aspect,
        q.opinion
    )
}

/// Linearizes `quads`, joining them with ` [SSEP] `. The empty set renders
/// as the empty string.
pub fn serialize_quads(quads: &[Quad], taxonomy: &Taxonomy) -> Result<String, CodecError> {
    let mut parts = Vec::with_capacity(quads.len());
    for (index, q) in quads.iter().enumerate() {
        let violations = validate_quad(q, taxonomy);
        if !violations.is_empty() {
            return Err(CodecError::InvalidQuad { index, violations });
        }
        parts.push(render(q));
    }
    Ok(parts.join(&format!(" {QUAD_SEP} ")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    UnknownCategory,
    BadSentimentToken,
    MissingDelimiter,
    EmptyField,
    ReservedSubstring,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::UnknownCategory => "unknown-category",
            RejectReason::BadSentimentToken => "bad-sentiment-token",
            RejectReason::MissingDelimiter => "missing-delimiter",
            RejectReason::EmptyField => "empty-field",
            RejectReason::ReservedSubstring => "reserved-substring",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SegmentOutcome {
    Parsed { quad: Quad },
    Rejected { reason: RejectReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDiagnostic {
    pub index: usize,
    pub raw: String,
    pub outcome: SegmentOutcome,
}

/// One entry per `[SSEP]`-separated segment of the parsed text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub segments: Vec<SegmentDiagnostic>,
}

impl ParseDiagnostics {
    pub fn rejections(&self) -> impl Iterator<Item = (&SegmentDiagnostic, RejectReason)> {
        self.segments.iter().filter_map(|s| match s.outcome {
            SegmentOutcome::Rejected { reason } => Some((s, reason)),
            SegmentOutcome::Parsed { .. } => None,
        })
    }

    pub fn reject_count(&self) -> usize {
        self.rejections().count()
    }

    pub fn is_clean(&self) -> bool {
        self.reject_count() == 0
    }
}

/// Parses a linearized quad set. Never fails: segments that do not fit the
/// template are skipped and reported in the diagnostics.
pub fn parse_quads(text: &str, taxonomy: &Taxonomy) -> (Vec<Quad>, ParseDiagnostics) {
    let mut quads = Vec::new();
    let mut diagnostics = ParseDiagnostics::default();
    if text.trim().is_empty() {
        return (quads, diagnostics);
    }
    for (index, raw) in text.split(QUAD_SEP).enumerate() {
        let outcome = match parse_segment(raw, taxonomy) {
            Ok(quad) => {
                quads.push(quad.clone());
                SegmentOutcome::Parsed { quad }
            }
            Err(reason) => SegmentOutcome::Rejected { reason },
        };
        diagnostics.segments.push(SegmentDiagnostic {
            index,
            raw: raw.to_owned(),
            outcome,
        });
    }
    (quads, diagnostics)
}

fn parse_segment(raw: &str, taxonomy: &Taxonomy) -> Result<Quad, RejectReason> {
    let seg = canonicalize_term(raw);
    if seg.is_empty() {
        return Err(RejectReason::EmptyField);
    }
    if find_reserved(&seg).is_some() {
        return Err(RejectReason::ReservedSubstring);
    }

    // Labels contain spaces, so pick the longest label followed by " is ".
    let category = taxonomy
        .labels()
        .iter()
        .filter(|label| {
            seg.strip_prefix(label.as_str())
                .is_some_and(|rest| rest.starts_with(IS))
        })
        .max_by_key(|label| label.len())
        .ok_or(if seg.contains(IS) {
            RejectReason::UnknownCategory
        } else {
            RejectReason::MissingDelimiter
        })?;
    let rest = &seg[category.len() + IS.len()..];

    let (token, rest) = rest
        .split_once(BECAUSE)
        .ok_or(RejectReason::MissingDelimiter)?;
    let sentiment = Sentiment::from_verbalization(token).ok_or(RejectReason::BadSentimentToken)?;

    let (aspect, opinion) = match rest.split_once(IS) {
        Some(split) => split,
        // Trimming ate the space next to a missing term.
        None if rest.ends_with(" is") || rest.starts_with("is ") || rest == "is" => {
            return Err(RejectReason::EmptyField)
        }
        None => return Err(RejectReason::MissingDelimiter),
    };
    let (aspect, opinion) = (aspect.trim(), opinion.trim());
    if aspect.is_empty() || opinion.is_empty() {
        return Err(RejectReason::EmptyField);
    }
    let aspect = if aspect == IMPLICIT_SURFACE {
        Aspect::Implicit
    } else {
        Aspect::term(aspect)
    };
    Ok(Quad::new(aspect, category.clone(), opinion, sentiment))
}

/// `<prefix><sentence> [SENTSEP] <draft>`, the corrector's input string.
pub fn build_corrector_input(
    sentence: &str,
    draft: &str,
    prefix: &str,
) -> Result<String, CodecError> {
    if let Some(sep) = find_reserved(sentence) {
        return Err(CodecError::ReservedInSentence(sep));
    }
    Ok(format!("{prefix}{sentence} {SENTENCE_SEP} {draft}"))
}
