//! Domain types for sentiment quads: polarity, category taxonomy, the quad
//! itself and the canonical comparison used by every other module.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Separator between quads in a linearized quad set.
pub const QUAD_SEP: &str = "[SSEP]";
/// Separator between the sentence and the draft in corrector inputs.
pub const SENTENCE_SEP: &str = "[SENTSEP]";
/// Separator between input and target in corpus lines.
pub const TARGET_SEP: &str = "####";

/// Substrings that may never appear inside a quad field or sentence.
pub const RESERVED: [&str; 3] = [QUAD_SEP, SENTENCE_SEP, TARGET_SEP];

/// Trim and collapse internal whitespace runs to a single space.
///
/// Case is preserved: benchmark corpora are already lowercased and folding
/// here would hide annotation defects.
pub fn canonicalize_term(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Returns the first reserved separator contained in `text`, if any.
pub fn find_reserved(text: &str) -> Option<&'static str> {
    RESERVED.iter().copied().find(|r| text.contains(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral];

    /// Surface token used inside the linearization template.
    pub fn verbalize(self) -> &'static str {
        match self {
            Sentiment::Positive => "great",
            Sentiment::Negative => "bad",
            Sentiment::Neutral => "ok",
        }
    }

    pub fn from_verbalization(token: &str) -> Option<Self> {
        match token {
            "great" => Some(Sentiment::Positive),
            "bad" => Some(Sentiment::Negative),
            "ok" => Some(Sentiment::Neutral),
            _ => None,
        }
    }

    /// Internal polarity name (`positive`, `negative`, `neutral`).
    pub fn name(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        }
    }

    pub fn from_name(word: &str) -> Option<Self> {
        match word {
            "positive" => Some(Sentiment::Positive),
            "negative" => Some(Sentiment::Negative),
            "neutral" => Some(Sentiment::Neutral),
            _ => None,
        }
    }

    /// The two polarities different from `self`, in declaration order.
    pub fn others(self) -> [Sentiment; 2] {
        match self {
            Sentiment::Positive => [Sentiment::Negative, Sentiment::Neutral],
            Sentiment::Negative => [Sentiment::Positive, Sentiment::Neutral],
            Sentiment::Neutral => [Sentiment::Positive, Sentiment::Negative],
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four elements of a quad, in the order used for mismatch vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Aspect,
    Category,
    Opinion,
    Sentiment,
}

impl Element {
    pub const ALL: [Element; 4] = [
        Element::Aspect,
        Element::Category,
        Element::Opinion,
        Element::Sentiment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Element::Aspect => "aspect",
            Element::Category => "category",
            Element::Opinion => "opinion",
            Element::Sentiment => "sentiment",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Element::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Single-letter code used by tuple-order flags (`a`, `c`, `o`, `s`).
    pub fn code(self) -> char {
        self.name().chars().next().unwrap()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("taxonomy is empty")]
    Empty,
    #[error("duplicate category label {0:?}")]
    Duplicate(String),
    #[error("category label {0:?} contains a reserved separator")]
    Reserved(String),
}

/// Closed, ordered set of category labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    labels: Vec<String>,
}

/// The 13 restaurant-domain labels.
pub const RESTAURANT_LABELS: [&str; 13] = [
    "location general",
    "food prices",
    "food quality",
    "food general",
    "ambience general",
    "service general",
    "restaurant prices",
    "drinks prices",
    "restaurant miscellaneous",
    "drinks quality",
    "drinks style_options",
    "restaurant general",
    "food style_options",
];

impl Taxonomy {
    pub fn new<I, S>(labels: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for label in labels {
            let label = canonicalize_term(label.as_ref());
            if label.is_empty() {
                continue;
            }
            if find_reserved(&label).is_some() {
                return Err(TaxonomyError::Reserved(label));
            }
            if out.contains(&label) {
                return Err(TaxonomyError::Duplicate(label));
            }
            out.push(label);
        }
        if out.is_empty() {
            return Err(TaxonomyError::Empty);
        }
        Ok(Self { labels: out })
    }

    /// One label per line; blank lines are ignored.
    pub fn from_lines(text: &str) -> Result<Self, TaxonomyError> {
        Self::new(text.lines())
    }

    pub fn restaurant() -> Self {
        Self::new(RESTAURANT_LABELS).expect("built-in taxonomy is valid")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        let label = canonicalize_term(label);
        self.labels.contains(&label)
    }

    /// Labels that share the entity (first word) or the attribute (last
    /// word) with `label`, excluding `label` itself.
    pub fn related(&self, label: &str) -> Vec<&str> {
        let label = canonicalize_term(label);
        let (entity, attribute) = split_label(&label);
        self.labels
            .iter()
            .filter(|l| **l != label)
            .filter(|l| {
                let (e, a) = split_label(l);
                e == entity || (!a.is_empty() && a == attribute)
            })
            .map(String::as_str)
            .collect()
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::restaurant()
    }
}

fn split_label(label: &str) -> (&str, &str) {
    match label.rsplit_once(' ') {
        Some((entity, attribute)) => (entity, attribute),
        None => (label, ""),
    }
}

/// Aspect term, or the implicit marker for quads without an aspect span.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aspect {
    Implicit,
    Term(String),
}

impl Aspect {
    pub fn term(text: impl Into<String>) -> Self {
        Aspect::Term(text.into())
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self, Aspect::Implicit)
    }

    pub fn as_term(&self) -> Option<&str> {
        match self {
            Aspect::Implicit => None,
            Aspect::Term(t) => Some(t),
        }
    }

    pub fn canonical(&self) -> Aspect {
        match self {
            Aspect::Implicit => Aspect::Implicit,
            Aspect::Term(t) => Aspect::Term(canonicalize_term(t)),
        }
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aspect::Implicit => f.write_str("<implicit>"),
            Aspect::Term(t) => f.write_str(t),
        }
    }
}

// Implicit aspects travel as JSON null.
impl Serialize for Aspect {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_term().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Aspect {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match Option::<String>::deserialize(deserializer)? {
            None => Aspect::Implicit,
            Some(t) => Aspect::Term(t),
        })
    }
}

/// One (aspect, category, opinion, sentiment) tuple.
///
/// Fields are stored as given; use [`Quad::canonical`] or [`quad_equal`]
/// for comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quad {
    pub aspect: Aspect,
    pub category: String,
    pub opinion: String,
    pub sentiment: Sentiment,
}

impl Quad {
    pub fn new(
        aspect: Aspect,
        category: impl Into<String>,
        opinion: impl Into<String>,
        sentiment: Sentiment,
    ) -> Self {
        Self {
            aspect,
            category: category.into(),
            opinion: opinion.into(),
            sentiment,
        }
    }

    /// Canonicalizes every field and checks the result against `taxonomy`.
    pub fn try_new(
        aspect: Aspect,
        category: &str,
        opinion: &str,
        sentiment: Sentiment,
        taxonomy: &Taxonomy,
    ) -> Result<Self, Vec<Violation>> {
        let quad = Quad::new(aspect, category, opinion, sentiment).canonical();
        let violations = validate_quad(&quad, taxonomy);
        if violations.is_empty() {
            Ok(quad)
        } else {
            Err(violations)
        }
    }

    pub fn canonical(&self) -> Quad {
        Quad {
            aspect: self.aspect.canonical(),
            category: canonicalize_term(&self.category),
            opinion: canonicalize_term(&self.opinion),
            sentiment: self.sentiment,
        }
    }

    /// Copy with `element` taken from `other`.
    pub fn with_element_from(&self, other: &Quad, element: Element) -> Quad {
        let mut out = self.clone();
        match element {
            Element::Aspect => out.aspect = other.aspect.clone(),
            Element::Category => out.category = other.category.clone(),
            Element::Opinion => out.opinion = other.opinion.clone(),
            Element::Sentiment => out.sentiment = other.sentiment,
        }
        out
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.aspect, self.category, self.opinion, self.sentiment
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    #[error("unknown category {label:?}")]
    UnknownCategory { label: String },
    #[error("empty aspect term")]
    EmptyAspect,
    #[error("empty opinion")]
    EmptyOpinion,
    #[error("{element} contains reserved separator {separator}")]
    ReservedSubstring { element: Element, separator: String },
}

/// Lists every invariant `quad` breaks under `taxonomy`; empty means valid.
pub fn validate_quad(quad: &Quad, taxonomy: &Taxonomy) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Aspect::Term(t) = &quad.aspect {
        if canonicalize_term(t).is_empty() {
            out.push(Violation::EmptyAspect);
        }
        if let Some(sep) = find_reserved(t) {
            out.push(Violation::ReservedSubstring {
                element: Element::Aspect,
                separator: sep.to_owned(),
            });
        }
    }
    if !taxonomy.contains(&quad.category) {
        out.push(Violation::UnknownCategory {
            label: quad.category.clone(),
        });
    }
    if let Some(sep) = find_reserved(&quad.category) {
        out.push(Violation::ReservedSubstring {
            element: Element::Category,
            separator: sep.to_owned(),
        });
    }
    if canonicalize_term(&quad.opinion).is_empty() {
        out.push(Violation::EmptyOpinion);
    }
    if let Some(sep) = find_reserved(&quad.opinion) {
        out.push(Violation::ReservedSubstring {
            element: Element::Opinion,
            separator: sep.to_owned(),
        });
    }
    out
}

/// Per-element difference between two quads under canonical comparison,
/// indexed by [`Element::index`].
pub fn mismatch_vector(a: &Quad, b: &Quad) -> [bool; 4] {
    [
        a.aspect.canonical() != b.aspect.canonical(),
        canonicalize_term(&a.category) != canonicalize_term(&b.category),
        canonicalize_term(&a.opinion) != canonicalize_term(&b.opinion),
        a.sentiment != b.sentiment,
    ]
}

/// Exact match: all four elements equal after canonicalization.
pub fn quad_equal(a: &Quad, b: &Quad) -> bool {
    mismatch_vector(a, b).iter().all(|d| !d)
}

/// A sentence with its gold quads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    #[serde(rename = "sentence")]
    pub text: String,
    pub quads: Vec<Quad>,
}

impl AnnotatedSentence {
    pub fn new(text: impl Into<String>, quads: Vec<Quad>) -> Self {
        Self {
            text: text.into(),
            quads,
        }
    }
}

/// Removes later duplicates under canonical equality, keeping first
/// occurrences in order. Returns the kept quads with their original indices.
pub fn dedup_quads(quads: &[Quad]) -> Vec<(usize, Quad)> {
    let mut seen = std::collections::HashSet::new();
    quads
        .iter()
        .enumerate()
        .filter_map(|(i, q)| {
            let c = q.canonical();
            seen.insert(c.clone()).then_some((i, c))
        })
        .collect()
}
