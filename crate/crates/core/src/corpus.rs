//! Corpus formats.
//!
//! * legacy gold lines: `sentence####[['aspect', 'category', 'sentiment', 'opinion'], ...]`
//! * canonical records: one JSON object per line
//! * corrector interchange lines: `sentence [SENTSEP] draft #### gold`, with
//!   weights and provenance in a JSON-lines sidecar keyed by line number

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{parse_quads, serialize_quads, CodecError, ParseDiagnostics};
use crate::quad::{
    find_reserved, quad_equal, AnnotatedSentence, Aspect, Element, Quad, Sentiment, Taxonomy,
    Violation, SENTENCE_SEP, TARGET_SEP,
};

/// Literal used by legacy files for an implicit aspect.
pub const LEGACY_NULL: &str = "NULL";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("missing `####` separator")]
    MissingTargetSep,
    #[error("missing `[SENTSEP]` separator")]
    MissingSentenceSep,
    #[error("malformed tuple list: {0}")]
    Malformed(String),
    #[error("tuple {index} has {found} fields, expected 4")]
    WrongArity { index: usize, found: usize },
    #[error("unknown sentiment word {0:?}")]
    UnknownSentiment(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("invalid quad: {0:?}")]
    InvalidQuad(Vec<Violation>),
    #[error("empty sentence")]
    EmptySentence,
    #[error("sentence contains reserved separator {0}")]
    ReservedInSentence(&'static str),
    #[error("unparseable quads in {side}: {detail}")]
    Unparseable { side: &'static str, detail: String },
    #[error("bad record: {0}")]
    Record(String),
    #[error("invalid corrector example: {0}")]
    InvalidExample(String),
}

impl From<CodecError> for CorpusError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::InvalidQuad { violations, .. } => CorpusError::InvalidQuad(violations),
            CodecError::ReservedInSentence(s) => CorpusError::ReservedInSentence(s),
        }
    }
}

/// Field order of the 4-tuples in legacy files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementOrder(pub [Element; 4]);

impl Default for ElementOrder {
    fn default() -> Self {
        ElementOrder([
            Element::Aspect,
            Element::Category,
            Element::Sentiment,
            Element::Opinion,
        ])
    }
}

impl FromStr for ElementOrder {
    type Err = String;

    /// Accepts letter codes (`acso`) or comma-separated element names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<Element> = if s.contains(',') {
            s.split(',')
                .map(|p| {
                    Element::from_name(p.trim()).ok_or_else(|| format!("unknown element {p:?}"))
                })
                .collect::<Result<_, _>>()?
        } else {
            s.chars()
                .map(|c| {
                    Element::ALL
                        .into_iter()
                        .find(|e| e.code() == c)
                        .ok_or_else(|| format!("unknown element code {c:?}"))
                })
                .collect::<Result<_, _>>()?
        };
        let order: [Element; 4] = parts
            .try_into()
            .map_err(|_| format!("element order {s:?} must name four elements"))?;
        for e in Element::ALL {
            if !order.contains(&e) {
                return Err(format!("element order {s:?} is missing {e}"));
            }
        }
        Ok(ElementOrder(order))
    }
}

impl fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|e| write!(f, "{}", e.code()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportOptions {
    pub order: ElementOrder,
    /// Lowercase sentence and terms on import.
    pub lowercase: bool,
}

/// Parses one legacy gold line.
pub fn import_legacy_line(
    line: &str,
    opts: &ImportOptions,
    taxonomy: &Taxonomy,
) -> Result<AnnotatedSentence, CorpusError> {
    let (sentence, tuples) = line
        .split_once(TARGET_SEP)
        .ok_or(CorpusError::MissingTargetSep)?;
    let mut sentence = sentence.trim().to_owned();
    if opts.lowercase {
        sentence = sentence.to_lowercase();
    }
    if sentence.is_empty() {
        return Err(CorpusError::EmptySentence);
    }
    if let Some(sep) = find_reserved(&sentence) {
        return Err(CorpusError::ReservedInSentence(sep));
    }
    let tuples = parse_tuple_list(tuples.trim())?;
    let mut quads = Vec::with_capacity(tuples.len());
    for (index, fields) in tuples.into_iter().enumerate() {
        if fields.len() != 4 {
            return Err(CorpusError::WrongArity {
                index,
                found: fields.len(),
            });
        }
        let get = |e: Element| {
            let pos = opts.order.0.iter().position(|x| *x == e).unwrap();
            let v = fields[pos].trim();
            if opts.lowercase {
                v.to_lowercase()
            } else {
                v.to_owned()
            }
        };
        let aspect = match get(Element::Aspect) {
            a if a == LEGACY_NULL || (opts.lowercase && a == "null") => Aspect::Implicit,
            a => Aspect::Term(a),
        };
        let category = get(Element::Category);
        let opinion = get(Element::Opinion);
        let sentiment_word = get(Element::Sentiment);
        let sentiment = Sentiment::from_name(&sentiment_word)
            .ok_or_else(|| CorpusError::UnknownSentiment(sentiment_word.clone()))?;
        if !taxonomy.contains(&category) {
            return Err(CorpusError::UnknownCategory(category));
        }
        let quad = Quad::try_new(aspect, &category, &opinion, sentiment, taxonomy)
            .map_err(CorpusError::InvalidQuad)?;
        quads.push(quad);
    }
    Ok(AnnotatedSentence::new(sentence, quads))
}

/// Renders a sentence back into the legacy format.
pub fn export_legacy_line(ex: &AnnotatedSentence, order: ElementOrder) -> String {
    let tuples: Vec<String> = ex
        .quads
        .iter()
        .map(|q| {
            let fields: Vec<String> = order
                .0
                .iter()
                .map(|e| {
                    let v = match e {
                        Element::Aspect => q.aspect.as_term().unwrap_or(LEGACY_NULL),
                        Element::Category => q.category.as_str(),
                        Element::Opinion => q.opinion.as_str(),
                        Element::Sentiment => q.sentiment.name(),
                    };
                    py_repr(v)
                })
                .collect();
            format!("[{}]", fields.join(", "))
        })
        .collect();
    format!("{}{}[{}]", ex.text, TARGET_SEP, tuples.join(", "))
}

/// Python `repr` of a string.
fn py_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Parses a Python-literal list of lists of quoted strings.
fn parse_tuple_list(text: &str) -> Result<Vec<Vec<String>>, CorpusError> {
    let mut p = LiteralParser {
        chars: text.char_indices().peekable(),
        src: text,
    };
    p.skip_ws();
    let mut tuples = Vec::new();
    p.expect('[')?;
    p.skip_ws();
    if !p.eat(']') {
        loop {
            p.skip_ws();
            p.expect('[')?;
            let mut fields = Vec::new();
            p.skip_ws();
            if !p.eat(']') {
                loop {
                    p.skip_ws();
                    fields.push(p.string()?);
                    p.skip_ws();
                    if p.eat(']') {
                        break;
                    }
                    p.expect(',')?;
                }
            }
            tuples.push(fields);
            p.skip_ws();
            if p.eat(']') {
                break;
            }
            p.expect(',')?;
        }
    }
    p.skip_ws();
    if let Some((i, c)) = p.chars.next() {
        return Err(CorpusError::Malformed(format!(
            "trailing {c:?} at byte {i} of {:?}",
            p.src
        )));
    }
    Ok(tuples)
}

struct LiteralParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl LiteralParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn eat(&mut self, want: char) -> bool {
        self.chars.next_if(|(_, c)| *c == want).is_some()
    }

    fn expect(&mut self, want: char) -> Result<(), CorpusError> {
        match self.chars.next() {
            Some((_, c)) if c == want => Ok(()),
            Some((i, c)) => Err(CorpusError::Malformed(format!(
                "expected {want:?} at byte {i}, found {c:?}"
            ))),
            None => Err(CorpusError::Malformed(format!(
                "expected {want:?}, found end of line"
            ))),
        }
    }

    fn string(&mut self) -> Result<String, CorpusError> {
        let quote = match self.chars.next() {
            Some((_, q @ ('\'' | '"'))) => q,
            Some((i, c)) => {
                return Err(CorpusError::Malformed(format!(
                    "expected quoted string at byte {i}, found {c:?}"
                )))
            }
            None => return Err(CorpusError::Malformed("unexpected end of line".into())),
        };
        let mut out = String::new();
        loop {
            match self.chars.next() {
                Some((_, c)) if c == quote => return Ok(out),
                Some((_, '\\')) => match self.chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, c)) => out.push(c),
                    None => break,
                },
                Some((_, c)) => out.push(c),
                None => break,
            }
        }
        Err(CorpusError::Malformed("unterminated string".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineReject {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Imported {
    pub sentences: Vec<AnnotatedSentence>,
    pub rejects: Vec<LineReject>,
}

/// Imports a whole legacy file, skipping blank lines and collecting
/// per-line rejections instead of stopping.
pub fn import_legacy(text: &str, opts: &ImportOptions, taxonomy: &Taxonomy) -> Imported {
    let mut out = Imported::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match import_legacy_line(line, opts, taxonomy) {
            Ok(s) => out.sentences.push(s),
            Err(e) => out.rejects.push(LineReject {
                line: i + 1,
                reason: e.to_string(),
            }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Identity,
    /// Targeted single-element error.
    Error(Element),
    /// Single-element error of a randomly chosen type.
    Random(Element),
    ModelDraft,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Identity => "identity",
            Provenance::Error(Element::Aspect) => "aspect-error",
            Provenance::Error(Element::Category) => "category-error",
            Provenance::Error(Element::Opinion) => "opinion-error",
            Provenance::Error(Element::Sentiment) => "sentiment-error",
            Provenance::Random(_) => "random-error",
            Provenance::ModelDraft => "model-draft",
        }
    }

    /// The perturbed element, for synthesized error drafts.
    pub fn element(self) -> Option<Element> {
        match self {
            Provenance::Error(e) | Provenance::Random(e) => Some(e),
            Provenance::Identity | Provenance::ModelDraft => None,
        }
    }

    fn parse(name: &str, element: Option<Element>) -> Result<Self, String> {
        Ok(match (name, element) {
            ("identity", None) => Provenance::Identity,
            ("model-draft", None) => Provenance::ModelDraft,
            ("random-error", Some(e)) => Provenance::Random(e),
            ("aspect-error", _) => Provenance::Error(Element::Aspect),
            ("category-error", _) => Provenance::Error(Element::Category),
            ("opinion-error", _) => Provenance::Error(Element::Opinion),
            ("sentiment-error", _) => Provenance::Error(Element::Sentiment),
            _ => return Err(format!("bad provenance {name:?} / element {element:?}")),
        })
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Random(e) => write!(f, "random-error({e})"),
            p => f.write_str(p.name()),
        }
    }
}

/// One corrector training example.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorExample {
    pub sentence: String,
    pub draft: Vec<Quad>,
    pub gold: Vec<Quad>,
    pub weight: f64,
    pub provenance: Provenance,
}

impl CorrectorExample {
    pub fn check(&self) -> Result<(), CorpusError> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(CorpusError::InvalidExample(format!(
                "weight {} is not positive",
                self.weight
            )));
        }
        if self.provenance == Provenance::Identity
            && (self.draft.len() != self.gold.len()
                || !self
                    .draft
                    .iter()
                    .zip(&self.gold)
                    .all(|(d, g)| quad_equal(d, g)))
        {
            return Err(CorpusError::InvalidExample(
                "identity example whose draft differs from gold".into(),
            ));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.provenance == Provenance::Identity
    }
}

/// Sentence, draft and gold as carried by one interchange line.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorLine {
    pub sentence: String,
    pub draft: Vec<Quad>,
    pub gold: Vec<Quad>,
}

impl CorrectorLine {
    pub fn with_meta(self, meta: &SidecarEntry) -> Result<CorrectorExample, CorpusError> {
        let ex = CorrectorExample {
            sentence: self.sentence,
            draft: self.draft,
            gold: self.gold,
            weight: meta.weight,
            provenance: meta.provenance()?,
        };
        ex.check()?;
        Ok(ex)
    }
}

pub fn write_corrector_line(
    ex: &CorrectorExample,
    taxonomy: &Taxonomy,
) -> Result<String, CorpusError> {
    if let Some(sep) = find_reserved(&ex.sentence) {
        return Err(CorpusError::ReservedInSentence(sep));
    }
    let draft = serialize_quads(&ex.draft, taxonomy)?;
    let gold = serialize_quads(&ex.gold, taxonomy)?;
    Ok(format!(
        "{} {SENTENCE_SEP} {draft} {TARGET_SEP} {gold}",
        ex.sentence
    ))
}

fn strict_parse(
    text: &str,
    side: &'static str,
    taxonomy: &Taxonomy,
) -> Result<Vec<Quad>, CorpusError> {
    let (quads, diag) = parse_quads(text, taxonomy);
    if let Some((seg, reason)) = diag.rejections().next() {
        return Err(CorpusError::Unparseable {
            side,
            detail: format!(
                "segment {} {:?}: {}",
                seg.index,
                seg.raw.trim(),
                reason.as_str()
            ),
        });
    }
    Ok(quads)
}

/// Reads an interchange line. `####` is accepted with or without
/// surrounding spaces.
pub fn read_corrector_line(line: &str, taxonomy: &Taxonomy) -> Result<CorrectorLine, CorpusError> {
    let (sentence, rest) = line
        .split_once(SENTENCE_SEP)
        .ok_or(CorpusError::MissingSentenceSep)?;
    let (draft, gold) = rest
        .split_once(TARGET_SEP)
        .ok_or(CorpusError::MissingTargetSep)?;
    let sentence = sentence.trim();
    if sentence.is_empty() {
        return Err(CorpusError::EmptySentence);
    }
    Ok(CorrectorLine {
        sentence: sentence.to_owned(),
        draft: strict_parse(draft, "draft", taxonomy)?,
        gold: strict_parse(gold, "gold", taxonomy)?,
    })
}

/// Weight and provenance of one interchange line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarEntry {
    /// 1-based line number in the interchange file.
    pub line: usize,
    pub weight: f64,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<Element>,
}

impl SidecarEntry {
    pub fn new(line: usize, ex: &CorrectorExample) -> Self {
        Self {
            line,
            weight: ex.weight,
            provenance: ex.provenance.name().to_owned(),
            element: match ex.provenance {
                Provenance::Random(e) => Some(e),
                _ => None,
            },
        }
    }

    pub fn provenance(&self) -> Result<Provenance, CorpusError> {
        Provenance::parse(&self.provenance, self.element).map_err(CorpusError::Record)
    }
}

/// Canonical JSON record of a corrector example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorRecord {
    pub sentence: String,
    pub draft: Vec<Quad>,
    pub gold: Vec<Quad>,
    pub weight: f64,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<Element>,
}

impl From<&CorrectorExample> for CorrectorRecord {
    fn from(ex: &CorrectorExample) -> Self {
        let meta = SidecarEntry::new(0, ex);
        Self {
            sentence: ex.sentence.clone(),
            draft: ex.draft.clone(),
            gold: ex.gold.clone(),
            weight: ex.weight,
            provenance: meta.provenance,
            element: meta.element,
        }
    }
}

impl TryFrom<CorrectorRecord> for CorrectorExample {
    type Error = CorpusError;
    fn try_from(r: CorrectorRecord) -> Result<Self, CorpusError> {
        let ex = CorrectorExample {
            provenance: Provenance::parse(&r.provenance, r.element).map_err(CorpusError::Record)?,
            sentence: r.sentence,
            draft: r.draft,
            gold: r.gold,
            weight: r.weight,
        };
        ex.check()?;
        Ok(ex)
    }
}

pub fn corrector_record_line(ex: &CorrectorExample) -> String {
    serde_json::to_string(&CorrectorRecord::from(ex)).expect("records serialize")
}

pub fn parse_corrector_record(line: &str) -> Result<CorrectorExample, CorpusError> {
    let r: CorrectorRecord =
        serde_json::from_str(line).map_err(|e| CorpusError::Record(e.to_string()))?;
    r.try_into()
}

pub fn sentence_record_line(ex: &AnnotatedSentence) -> String {
    serde_json::to_string(ex).expect("records serialize")
}

pub fn parse_sentence_record(
    line: &str,
    taxonomy: &Taxonomy,
) -> Result<AnnotatedSentence, CorpusError> {
    let ex: AnnotatedSentence =
        serde_json::from_str(line).map_err(|e| CorpusError::Record(e.to_string()))?;
    if ex.text.trim().is_empty() {
        return Err(CorpusError::EmptySentence);
    }
    if let Some(sep) = find_reserved(&ex.text) {
        return Err(CorpusError::ReservedInSentence(sep));
    }
    for q in &ex.quads {
        let v = crate::quad::validate_quad(q, taxonomy);
        if !v.is_empty() {
            return Err(CorpusError::InvalidQuad(v));
        }
    }
    Ok(ex)
}

/// Interchange lines plus their sidecar, both newline-terminated.
pub fn write_interchange(
    examples: &[CorrectorExample],
    taxonomy: &Taxonomy,
) -> Result<(String, String), CorpusError> {
    let mut lines = String::new();
    let mut sidecar = String::new();
    for (i, ex) in examples.iter().enumerate() {
        lines.push_str(&write_corrector_line(ex, taxonomy)?);
        lines.push('\n');
        sidecar.push_str(
            &serde_json::to_string(&SidecarEntry::new(i + 1, ex)).expect("sidecar serializes"),
        );
        sidecar.push('\n');
    }
    Ok((lines, sidecar))
}

/// Rebuilds examples from interchange text and its sidecar.
pub fn read_interchange(
    lines: &str,
    sidecar: &str,
    taxonomy: &Taxonomy,
) -> Result<Vec<CorrectorExample>, (usize, CorpusError)> {
    let mut meta: BTreeMap<usize, SidecarEntry> = BTreeMap::new();
    for (i, l) in sidecar
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let e: SidecarEntry =
            serde_json::from_str(l).map_err(|e| (i + 1, CorpusError::Record(e.to_string())))?;
        meta.insert(e.line, e);
    }
    let mut out = Vec::new();
    for (i, l) in lines.lines().enumerate() {
        let line_no = i + 1;
        let parsed = read_corrector_line(l, taxonomy).map_err(|e| (line_no, e))?;
        let m = meta
            .get(&line_no)
            .ok_or_else(|| (line_no, CorpusError::Record("no sidecar entry".into())))?;
        out.push(parsed.with_meta(m).map_err(|e| (line_no, e))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub name: String,
    pub examples: usize,
    pub quads: usize,
    pub implicit_aspects: usize,
    pub categories: BTreeMap<String, usize>,
}

pub fn dataset_stats(corpus: &[AnnotatedSentence], name: &str) -> SplitStats {
    let mut stats = SplitStats {
        name: name.to_owned(),
        examples: corpus.len(),
        ..Default::default()
    };
    for q in corpus.iter().flat_map(|s| &s.quads) {
        stats.quads += 1;
        if q.aspect.is_implicit() {
            stats.implicit_aspects += 1;
        }
        *stats.categories.entry(q.category.clone()).or_default() += 1;
    }
    stats
}

impl fmt::Display for SplitStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} examples, {} quads, {} implicit aspects",
            self.name, self.examples, self.quads, self.implicit_aspects
        )?;
        for (c, n) in &self.categories {
            writeln!(f, "  {c:<26} {n}")?;
        }
        Ok(())
    }
}

/// Which side of a paired line to read when a file holds both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Prediction,
    Gold,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadSets {
    pub sets: Vec<Vec<Quad>>,
    /// Lenient-parse diagnostics for template lines with rejected segments.
    pub warnings: Vec<(usize, ParseDiagnostics)>,
}

/// Reads one quad set per line, detecting the line format:
/// canonical JSON records, corrector interchange lines, legacy gold lines,
/// or bare linearized templates (which may be empty for an empty set).
///
/// For lines that pair a draft with gold, `role` picks the side.
pub fn read_quad_sets(
    text: &str,
    role: Role,
    opts: &ImportOptions,
    taxonomy: &Taxonomy,
) -> Result<QuadSets, (usize, CorpusError)> {
    let mut out = QuadSets::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim_start();
        let set = if t.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(t)
                .map_err(|e| (line_no, CorpusError::Record(e.to_string())))?;
            let key = if v.get("quads").is_some() {
                "quads"
            } else if role == Role::Prediction {
                "draft"
            } else {
                "gold"
            };
            let quads = v.get(key).cloned().ok_or_else(|| {
                (
                    line_no,
                    CorpusError::Record(format!("record has no {key:?} field")),
                )
            })?;
            serde_json::from_value(quads)
                .map_err(|e| (line_no, CorpusError::Record(e.to_string())))?
        } else if t.contains(SENTENCE_SEP) {
            let l = read_corrector_line(t, taxonomy).map_err(|e| (line_no, e))?;
            match role {
                Role::Prediction => l.draft,
                Role::Gold => l.gold,
            }
        } else if t.contains(TARGET_SEP) {
            import_legacy_line(t, opts, taxonomy)
                .map_err(|e| (line_no, e))?
                .quads
        } else {
            let (quads, diag) = parse_quads(t, taxonomy);
            if !diag.is_clean() {
                out.warnings.push((line_no, diag));
            }
            quads
        };
        out.sets.push(set);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SENT: &str = "The sushi was fresh but overpriced.";
    const LINE6_QUADS: &str = "food quality is great because sushi is fresh [SSEP] food prices is bad because sushi is overpriced";

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
    fn legacy_examples() {
        let t = Taxonomy::restaurant();
        let o = ImportOptions::default();
        let s = import_legacy_line(
            "the sushi was fresh####[['sushi', 'food quality', 'positive', 'fresh']]",
            &o,
            &t,
        )
        .unwrap();
        assert_eq!(s.text, "the sushi was fresh");
        assert_eq!(
            s.quads,
            vec![Quad::new(
                Aspect::term("sushi"),
                "food quality",
                "fresh",
                Sentiment::Positive
            )]
        );

        let s = import_legacy_line(
            "great spot####[['NULL', 'restaurant general', 'positive', 'great']]",
            &o,
            &t,
        )
        .unwrap();
        assert_eq!(s.quads[0].aspect, Aspect::Implicit);

        assert_eq!(
            import_legacy_line("no separator here", &o, &t),
            Err(CorpusError::MissingTargetSep)
        );
    }

    #[test]
    fn legacy_rejections() {
        let t = Taxonomy::restaurant();
        let o = ImportOptions::default();
        let r = |l: &str| import_legacy_line(l, &o, &t).unwrap_err();
        assert!(matches!(
            r("a####[['x', 'food quality', 'positive']]"),
            CorpusError::WrongArity { found: 3, .. }
        ));
        assert!(matches!(
            r("a####[['x', 'food quality', 'good', 'y']]"),
            CorpusError::UnknownSentiment(_)
        ));
        assert!(matches!(
            r("a####[['x', 'food flavor', 'positive', 'y']]"),
            CorpusError::UnknownCategory(_)
        ));
        assert!(matches!(
            r("a####[['x', 'food quality', 'positive', 'y']"),
            CorpusError::Malformed(_)
        ));
        assert!(matches!(
            r("a####[['x', 'food quality', 'positive', 'y]]"),
            CorpusError::Malformed(_)
        ));
        assert!(matches!(
            r("a####[['x', 'food quality', 'positive', '']]"),
            CorpusError::InvalidQuad(_)
        ));
        assert!(matches!(r("####[]"), CorpusError::EmptySentence));
    }

    #[test]
    fn legacy_quoting_and_order() {
        let t = Taxonomy::restaurant();
        let o = ImportOptions {
            order: "acos".parse().unwrap(),
            lowercase: true,
        };
        let s = import_legacy_line(
            r#"The Chef's Table####[["chef's table", 'food quality', 'it\'s great', 'positive'], []]"#,
            &ImportOptions {
                order: o.order,
                lowercase: false,
            },
            &t,
        );
        assert!(matches!(
            s,
            Err(CorpusError::WrongArity { index: 1, found: 0 })
        ));

        let s = import_legacy_line(
            r#"The Chef's Table####[["Chef's table", 'food quality', 'it\'s great', 'positive']]"#,
            &o,
            &t,
        )
        .unwrap();
        assert_eq!(s.text, "the chef's table");
        assert_eq!(s.quads[0].aspect, Aspect::term("chef's table"));
        assert_eq!(s.quads[0].opinion, "it's great");
        let back = export_legacy_line(&s, o.order);
        assert_eq!(
            back,
            r#"the chef's table####[["chef's table", 'food quality', "it's great", 'positive']]"#
        );
        assert_eq!(import_legacy_line(&back, &o, &t).unwrap(), s);
    }

    #[test]
    fn element_order_parsing() {
        assert_eq!(
            "acso".parse::<ElementOrder>().unwrap(),
            ElementOrder::default()
        );
        assert_eq!(
            "aspect, category, sentiment, opinion"
                .parse::<ElementOrder>()
                .unwrap(),
            ElementOrder::default()
        );
        assert!("acs".parse::<ElementOrder>().is_err());
        assert!("aaco".parse::<ElementOrder>().is_err());
        assert_eq!(ElementOrder::default().to_string(), "acso");
    }

    #[test]
    fn import_file_is_line_lenient() {
        let t = Taxonomy::restaurant();
        let mut text = String::new();
        for i in 0..9 {
            text.push_str(&format!(
                "s{i}####[['x', 'food quality', 'positive', 'y']]\n"
            ));
        }
        text.insert_str(0, "garbage line\n\n");
        let r = import_legacy(&text, &ImportOptions::default(), &t);
        assert_eq!(r.sentences.len(), 9);
        assert_eq!(
            r.rejects,
            vec![LineReject {
                line: 1,
                reason: "missing `####` separator".into()
            }]
        );
    }

    #[test]
    fn corrector_line_identity_matches_reference() {
        let t = Taxonomy::restaurant();
        let ex = CorrectorExample {
            sentence: SENT.into(),
            draft: sushi_quads(),
            gold: sushi_quads(),
            weight: 1.0,
            provenance: Provenance::Identity,
        };
        let line = write_corrector_line(&ex, &t).unwrap();
        assert_eq!(
            line,
            format!("{SENT} [SENTSEP] {LINE6_QUADS} #### {LINE6_QUADS}")
        );
        let back = read_corrector_line(&line, &t).unwrap();
        assert_eq!(
            (back.sentence.as_str(), &back.draft, &back.gold),
            (SENT, &ex.draft, &ex.gold)
        );
    }

    #[test]
    fn corrector_line_category_error_matches_reference() {
        let t = Taxonomy::restaurant();
        let mut draft = sushi_quads();
        draft[0].category = "food general".into();
        let ex = CorrectorExample {
            sentence: SENT.into(),
            draft,
            gold: sushi_quads(),
            weight: 1.0,
            provenance: Provenance::Error(Element::Category),
        };
        assert_eq!(
            write_corrector_line(&ex, &t).unwrap(),
            "The sushi was fresh but overpriced. [SENTSEP] food general is great because sushi is fresh [SSEP] food prices is bad because sushi is overpriced #### food quality is great because sushi is fresh [SSEP] food prices is bad because sushi is overpriced"
        );
    }

    #[test]
    fn corrector_line_rejections() {
        let t = Taxonomy::restaurant();
        assert_eq!(
            read_corrector_line(&format!("{SENT} [SENTSEP] {LINE6_QUADS}"), &t),
            Err(CorpusError::MissingTargetSep)
        );
        assert_eq!(
            read_corrector_line(&format!("{SENT} {LINE6_QUADS} #### x"), &t),
            Err(CorpusError::MissingSentenceSep)
        );
        let tight = format!("{SENT} [SENTSEP] {LINE6_QUADS}####{LINE6_QUADS}");
        assert_eq!(read_corrector_line(&tight, &t).unwrap().gold, sushi_quads());
        assert!(matches!(
            read_corrector_line(&format!("{SENT} [SENTSEP] junk #### {LINE6_QUADS}"), &t),
            Err(CorpusError::Unparseable { side: "draft", .. })
        ));
    }

    #[test]
    fn example_invariants() {
        let mut ex = CorrectorExample {
            sentence: SENT.into(),
            draft: sushi_quads(),
            gold: sushi_quads(),
            weight: 1.0,
            provenance: Provenance::Identity,
        };
        assert!(ex.check().is_ok());
        ex.draft.pop();
        assert!(ex.check().is_err());
        ex.provenance = Provenance::Random(Element::Opinion);
        assert!(ex.check().is_ok());
        ex.weight = 0.0;
        assert!(ex.check().is_err());
    }

    #[test]
    fn interchange_and_records_round_trip_with_sidecar() {
        let t = Taxonomy::restaurant();
        let mut draft = sushi_quads();
        draft[1].opinion = "fresh".into();
        let examples = vec![
            CorrectorExample {
                sentence: SENT.into(),
                draft,
                gold: sushi_quads(),
                weight: 0.5,
                provenance: Provenance::Random(Element::Opinion),
            },
            CorrectorExample {
                sentence: SENT.into(),
                draft: sushi_quads(),
                gold: sushi_quads(),
                weight: 2.0,
                provenance: Provenance::Identity,
            },
        ];
        let (lines, sidecar) = write_interchange(&examples, &t).unwrap();
        assert_eq!(
            sidecar.lines().next().unwrap(),
            r#"{"line":1,"weight":0.5,"provenance":"random-error","element":"opinion"}"#
        );
        assert_eq!(read_interchange(&lines, &sidecar, &t).unwrap(), examples);

        for ex in &examples {
            assert_eq!(
                &parse_corrector_record(&corrector_record_line(ex)).unwrap(),
                ex
            );
        }
    }

    #[test]
    fn quad_sets_detect_formats() {
        let t = Taxonomy::restaurant();
        let o = ImportOptions::default();
        let mut draft = sushi_quads();
        draft[0].sentiment = Sentiment::Neutral;
        let ex = CorrectorExample {
            sentence: SENT.into(),
            draft: draft.clone(),
            gold: sushi_quads(),
            weight: 1.0,
            provenance: Provenance::Error(Element::Sentiment),
        };
        let text = [
            write_corrector_line(&ex, &t).unwrap(),
            corrector_record_line(&ex),
            sentence_record_line(&AnnotatedSentence::new(SENT, sushi_quads())),
            export_legacy_line(&AnnotatedSentence::new(SENT, sushi_quads()), o.order),
            LINE6_QUADS.to_owned(),
            String::new(),
            "food quality is great because sushi is fresh [SSEP] nonsense".to_owned(),
        ]
        .join("\n");
        let preds = read_quad_sets(&text, Role::Prediction, &o, &t).unwrap();
        let golds = read_quad_sets(&text, Role::Gold, &o, &t).unwrap();
        assert_eq!(preds.sets.len(), 7);
        assert_eq!(preds.sets[0], draft);
        assert_eq!(preds.sets[1], draft);
        assert_eq!(golds.sets[0], sushi_quads());
        assert_eq!(golds.sets[1], sushi_quads());
        for i in 2..5 {
            assert_eq!(preds.sets[i], sushi_quads());
        }
        assert!(preds.sets[5].is_empty());
        assert_eq!(preds.sets[6].len(), 1);
        assert_eq!(preds.warnings.len(), 1);
        assert_eq!(preds.warnings[0].0, 7);
    }

    #[test]
    fn stats_counts() {
        let empty = dataset_stats(&[], "empty");
        assert_eq!(
            (empty.examples, empty.quads, empty.implicit_aspects),
            (0, 0, 0)
        );
        assert!(empty.categories.is_empty());

        let corpus = vec![
            AnnotatedSentence::new(SENT, sushi_quads()),
            AnnotatedSentence::new(
                "great spot",
                vec![Quad::new(
                    Aspect::Implicit,
                    "restaurant general",
                    "great",
                    Sentiment::Positive,
                )],
            ),
        ];
        let s = dataset_stats(&corpus, "train");
        assert_eq!((s.examples, s.quads, s.implicit_aspects), (2, 3, 1));
        assert_eq!(s.categories["food prices"], 1);
    }

    fn term() -> impl Strategy<Value = String> {
        proptest::collection::vec("[a-z']{1,6}", 1..4).prop_map(|w| w.join(" "))
    }

    fn quad() -> impl Strategy<Value = Quad> {
        let t = Taxonomy::restaurant();
        (proptest::option::of(term()), 0..t.len(), term(), 0..3usize).prop_filter_map(
            "aspect 'it' or ' is ' in aspect",
            move |(a, c, o, s)| {
                if a.as_deref()
                    .is_some_and(|a| a == "it" || a.split(' ').any(|w| w == "is"))
                {
                    return None;
                }
                Some(Quad::new(
                    a.map_or(Aspect::Implicit, Aspect::Term),
                    t.labels()[c].clone(),
                    o,
                    Sentiment::ALL[s],
                ))
            },
        )
    }

    proptest! {
        #[test]
        fn corrector_line_round_trip(
            sentence in "[A-Za-z][A-Za-z .,']{0,30}",
            draft in proptest::collection::vec(quad(), 0..4),
            gold in proptest::collection::vec(quad(), 0..4),
        ) {
            let t = Taxonomy::restaurant();
            let sentence = sentence.trim().to_owned();
            prop_assume!(!sentence.is_empty());
            let ex = CorrectorExample { sentence, draft, gold, weight: 1.0, provenance: Provenance::ModelDraft };
            let line = write_corrector_line(&ex, &t).unwrap();
            let back = read_corrector_line(&line, &t).unwrap();
            prop_assert_eq!(back.sentence, ex.sentence);
            prop_assert_eq!(back.draft, ex.draft);
            prop_assert_eq!(back.gold, ex.gold);
        }

        #[test]
        fn legacy_export_reimport(quads in proptest::collection::vec(quad(), 0..5), text in "[a-z][a-z \"']{0,20}") {
            let t = Taxonomy::restaurant();
            let o = ImportOptions::default();
            let s = AnnotatedSentence::new(text.trim(), quads);
            let back = import_legacy_line(&export_legacy_line(&s, o.order), &o, &t).unwrap();
            prop_assert_eq!(back.quads.len(), s.quads.len());
            for (a, b) in back.quads.iter().zip(&s.quads) {
                prop_assert!(quad_equal(a, b));
            }
        }
    }
}
