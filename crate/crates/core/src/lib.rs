//! Aspect sentiment quad prediction utilities: the quad model and its text
//! template, corpus formats, corrector training-data synthesis, exact-match
//! scoring, alignment-based error analysis and a noisy two-stage simulator.
//!
//! Scores are generic over [`Scalar`]; [`Report`] uses `f64` and
//! [`ExactReport`] uses exact rationals.

pub mod analysis;
pub mod assignment;
pub mod codec;
pub mod corpus;
pub mod eval;
pub mod quad;
pub mod scalar;
pub mod sim;
pub mod synth;

pub use analysis::{
    align_quads, classify_errors, migration_matrix, Alignment, ErrorClass, ErrorSummary,
    MigrationReport,
};
pub use codec::{parse_quads, serialize_quads, ParseDiagnostics};
pub use corpus::{CorrectorExample, Provenance};
pub use eval::{score_corpus, CountMode, Counts, EvalReport};
pub use quad::{AnnotatedSentence, Aspect, Element, Quad, Sentiment, Taxonomy};
pub use scalar::Scalar;
pub use sim::{ChannelConfig, SimReport};
pub use synth::SynthConfig;

pub type Report = EvalReport<f64>;
pub type ExactReport = EvalReport<num_rational::Ratio<i64>>;
pub type SimulationReport = SimReport<f64>;
