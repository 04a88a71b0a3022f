//! Corpus-scale ASR evaluation toolkit.
//!
//! Computes WER, CER, and a substitution-weighted WER over reference and
//! hypothesis transcripts aligned by unit-cost Levenshtein distance, with
//! Persian-aware text normalization, an executable error taxonomy, and
//! metadata-driven breakdown analytics. Scoring is pure per utterance and
//! runs data-parallel when the `parallel` feature (default) is enabled;
//! outputs are byte-identical regardless of worker count.

pub mod align;
pub mod breakdown;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod report;
pub mod taxonomy;
pub mod textnorm;

pub use error::{Error, Result};
