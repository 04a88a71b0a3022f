//! Deterministic classification of alignment errors into linguistic
//! categories, plus hallucination flagging.
//!
//! Rules fire in a fixed order and the first match wins:
//!   1. word_boundary — the pair is identical once spaces and ZWNJ are
//!      removed (the compound-word boundary ambiguity).
//!   2. he_kasreh_suffix — exactly one word pair differs, by a single
//!      trailing ه on one side.
//!   3. formality_variant — the pair appears in a user-supplied
//!      formal/informal lexicon.
//!   4. near_match — segment CER at or below a threshold (default 0.3).
//!   5. full_substitution — everything else.
//!
//! Interpretation/paraphrase errors are deliberately not classified; no
//! rule can detect semantic equivalence without a semantic model.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::align::SubstitutionSegment;
use crate::error::{Error, Result};
use crate::metrics::UtteranceScore;
use crate::textnorm::ZWNJ;

pub const DEFAULT_NEAR_MATCH_THETA: f64 = 0.3;
pub const DEFAULT_HALLUC_INS_TAU: f64 = 0.5;
pub const DEFAULT_HALLUC_LEN_RHO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    WordBoundary,
    HeKasrehSuffix,
    FormalityVariant,
    NearMatch,
    FullSubstitution,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 5] = [
        ErrorCategory::WordBoundary,
        ErrorCategory::HeKasrehSuffix,
        ErrorCategory::FormalityVariant,
        ErrorCategory::NearMatch,
        ErrorCategory::FullSubstitution,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCategory::WordBoundary => "word_boundary",
            ErrorCategory::HeKasrehSuffix => "he_kasreh_suffix",
            ErrorCategory::FormalityVariant => "formality_variant",
            ErrorCategory::NearMatch => "near_match",
            ErrorCategory::FullSubstitution => "full_substitution",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorLabel {
    pub category: ErrorCategory,
    /// Short description of the triggering rule.
    pub evidence: String,
}

/// Informal/formal word-pair list. The file format is UTF-8 text, one
/// `informal<TAB>formal` pair per line, `#` comments.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pairs: HashSet<(String, String)>,
}

impl Lexicon {
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        let mut pairs = HashSet::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (informal, formal) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: "expected 'informal<TAB>formal'".to_string(),
            })?;
            pairs.insert((informal.trim().to_string(), formal.trim().to_string()));
        }
        Ok(Lexicon { pairs })
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Lexicon {
            pairs: iter.into_iter().collect(),
        }
    }

    /// Membership check in either orientation.
    pub fn contains_pair(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
            || self.pairs.contains(&(b.to_string(), a.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn strip_boundaries(text: &str) -> String {
    text.chars().filter(|&c| c != ' ' && c != ZWNJ).collect()
}

const HE: char = '\u{0647}';

/// True when `longer` is `shorter` plus one trailing ه.
fn is_trailing_he_extension(shorter: &str, longer: &str) -> bool {
    longer
        .strip_suffix(HE)
        .map(|stem| stem == shorter)
        .unwrap_or(false)
}

fn he_kasreh_applies(ref_str: &str, hyp_str: &str) -> bool {
    let ref_words: Vec<&str> = ref_str.split(' ').collect();
    let hyp_words: Vec<&str> = hyp_str.split(' ').collect();
    if ref_words.len() != hyp_words.len() {
        return false;
    }
    let differing: Vec<(&str, &str)> = ref_words
        .iter()
        .zip(&hyp_words)
        .filter(|(r, h)| r != h)
        .map(|(r, h)| (*r, *h))
        .collect();
    if differing.len() != 1 {
        return false;
    }
    let (r, h) = differing[0];
    is_trailing_he_extension(r, h) || is_trailing_he_extension(h, r)
}

/// Assigns exactly one category per substitution segment.
pub fn classify_segment(
    segment: &SubstitutionSegment,
    lexicon: Option<&Lexicon>,
    near_match_theta: f64,
) -> ErrorLabel {
    if strip_boundaries(&segment.ref_str) == strip_boundaries(&segment.hyp_str) {
        return ErrorLabel {
            category: ErrorCategory::WordBoundary,
            evidence: "identical after removing spaces and ZWNJ".to_string(),
        };
    }
    if he_kasreh_applies(&segment.ref_str, &segment.hyp_str) {
        return ErrorLabel {
            category: ErrorCategory::HeKasrehSuffix,
            evidence: "single word pair differing by one trailing ه".to_string(),
        };
    }
    if let Some(lexicon) = lexicon {
        if lexicon.contains_pair(&segment.ref_str, &segment.hyp_str) {
            return ErrorLabel {
                category: ErrorCategory::FormalityVariant,
                evidence: "pair listed in formality lexicon".to_string(),
            };
        }
    }
    if segment.segment_cer <= near_match_theta {
        return ErrorLabel {
            category: ErrorCategory::NearMatch,
            evidence: format!(
                "segment CER {:.4} <= theta {:.4}",
                segment.segment_cer, near_match_theta
            ),
        };
    }
    ErrorLabel {
        category: ErrorCategory::FullSubstitution,
        evidence: format!("segment CER {:.4} above theta", segment.segment_cer),
    }
}

/// Flags an utterance whose hypothesis looks fabricated: too many
/// insertions relative to the reference, or a hypothesis much longer than
/// the reference.
pub fn detect_hallucination(score: &UtteranceScore, ins_tau: f64, len_rho: f64) -> bool {
    if score.ref_words == 0 {
        return false;
    }
    let insertion_ratio = score.counts.insertions as f64 / score.ref_words as f64;
    let length_ratio = score.hyp_words as f64 / score.ref_words as f64;
    insertion_ratio > ins_tau || length_ratio > len_rho
}

/// Per-system distribution of error categories.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorProfile {
    pub system_name: String,
    pub segment_count: usize,
    pub counts: BTreeMap<String, usize>,
    pub proportions: BTreeMap<String, f64>,
    pub flagged_utterance_ids: Vec<String>,
}

/// Classifies every substitution segment of one system's scores and
/// collects hallucination flags.
pub fn error_profile(
    scores: &[UtteranceScore],
    lexicon: Option<&Lexicon>,
    near_match_theta: f64,
    halluc_ins_tau: f64,
    halluc_len_rho: f64,
) -> Result<ErrorProfile> {
    if scores.is_empty() {
        return Err(Error::EmptyScoreSet);
    }
    let system_name = scores[0].system_name.clone();
    let mut counts: BTreeMap<String, usize> = ErrorCategory::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), 0))
        .collect();
    let mut segment_count = 0usize;
    let mut flagged: BTreeSet<String> = BTreeSet::new();

    let mut order: Vec<&UtteranceScore> = scores.iter().collect();
    order.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    for score in order {
        for segment in &score.segments {
            let label = classify_segment(segment, lexicon, near_match_theta);
            *counts.get_mut(label.category.as_str()).unwrap() += 1;
            segment_count += 1;
        }
        if detect_hallucination(score, halluc_ins_tau, halluc_len_rho) {
            flagged.insert(score.utterance_id.clone());
        }
    }

    let proportions = counts
        .iter()
        .map(|(k, &v)| {
            let p = if segment_count == 0 { 0.0 } else { v as f64 / segment_count as f64 };
            (k.clone(), p)
        })
        .collect();

    Ok(ErrorProfile {
        system_name,
        segment_count,
        counts,
        proportions,
        flagged_utterance_ids: flagged.into_iter().collect(),
    })
}
