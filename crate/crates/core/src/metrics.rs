//! Per-utterance WER, CER, and substitution-weighted WER, plus corpus
//! aggregation and metric correlation.
//!
//! The substitution-weighted rate replaces the integer substitution count
//! of plain WER with a per-segment, CER-weighted count:
//!
//! ```text
//! SW-WER = (S + I + D) / (N_sub + C + D)
//! S      = sum over segments of n_i * segment_cer_i
//! N_sub  = sum over segments of n_i
//! ```
//!
//! so a near-miss substitution costs a fraction of a word while a fully
//! wrong word still costs 1. The denominator equals the reference word
//! count, which keeps SW-WER bounded by WER.

use serde::{Deserialize, Serialize};

use crate::align::{self, AlignmentCounts, SubstitutionSegment};
use crate::corpus::{HypothesisSet, UtteranceRecord};
use crate::error::{Error, Result};
use crate::textnorm::{self, NormalizationConfig};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Per-utterance scores with the full count breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub utterance_id: String,
    pub system_name: String,
    /// Fractions, not percentages.
    pub wer: f64,
    pub cer: f64,
    pub sw_wer: f64,
    pub counts: AlignmentCounts,
    /// CER-weighted substitution mass (the S of the weighted numerator).
    pub s_weighted: f64,
    /// Reference words across all substitution segments.
    pub n_sub: usize,
    pub seg_count: usize,
    pub segments: Vec<SubstitutionSegment>,
    pub ref_words: usize,
    pub hyp_words: usize,
    pub ref_chars: usize,
    pub char_edits: usize,
    /// Normalization profile the texts were scored under.
    pub norm_profile: String,
}

/// Word error rate over normalized token sequences.
pub fn compute_wer(ref_words: &[&str], hyp_words: &[&str]) -> Result<(f64, AlignmentCounts)> {
    if ref_words.is_empty() {
        if hyp_words.is_empty() {
            return Ok((0.0, AlignmentCounts::default()));
        }
        return Err(Error::EmptyReference);
    }
    let path = align::levenshtein_align(ref_words, hyp_words);
    let counts = align::summarize(&path);
    Ok((counts.edits() as f64 / ref_words.len() as f64, counts))
}

/// Character error rate over already-normalized texts. Reported unclamped;
/// spaces and retained ZWNJ count as characters.
pub fn compute_cer(ref_text: &str, hyp_text: &str) -> Result<f64> {
    if ref_text.is_empty() {
        if hyp_text.is_empty() {
            return Ok(0.0);
        }
        return Err(Error::EmptyReference);
    }
    let ref_chars = textnorm::char_sequence(ref_text);
    let hyp_chars = textnorm::char_sequence(hyp_text);
    Ok(align::distance(&ref_chars, &hyp_chars) as f64 / ref_chars.len() as f64)
}

/// Detail returned by [`compute_sw_wer`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwWerDetail {
    pub value: f64,
    pub s_weighted: f64,
    pub n_sub: usize,
    pub seg_count: usize,
    pub segments: Vec<SubstitutionSegment>,
    pub counts: AlignmentCounts,
}

/// Substitution-weighted WER over normalized token sequences.
pub fn compute_sw_wer(ref_words: &[&str], hyp_words: &[&str]) -> Result<SwWerDetail> {
    if ref_words.is_empty() {
        if hyp_words.is_empty() {
            return Ok(SwWerDetail {
                value: 0.0,
                s_weighted: 0.0,
                n_sub: 0,
                seg_count: 0,
                segments: Vec::new(),
                counts: AlignmentCounts::default(),
            });
        }
        return Err(Error::EmptyReference);
    }
    let path = align::levenshtein_align(ref_words, hyp_words);
    let counts = align::summarize(&path);
    let segments = align::substitution_segments(&path, ref_words, hyp_words);
    Ok(sw_wer_from_parts(counts, segments))
}

fn sw_wer_from_parts(counts: AlignmentCounts, segments: Vec<SubstitutionSegment>) -> SwWerDetail {
    let s_weighted: f64 = segments.iter().map(|s| s.n_words as f64 * s.segment_cer).sum();
    let n_sub: usize = segments.iter().map(|s| s.n_words).sum();
    let numerator = s_weighted + (counts.insertions + counts.deletions) as f64;
    // Equals the reference word count: N_sub + C + D.
    let denominator = (n_sub + counts.correct + counts.deletions) as f64;
    SwWerDetail {
        value: if denominator == 0.0 { 0.0 } else { numerator / denominator },
        s_weighted,
        n_sub,
        seg_count: segments.len(),
        segments,
        counts,
    }
}

/// Scores one utterance: one normalization pass, one word alignment, all
/// three metrics.
pub fn score_utterance(
    utterance_id: &str,
    system_name: &str,
    ref_raw: &str,
    hyp_raw: &str,
    config: &NormalizationConfig,
) -> Result<UtteranceScore> {
    let ref_text = textnorm::normalize_text(ref_raw, config);
    let hyp_text = textnorm::normalize_text(hyp_raw, config);
    if ref_text.is_empty() && !hyp_text.is_empty() {
        return Err(Error::EmptyReference);
    }
    let ref_words = textnorm::tokenize_words(&ref_text);
    let hyp_words = textnorm::tokenize_words(&hyp_text);

    let path = align::levenshtein_align(&ref_words, &hyp_words);
    let counts = align::summarize(&path);
    let segments = align::substitution_segments(&path, &ref_words, &hyp_words);
    let detail = sw_wer_from_parts(counts, segments);

    let ref_chars = textnorm::char_sequence(&ref_text).len();
    let char_edits = align::char_distance(&ref_text, &hyp_text);
    let wer = if ref_words.is_empty() {
        0.0
    } else {
        counts.edits() as f64 / ref_words.len() as f64
    };
    let cer = if ref_chars == 0 { 0.0 } else { char_edits as f64 / ref_chars as f64 };

    Ok(UtteranceScore {
        utterance_id: utterance_id.to_string(),
        system_name: system_name.to_string(),
        wer,
        cer,
        sw_wer: detail.value,
        counts,
        s_weighted: detail.s_weighted,
        n_sub: detail.n_sub,
        seg_count: detail.seg_count,
        segments: detail.segments,
        ref_words: ref_words.len(),
        hyp_words: hyp_words.len(),
        ref_chars,
        char_edits,
        norm_profile: config.profile.clone(),
    })
}

/// Scores every manifest record that has a hypothesis entry. Results are
/// sorted by utterance id so output is identical regardless of how the
/// work was scheduled.
pub fn score_corpus(
    records: &[UtteranceRecord],
    hypotheses: &HypothesisSet,
    config: &NormalizationConfig,
) -> Result<Vec<UtteranceScore>> {
    let pairs: Vec<(&UtteranceRecord, &str)> = records
        .iter()
        .filter_map(|r| hypotheses.entries.get(&r.id).map(|h| (r, h.as_str())))
        .collect();

    #[cfg(feature = "parallel")]
    let scored: Result<Vec<UtteranceScore>> = pairs
        .par_iter()
        .map(|(r, h)| score_utterance(&r.id, &hypotheses.system_name, &r.text, h, config))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let scored: Result<Vec<UtteranceScore>> = pairs
        .iter()
        .map(|(r, h)| score_utterance(&r.id, &hypotheses.system_name, &r.text, h, config))
        .collect();

    let mut scores = scored?;
    scores.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    Ok(scores)
}

/// Sequential fallback, always available; the parallel path must produce
/// byte-identical results.
pub fn score_corpus_sequential(
    records: &[UtteranceRecord],
    hypotheses: &HypothesisSet,
    config: &NormalizationConfig,
) -> Result<Vec<UtteranceScore>> {
    let mut scores = records
        .iter()
        .filter_map(|r| hypotheses.entries.get(&r.id).map(|h| (r, h.as_str())))
        .map(|(r, h)| score_utterance(&r.id, &hypotheses.system_name, &r.text, h, config))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    /// Mean of per-utterance fractions (the default protocol).
    Macro,
    /// Pooled counts across utterances.
    Micro,
}

impl std::str::FromStr for AggregationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(AggregationMode::Macro),
            "micro" => Ok(AggregationMode::Micro),
            other => Err(Error::Config(format!("unknown aggregation mode '{other}'"))),
        }
    }
}

/// Corpus-level summary for one system. All values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub system_name: String,
    pub utterance_count: usize,
    pub mode: AggregationMode,
    pub macro_wer: f64,
    pub macro_cer: f64,
    pub macro_sw_wer: f64,
    pub micro_wer: f64,
    pub micro_cer: f64,
    pub micro_sw_wer: f64,
}

impl CorpusSummary {
    /// The (cer, wer, sw_wer) triple selected by the recorded mode.
    pub fn headline(&self) -> (f64, f64, f64) {
        match self.mode {
            AggregationMode::Macro => (self.macro_cer, self.macro_wer, self.macro_sw_wer),
            AggregationMode::Micro => (self.micro_cer, self.micro_wer, self.micro_sw_wer),
        }
    }
}

/// Aggregates per-utterance scores for a single system. Scores are summed
/// in sorted utterance-id order so the result is schedule-independent.
pub fn aggregate_corpus(scores: &[UtteranceScore], mode: AggregationMode) -> Result<CorpusSummary> {
    if scores.is_empty() {
        return Err(Error::EmptyScoreSet);
    }
    let system_name = scores[0].system_name.clone();
    if scores.iter().any(|s| s.system_name != system_name) {
        return Err(Error::Config(
            "aggregate_corpus requires scores from a single system".to_string(),
        ));
    }
    let mut order: Vec<&UtteranceScore> = scores.iter().collect();
    order.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));

    let n = order.len() as f64;
    let mut sum_wer = 0.0;
    let mut sum_cer = 0.0;
    let mut sum_sw = 0.0;
    let mut word_edits = 0usize;
    let mut ref_words = 0usize;
    let mut char_edits = 0usize;
    let mut ref_chars = 0usize;
    let mut sw_num = 0.0;
    let mut sw_den = 0usize;
    for s in &order {
        sum_wer += s.wer;
        sum_cer += s.cer;
        sum_sw += s.sw_wer;
        word_edits += s.counts.edits();
        ref_words += s.ref_words;
        char_edits += s.char_edits;
        ref_chars += s.ref_chars;
        sw_num += s.s_weighted + (s.counts.insertions + s.counts.deletions) as f64;
        sw_den += s.n_sub + s.counts.correct + s.counts.deletions;
    }
    let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    Ok(CorpusSummary {
        system_name,
        utterance_count: order.len(),
        mode,
        macro_wer: sum_wer / n * 100.0,
        macro_cer: sum_cer / n * 100.0,
        macro_sw_wer: sum_sw / n * 100.0,
        micro_wer: ratio(word_edits as f64, ref_words as f64) * 100.0,
        micro_cer: ratio(char_edits as f64, ref_chars as f64) * 100.0,
        micro_sw_wer: ratio(sw_num, sw_den as f64) * 100.0,
    })
}

/// One scatter point per utterance, for external plotting.
#[derive(Debug, Clone, Serialize)]
pub struct ScatterRow {
    pub id: String,
    pub wer: f64,
    pub cer: f64,
    pub sw_wer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub r_wer_sw_wer: f64,
    pub r_cer_sw_wer: f64,
    pub r_wer_cer: f64,
    pub scatter: Vec<ScatterRow>,
}

fn pearson(xs: &[f64], ys: &[f64], label: &'static str) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateColumn(label));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Pairwise Pearson correlations between the three metrics, plus the raw
/// scatter rows.
pub fn metric_correlation(scores: &[UtteranceScore]) -> Result<CorrelationReport> {
    if scores.len() < 2 {
        return Err(Error::EmptyScoreSet);
    }
    let mut order: Vec<&UtteranceScore> = scores.iter().collect();
    order.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    let wer: Vec<f64> = order.iter().map(|s| s.wer).collect();
    let cer: Vec<f64> = order.iter().map(|s| s.cer).collect();
    let sw: Vec<f64> = order.iter().map(|s| s.sw_wer).collect();
    Ok(CorrelationReport {
        r_wer_sw_wer: pearson(&wer, &sw, "wer/sw_wer")?,
        r_cer_sw_wer: pearson(&cer, &sw, "cer/sw_wer")?,
        r_wer_cer: pearson(&wer, &cer, "wer/cer")?,
        scatter: order
            .iter()
            .map(|s| ScatterRow {
                id: s.utterance_id.clone(),
                wer: s.wer,
                cer: s.cer,
                sw_wer: s.sw_wer,
            })
            .collect(),
    })
}
