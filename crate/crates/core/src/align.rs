//! Unit-cost Levenshtein alignment over generic token sequences with a
//! deterministic backtrace.
//!
//! The backtrace rule is part of this crate's contract: walking from the
//! end of the matrix, prefer a diagonal match, then a deletion, then a
//! diagonal substitution, then an insertion whenever costs tie. Different
//! optimal paths change the substitution/insertion/deletion split, which
//! the substitution-weighted metric is sensitive to, so the rule is fixed
//! and every identical input yields a byte-identical op sequence.

use serde::{Deserialize, Serialize};

use crate::textnorm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Match,
    Substitute,
    Insert,
    Delete,
}

/// One alignment step. Match/substitute carry both indices, delete only
/// `ref_index`, insert only `hyp_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub ref_index: Option<usize>,
    pub hyp_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentPath {
    pub ops: Vec<EditOp>,
    pub ref_len: usize,
    pub hyp_len: usize,
}

impl AlignmentPath {
    /// Debug serialization: one JSON object per op, in path order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for op in &self.ops {
            out.push_str(&serde_json::to_string(op).expect("EditOp serializes"));
            out.push('\n');
        }
        out
    }
}

/// Error counts extracted from an alignment path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub correct: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl AlignmentCounts {
    /// S + I + D, the WER numerator and the Levenshtein distance.
    pub fn edits(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// A maximal run of consecutive substitution ops, with the segment texts
/// and their character error rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionSegment {
    /// Reference word indices covered, as [start, end).
    pub ref_start: usize,
    pub ref_end: usize,
    /// Hypothesis word indices covered, as [start, end).
    pub hyp_start: usize,
    pub hyp_end: usize,
    /// Number of reference words in the segment.
    pub n_words: usize,
    pub ref_str: String,
    pub hyp_str: String,
    /// Character error rate between the segment texts, clamped to [0, 1].
    pub segment_cer: f64,
}

/// Aligns two token sequences under unit costs and backtraces the
/// canonical optimal path.
pub fn levenshtein_align<T: PartialEq>(ref_tokens: &[T], hyp_tokens: &[T]) -> AlignmentPath {
    let n = ref_tokens.len();
    let m = hyp_tokens.len();
    let width = m + 1;
    let mut matrix = vec![0u32; (n + 1) * width];
    for i in 0..=n {
        matrix[i * width] = i as u32;
    }
    for j in 0..=m {
        matrix[j] = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub_cost = u32::from(ref_tokens[i - 1] != hyp_tokens[j - 1]);
            let diag = matrix[(i - 1) * width + (j - 1)] + sub_cost;
            let up = matrix[(i - 1) * width + j] + 1;
            let left = matrix[i * width + (j - 1)] + 1;
            matrix[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let mut i = n;
    let mut j = m;
    while i > 0 || j > 0 {
        let here = matrix[i * width + j];
        let equal = i > 0 && j > 0 && ref_tokens[i - 1] == hyp_tokens[j - 1];
        if equal && here == matrix[(i - 1) * width + (j - 1)] {
            ops.push(EditOp {
                kind: EditKind::Match,
                ref_index: Some(i - 1),
                hyp_index: Some(j - 1),
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && here == matrix[(i - 1) * width + j] + 1 {
            ops.push(EditOp {
                kind: EditKind::Delete,
                ref_index: Some(i - 1),
                hyp_index: None,
            });
            i -= 1;
        } else if i > 0 && j > 0 && !equal && here == matrix[(i - 1) * width + (j - 1)] + 1 {
            ops.push(EditOp {
                kind: EditKind::Substitute,
                ref_index: Some(i - 1),
                hyp_index: Some(j - 1),
            });
            i -= 1;
            j -= 1;
        } else {
            ops.push(EditOp {
                kind: EditKind::Insert,
                ref_index: None,
                hyp_index: Some(j - 1),
            });
            j -= 1;
        }
    }
    ops.reverse();
    AlignmentPath {
        ops,
        ref_len: n,
        hyp_len: m,
    }
}

/// Levenshtein distance without materializing the path.
pub fn distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let m = b.len();
    let mut prev: Vec<u32> = (0..=m as u32).collect();
    let mut cur = vec![0u32; m + 1];
    for (i, ra) in a.iter().enumerate() {
        cur[0] = i as u32 + 1;
        for (j, rb) in b.iter().enumerate() {
            let sub = prev[j] + u32::from(ra != rb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m] as usize
}

/// Character-level distance between two strings over Unicode scalars.
pub fn char_distance(a: &str, b: &str) -> usize {
    distance(&textnorm::char_sequence(a), &textnorm::char_sequence(b))
}

pub fn summarize(path: &AlignmentPath) -> AlignmentCounts {
    let mut counts = AlignmentCounts::default();
    for op in &path.ops {
        match op.kind {
            EditKind::Match => counts.correct += 1,
            EditKind::Substitute => counts.substitutions += 1,
            EditKind::Insert => counts.insertions += 1,
            EditKind::Delete => counts.deletions += 1,
        }
    }
    counts
}

/// Extracts the maximal runs of consecutive substitution ops. Segment
/// texts are the covered tokens joined with single spaces; segment CER is
/// the character distance over the reference segment length, clamped to
/// [0, 1].
pub fn substitution_segments<S: AsRef<str>>(
    path: &AlignmentPath,
    ref_tokens: &[S],
    hyp_tokens: &[S],
) -> Vec<SubstitutionSegment> {
    let mut segments = Vec::new();
    let mut run: Vec<&EditOp> = Vec::new();
    for op in path.ops.iter().chain(std::iter::once(&EditOp {
        kind: EditKind::Match,
        ref_index: None,
        hyp_index: None,
    })) {
        if op.kind == EditKind::Substitute {
            run.push(op);
            continue;
        }
        if run.is_empty() {
            continue;
        }
        let ref_start = run[0].ref_index.expect("substitute carries ref index");
        let ref_end = run[run.len() - 1].ref_index.unwrap() + 1;
        let hyp_start = run[0].hyp_index.expect("substitute carries hyp index");
        let hyp_end = run[run.len() - 1].hyp_index.unwrap() + 1;
        let ref_str = join_tokens(&ref_tokens[ref_start..ref_end]);
        let hyp_str = join_tokens(&hyp_tokens[hyp_start..hyp_end]);
        let ref_chars = textnorm::char_sequence(&ref_str).len();
        let raw = if ref_chars == 0 {
            0.0
        } else {
            char_distance(&ref_str, &hyp_str) as f64 / ref_chars as f64
        };
        segments.push(SubstitutionSegment {
            ref_start,
            ref_end,
            hyp_start,
            hyp_end,
            n_words: ref_end - ref_start,
            ref_str,
            hyp_str,
            segment_cer: raw.clamp(0.0, 1.0),
        });
        run.clear();
    }
    segments
}

fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (idx, token) in tokens.iter().enumerate() {
        if idx > 0 {
            out.push(' ');
        }
        out.push_str(token.as_ref());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn identity_alignment() {
        let path = levenshtein_align(&["a", "b", "c"], &["a", "b", "c"]);
        assert_eq!(path.ops.len(), 3);
        assert!(path.ops.iter().all(|op| op.kind == EditKind::Match));
        assert_eq!(summarize(&path).edits(), 0);
    }

    #[test]
    fn forced_single_deletion() {
        let path = levenshtein_align(&["a", "b"], &["a"]);
        let kinds: Vec<_> = path.ops.iter().map(|op| op.kind).collect();
        assert_eq!(kinds, vec![EditKind::Match, EditKind::Delete]);
    }

    #[test]
    fn kitten_sitting_distance() {
        let path = levenshtein_align(&chars("kitten"), &chars("sitting"));
        assert_eq!(summarize(&path).edits(), 3);
        assert_eq!(distance(&chars("kitten"), &chars("sitting")), 3);
    }

    #[test]
    fn empty_reference_is_all_insertions() {
        let path = levenshtein_align::<&str>(&[], &["x", "y"]);
        let counts = summarize(&path);
        assert_eq!(counts.correct, 0);
        assert_eq!(counts.substitutions, 0);
        assert_eq!(counts.insertions, 2);
        assert_eq!(counts.deletions, 0);
    }

    #[test]
    fn segment_run_extraction() {
        let path = levenshtein_align(&["a", "x", "y", "d"], &["a", "p", "q", "d"]);
        let segments = substitution_segments(&path, &["a", "x", "y", "d"], &["a", "p", "q", "d"]);
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].n_words, 2);
        assert_eq!(segments[0].ref_str, "x y");
        assert_eq!(segments[0].hyp_str, "p q");
    }

    #[test]
    fn segment_cer_from_char_distance() {
        let path = levenshtein_align(&["ab", "cd"], &["ab", "cx"]);
        let segments = substitution_segments(&path, &["ab", "cd"], &["ab", "cx"]);
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].ref_str, "cd");
        assert_eq!(segments[0].hyp_str, "cx");
        assert_eq!(segments[0].segment_cer, 0.5);
    }

    #[test]
    fn disjoint_alphabet_segment_cer_is_one() {
        let path = levenshtein_align(&["abc"], &["xyz"]);
        let segments = substitution_segments(&path, &["abc"], &["xyz"]);
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].segment_cer, 1.0);
    }

    #[test]
    fn path_jsonl_is_deterministic() {
        let a = ["a", "b", "c"];
        let b = ["a", "x", "c", "d"];
        let first = levenshtein_align(&a, &b).to_jsonl();
        let second = levenshtein_align(&a, &b).to_jsonl();
        assert_eq!(first, second);
        assert!(first.lines().next().unwrap().contains("\"kind\""));
    }
}
