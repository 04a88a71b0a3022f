//! Manifest and hypothesis ingestion, validation, and dataset statistics.
//!
//! Manifests are JSON lines or a tab-separated table with a header row;
//! the schema keys are: id, text, duration_s, num_speakers, gender, age,
//! accent, formality, semantic_content, data_source, acoustic_environment,
//! spontaneous, speaker_ids. Hypotheses are `id<TAB>text` lines or JSON
//! lines with "id" and "text".

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::{self, NormalizationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Mix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Age {
    Child,
    Teen,
    Adult,
    Senior,
    Mix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formality {
    Formal,
    Informal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcousticEnvironment {
    Clean,
    Noisy,
    Phone,
    Reverberant,
}

/// The 13 canonical accent labels; other values are accepted in lenient
/// mode with a warning.
pub const CANONICAL_ACCENTS: [&str; 13] = [
    "Baluchi", "Dari", "Isfahani", "Jonubi", "Kermani", "Kurdish", "Lori", "Mashhadi", "Shirazi",
    "Shomali", "Standard", "Turkish", "Yazdi",
];

/// A reference transcript plus its metadata dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    pub num_speakers: u32,
    pub gender: Gender,
    pub age: Age,
    pub accent: String,
    pub formality: Formality,
    pub semantic_content: String,
    pub data_source: String,
    pub acoustic_environment: AcousticEnvironment,
    pub spontaneous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueSeverity {
    /// Record kept.
    Warning,
    /// Record skipped.
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadIssue {
    pub line: usize,
    pub severity: IssueSeverity,
    pub message: String,
}

/// Per-system hypothesis texts keyed by utterance id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisSet {
    pub system_name: String,
    pub entries: BTreeMap<String, String>,
}

impl HypothesisSet {
    /// Strict join: every hypothesis id must resolve against the manifest.
    pub fn validate_against(&self, records: &[UtteranceRecord]) -> Result<()> {
        let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
        for id in self.entries.keys() {
            if !known.contains(id.as_str()) {
                return Err(Error::MissingId(id.clone()));
            }
        }
        Ok(())
    }
}

fn validate_record(record: &UtteranceRecord) -> std::result::Result<Vec<String>, String> {
    if record.id.is_empty() {
        return Err("id must be non-empty".to_string());
    }
    if record.text.is_empty() {
        return Err("text must be non-empty".to_string());
    }
    if record.num_speakers < 1 {
        return Err("num_speakers must be >= 1".to_string());
    }
    if let Some(d) = record.duration_s {
        if !(d > 0.0) {
            return Err(format!("duration_s must be > 0, got {d}"));
        }
    }
    let mut warnings = Vec::new();
    if !CANONICAL_ACCENTS.contains(&record.accent.as_str()) {
        warnings.push(format!("accent '{}' is not canonical", record.accent));
    }
    Ok(warnings)
}

/// Loads a manifest. Strict mode fails on the first violation; lenient
/// mode collects issues and keeps going. Duplicate ids are always fatal.
pub fn load_manifest(path: &Path, mode: LoadMode) -> Result<(Vec<UtteranceRecord>, Vec<LoadIssue>)> {
    let content = fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let is_jsonl = content
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.trim_start().starts_with('{'))
        .unwrap_or(true);

    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();

    let mut push = |record: UtteranceRecord,
                    line: usize,
                    records: &mut Vec<UtteranceRecord>,
                    issues: &mut Vec<LoadIssue>|
     -> Result<()> {
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        match validate_record(&record) {
            Ok(warnings) => {
                for message in warnings {
                    if mode == LoadMode::Strict {
                        return Err(Error::Schema {
                            path: path_str.clone(),
                            line,
                            message,
                        });
                    }
                    issues.push(LoadIssue {
                        line,
                        severity: IssueSeverity::Warning,
                        message,
                    });
                }
                records.push(record);
                Ok(())
            }
            Err(message) => {
                if mode == LoadMode::Strict {
                    return Err(Error::Schema {
                        path: path_str.clone(),
                        line,
                        message,
                    });
                }
                issues.push(LoadIssue {
                    line,
                    severity: IssueSeverity::Error,
                    message,
                });
                Ok(())
            }
        }
    };

    if is_jsonl {
        for (idx, raw) in content.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<UtteranceRecord>(raw) {
                Ok(record) => push(record, line, &mut records, &mut issues)?,
                Err(e) => {
                    if mode == LoadMode::Strict {
                        return Err(Error::Schema {
                            path: path_str,
                            line,
                            message: e.to_string(),
                        });
                    }
                    issues.push(LoadIssue {
                        line,
                        severity: IssueSeverity::Error,
                        message: e.to_string(),
                    });
                }
            }
        }
    } else {
        let mut lines = content.lines().enumerate();
        let header = lines
            .next()
            .map(|(_, l)| l.split('\t').map(str::trim).map(String::from).collect::<Vec<_>>())
            .unwrap_or_default();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            match parse_tsv_record(&header, raw) {
                Ok(record) => push(record, line, &mut records, &mut issues)?,
                Err(message) => {
                    if mode == LoadMode::Strict {
                        return Err(Error::Schema {
                            path: path_str,
                            line,
                            message,
                        });
                    }
                    issues.push(LoadIssue {
                        line,
                        severity: IssueSeverity::Error,
                        message,
                    });
                }
            }
        }
    }
    Ok((records, issues))
}

fn parse_tsv_record(header: &[String], raw: &str) -> std::result::Result<UtteranceRecord, String> {
    let cells: Vec<&str> = raw.split('\t').collect();
    if cells.len() != header.len() {
        return Err(format!(
            "expected {} tab-separated fields, got {}",
            header.len(),
            cells.len()
        ));
    }
    let mut map = serde_json::Map::new();
    for (key, cell) in header.iter().zip(&cells) {
        let cell = cell.trim();
        let value = match key.as_str() {
            "duration_s" => {
                if cell.is_empty() {
                    continue;
                }
                serde_json::Value::from(
                    cell.parse::<f64>().map_err(|_| format!("bad duration_s '{cell}'"))?,
                )
            }
            "num_speakers" => serde_json::Value::from(
                cell.parse::<u32>().map_err(|_| format!("bad num_speakers '{cell}'"))?,
            ),
            "spontaneous" => serde_json::Value::from(
                cell.parse::<bool>().map_err(|_| format!("bad spontaneous '{cell}'"))?,
            ),
            "speaker_ids" => {
                if cell.is_empty() {
                    continue;
                }
                serde_json::Value::from(
                    cell.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>(),
                )
            }
            _ => serde_json::Value::from(cell),
        };
        map.insert(key.clone(), value);
    }
    serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| e.to_string())
}

/// Loads one system's hypotheses from TSV (`id<TAB>text`) or JSON lines.
pub fn load_hypotheses(path: &Path, system_name: &str) -> Result<HypothesisSet> {
    let content = fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut entries = BTreeMap::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (id, text) = if raw.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Row {
                id: String,
                text: String,
            }
            let row: Row = serde_json::from_str(raw).map_err(|e| Error::Parse {
                path: path_str.clone(),
                line,
                message: e.to_string(),
            })?;
            (row.id, row.text)
        } else {
            let (id, text) = raw.split_once('\t').ok_or_else(|| Error::Parse {
                path: path_str.clone(),
                line,
                message: "missing tab separator between id and text".to_string(),
            })?;
            (id.to_string(), text.to_string())
        };
        if entries.insert(id.clone(), text).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(HypothesisSet {
        system_name: system_name.to_string(),
        entries,
    })
}

/// Fixed width of the duration histogram bins, in seconds.
pub const HISTOGRAM_BIN_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct DurationBin {
    pub start_s: f64,
    pub end_s: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetStats {
    pub utterance_count: usize,
    pub total_duration_h: f64,
    pub min_dur_s: Option<f64>,
    pub max_dur_s: Option<f64>,
    pub avg_dur_s: Option<f64>,
    pub word_count: usize,
    pub unique_word_count: usize,
    /// Distinct speaker ids, when any record carries them.
    pub speaker_count: Option<usize>,
    pub missing_duration_count: usize,
    pub histogram: Vec<DurationBin>,
    /// dimension -> category -> fraction of records carrying that field.
    pub category_proportions: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Computes Table-2-style dataset statistics from manifest records. Word
/// counts come from normalized, tokenized reference text.
pub fn dataset_statistics(
    records: &[UtteranceRecord],
    config: &NormalizationConfig,
) -> Result<DatasetStats> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut word_count = 0usize;
    let mut vocabulary: BTreeSet<String> = BTreeSet::new();
    for record in records {
        let normalized = textnorm::normalize_text(&record.text, config);
        for token in textnorm::tokenize_words(&normalized) {
            word_count += 1;
            vocabulary.insert(token.to_string());
        }
    }

    let durations: Vec<f64> = records.iter().filter_map(|r| r.duration_s).collect();
    let missing_duration_count = records.len() - durations.len();
    let total_s: f64 = durations.iter().sum();
    let (min_dur_s, max_dur_s, avg_dur_s) = if durations.is_empty() {
        (None, None, None)
    } else {
        (
            Some(durations.iter().cloned().fold(f64::INFINITY, f64::min)),
            Some(durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            Some(total_s / durations.len() as f64),
        )
    };

    let mut histogram = Vec::new();
    if let Some(max) = max_dur_s {
        let bins = (max / HISTOGRAM_BIN_SECONDS).floor() as usize + 1;
        let mut counts = vec![0usize; bins];
        for d in &durations {
            let idx = ((d / HISTOGRAM_BIN_SECONDS).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        histogram = counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| DurationBin {
                start_s: i as f64 * HISTOGRAM_BIN_SECONDS,
                end_s: (i + 1) as f64 * HISTOGRAM_BIN_SECONDS,
                count,
            })
            .collect();
    }

    let speakers: BTreeSet<&String> = records
        .iter()
        .filter_map(|r| r.speaker_ids.as_ref())
        .flatten()
        .collect();
    let speaker_count = if speakers.is_empty() { None } else { Some(speakers.len()) };

    let mut category_proportions = BTreeMap::new();
    for dimension in crate::breakdown::CATEGORICAL_DIMENSIONS {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for record in records {
            let value = crate::breakdown::dimension_value(record, dimension)
                .expect("built-in dimension is always valid");
            *counts.entry(value).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        category_proportions.insert(
            dimension.to_string(),
            counts
                .into_iter()
                .map(|(k, v)| (k, v as f64 / total as f64))
                .collect(),
        );
    }

    Ok(DatasetStats {
        utterance_count: records.len(),
        total_duration_h: total_s / 3600.0,
        min_dur_s,
        max_dur_s,
        avg_dur_s,
        word_count,
        unique_word_count: vocabulary.len(),
        speaker_count,
        missing_duration_count,
        histogram,
        category_proportions,
    })
}

/// Optional duration range check, off by default.
pub fn check_duration_range(
    records: &[UtteranceRecord],
    min_s: f64,
    max_s: f64,
) -> Vec<(String, f64)> {
    records
        .iter()
        .filter_map(|r| {
            let d = r.duration_s?;
            if d < min_s || d > max_s {
                Some((r.id.clone(), d))
            } else {
                None
            }
        })
        .collect()
}

/// Maps every manifest id to its record, for breakdown joins.
pub fn index_records(records: &[UtteranceRecord]) -> HashMap<&str, &UtteranceRecord> {
    records.iter().map(|r| (r.id.as_str(), r)).collect()
}
