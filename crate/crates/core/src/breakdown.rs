//! Grouped metric aggregation over metadata dimensions: robustness
//! tables, two-way cross-tabulations with count-weighted margins, system
//! comparison, and figure-data extraction (bars, box-plot quartiles).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{self, UtteranceRecord};
use crate::error::{Error, Result};
use crate::metrics::{CorpusSummary, UtteranceScore};

/// Dimensions usable for grouping and category-proportion statistics.
pub const CATEGORICAL_DIMENSIONS: [&str; 9] = [
    "accent",
    "acoustic_environment",
    "age",
    "data_source",
    "formality",
    "gender",
    "semantic_content",
    "speaker_class",
    "spontaneous",
];

/// Resolves a record's category value for a grouping dimension.
/// `speaker_class` is derived: single when num_speakers == 1, multiple
/// otherwise.
pub fn dimension_value(record: &UtteranceRecord, dimension: &str) -> Result<String> {
    let value = match dimension {
        "gender" => enum_label(&record.gender),
        "age" => enum_label(&record.age),
        "accent" => record.accent.clone(),
        "formality" => enum_label(&record.formality),
        "semantic_content" => record.semantic_content.clone(),
        "data_source" => record.data_source.clone(),
        "acoustic_environment" => enum_label(&record.acoustic_environment),
        "spontaneous" => record.spontaneous.to_string(),
        "speaker_class" => {
            if record.num_speakers == 1 { "single" } else { "multiple" }.to_string()
        }
        "num_speakers" => record.num_speakers.to_string(),
        other => return Err(Error::UnknownDimension(other.to_string())),
    };
    Ok(value)
}

fn enum_label<T: Serialize>(value: &T) -> String {
    // Enum serde representations are plain lowercase strings.
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .expect("dimension enums serialize to strings")
}

/// Ordered (dimension, category) pairs identifying one group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GroupKey {
    pub parts: Vec<(String, String)>,
}

impl GroupKey {
    pub fn label(&self) -> String {
        self.parts
            .iter()
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join(" / ")
    }
}

/// Macro-averaged metrics for one group, as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupCell {
    pub cer: f64,
    pub wer: f64,
    pub sw_wer: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownRow {
    pub system_name: String,
    pub key: GroupKey,
    pub cell: GroupCell,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownTable {
    pub dimensions: Vec<String>,
    /// Ordered by system input order, then lexicographic group key.
    pub rows: Vec<BreakdownRow>,
}

fn macro_cell(scores: &[&UtteranceScore]) -> GroupCell {
    let n = scores.len() as f64;
    GroupCell {
        cer: scores.iter().map(|s| s.cer).sum::<f64>() / n * 100.0,
        wer: scores.iter().map(|s| s.wer).sum::<f64>() / n * 100.0,
        sw_wer: scores.iter().map(|s| s.sw_wer).sum::<f64>() / n * 100.0,
        count: scores.len(),
    }
}

/// Groups scores by the given dimensions and macro-averages each group.
/// Groups with zero utterances are simply absent.
pub fn group_scores(
    scores: &[UtteranceScore],
    records: &[UtteranceRecord],
    dimensions: &[String],
) -> Result<BreakdownTable> {
    let index = corpus::index_records(records);
    // Validate dimension names up front against a throwaway record probe.
    let mut systems: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, GroupKey), Vec<&UtteranceScore>> = BTreeMap::new();
    for score in scores {
        let record = index
            .get(score.utterance_id.as_str())
            .ok_or_else(|| Error::UnresolvedId(score.utterance_id.clone()))?;
        let mut parts = Vec::with_capacity(dimensions.len());
        for dimension in dimensions {
            parts.push((dimension.clone(), dimension_value(record, dimension)?));
        }
        let system_rank = match systems.iter().position(|s| s == &score.system_name) {
            Some(rank) => rank,
            None => {
                systems.push(score.system_name.clone());
                systems.len() - 1
            }
        };
        groups
            .entry((system_rank, GroupKey { parts }))
            .or_default()
            .push(score);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((system_rank, key), mut members) in groups {
        members.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        rows.push(BreakdownRow {
            system_name: systems[system_rank].clone(),
            key,
            cell: macro_cell(&members),
        });
    }
    Ok(BreakdownTable {
        dimensions: dimensions.to_vec(),
        rows,
    })
}

/// Two-way matrix layout with count-weighted margins for one system.
#[derive(Debug, Clone, Serialize)]
pub struct CrossTabSystem {
    pub system_name: String,
    pub row_categories: Vec<String>,
    pub col_categories: Vec<String>,
    /// cells[row][col], None where the group is empty.
    pub cells: Vec<Vec<Option<GroupCell>>>,
    pub row_margins: Vec<Option<GroupCell>>,
    pub col_margins: Vec<Option<GroupCell>>,
    pub overall: Option<GroupCell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossTab {
    pub row_dimension: String,
    pub col_dimension: String,
    pub systems: Vec<CrossTabSystem>,
}

fn weighted_margin(cells: &[&GroupCell]) -> Option<GroupCell> {
    let total: usize = cells.iter().map(|c| c.count).sum();
    if total == 0 {
        return None;
    }
    let weight = |f: fn(&GroupCell) -> f64| {
        cells.iter().map(|c| f(c) * c.count as f64).sum::<f64>() / total as f64
    };
    Some(GroupCell {
        cer: weight(|c| c.cer),
        wer: weight(|c| c.wer),
        sw_wer: weight(|c| c.sw_wer),
        count: total,
    })
}

/// Lays a two-dimension breakdown out as a matrix with count-weighted
/// row/column margins. Margins are the only definition under which
/// recombining a split reproduces the unsplit macro average.
pub fn cross_tabulate(table: &BreakdownTable) -> Result<CrossTab> {
    if table.dimensions.len() != 2 {
        return Err(Error::Dimensionality(table.dimensions.len()));
    }
    let mut systems_order: Vec<&str> = Vec::new();
    for row in &table.rows {
        if !systems_order.contains(&row.system_name.as_str()) {
            systems_order.push(&row.system_name);
        }
    }
    let mut systems = Vec::new();
    for system in systems_order {
        let rows: Vec<&BreakdownRow> =
            table.rows.iter().filter(|r| r.system_name == system).collect();
        let mut row_categories: Vec<String> = Vec::new();
        let mut col_categories: Vec<String> = Vec::new();
        for row in &rows {
            let (r, c) = (&row.key.parts[0].1, &row.key.parts[1].1);
            if !row_categories.contains(r) {
                row_categories.push(r.clone());
            }
            if !col_categories.contains(c) {
                col_categories.push(c.clone());
            }
        }
        row_categories.sort();
        col_categories.sort();
        let mut cells =
            vec![vec![None::<GroupCell>; col_categories.len()]; row_categories.len()];
        for row in &rows {
            let ri = row_categories.iter().position(|c| c == &row.key.parts[0].1).unwrap();
            let ci = col_categories.iter().position(|c| c == &row.key.parts[1].1).unwrap();
            cells[ri][ci] = Some(row.cell);
        }
        let row_margins: Vec<Option<GroupCell>> = cells
            .iter()
            .map(|row| weighted_margin(&row.iter().flatten().collect::<Vec<_>>()))
            .collect();
        let col_margins: Vec<Option<GroupCell>> = (0..col_categories.len())
            .map(|ci| {
                weighted_margin(&cells.iter().filter_map(|row| row[ci].as_ref()).collect::<Vec<_>>())
            })
            .collect();
        let overall = weighted_margin(&cells.iter().flatten().flatten().collect::<Vec<_>>());
        systems.push(CrossTabSystem {
            system_name: system.to_string(),
            row_categories,
            col_categories,
            cells,
            row_margins,
            col_margins,
            overall,
        });
    }
    Ok(CrossTab {
        row_dimension: table.dimensions[0].clone(),
        col_dimension: table.dimensions[1].clone(),
        systems,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub system_name: String,
    pub cer: f64,
    pub wer: f64,
    pub sw_wer: f64,
    pub best_cer: bool,
    pub best_wer: bool,
    pub best_sw_wer: bool,
}

/// Ranked comparison of per-system summaries. The per-metric minimum is
/// marked; ties mark every minimal entry; input order is preserved.
pub fn compare_systems(summaries: &[CorpusSummary]) -> Result<Vec<ComparisonRow>> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let triples: Vec<(f64, f64, f64)> = summaries.iter().map(|s| s.headline()).collect();
    let min_of = |f: fn(&(f64, f64, f64)) -> f64| {
        triples.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    let (min_cer, min_wer, min_sw) = (min_of(|t| t.0), min_of(|t| t.1), min_of(|t| t.2));
    Ok(summaries
        .iter()
        .zip(&triples)
        .map(|(summary, &(cer, wer, sw_wer))| ComparisonRow {
            system_name: summary.system_name.clone(),
            cer,
            wer,
            sw_wer,
            best_cer: cer == min_cer,
            best_wer: wer == min_wer,
            best_sw_wer: sw_wer == min_sw,
        })
        .collect())
}

/// Bar-chart rows: per system and category, the macro SW-WER percentage.
pub fn figure_bar_data(
    scores: &[UtteranceScore],
    records: &[UtteranceRecord],
    dimension: &str,
) -> Result<Vec<(String, String, f64, usize)>> {
    let table = group_scores(scores, records, &[dimension.to_string()])?;
    Ok(table
        .rows
        .into_iter()
        .map(|row| {
            (
                row.system_name,
                row.key.parts[0].1.clone(),
                row.cell.sw_wer,
                row.cell.count,
            )
        })
        .collect())
}

/// Five-number summary plus 1.5x IQR outliers over per-utterance SW-WER
/// percentages. Log scaling and outlier exclusion are left to the plotter.
#[derive(Debug, Clone, Serialize)]
pub struct BoxStats {
    pub system_name: String,
    pub category: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
    pub count: usize,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    // Type-7 linear interpolation.
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Box-plot data per (system, category) of a grouping dimension.
pub fn box_plot_data(
    scores: &[UtteranceScore],
    records: &[UtteranceRecord],
    dimension: &str,
) -> Result<Vec<BoxStats>> {
    let index = corpus::index_records(records);
    let mut systems: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for score in scores {
        let record = index
            .get(score.utterance_id.as_str())
            .ok_or_else(|| Error::UnresolvedId(score.utterance_id.clone()))?;
        let category = dimension_value(record, dimension)?;
        let rank = match systems.iter().position(|s| s == &score.system_name) {
            Some(rank) => rank,
            None => {
                systems.push(score.system_name.clone());
                systems.len() - 1
            }
        };
        groups.entry((rank, category)).or_default().push(score.sw_wer * 100.0);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((rank, category), mut values) in groups {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q1 = quantile(&values, 0.25);
        let median = quantile(&values, 0.5);
        let q3 = quantile(&values, 0.75);
        let iqr = q3 - q1;
        let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        out.push(BoxStats {
            system_name: systems[rank].clone(),
            category,
            min: values[0],
            q1,
            median,
            q3,
            max: *values.last().unwrap(),
            outliers: values
                .iter()
                .copied()
                .filter(|&v| v < fence_lo || v > fence_hi)
                .collect(),
            count: values.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AcousticEnvironment, Age, Formality, Gender};
    use crate::metrics::{aggregate_corpus, score_utterance, AggregationMode};
    use crate::textnorm::NormalizationConfig;

    fn record(id: &str, formality: Formality, env: AcousticEnvironment, speakers: u32) -> UtteranceRecord {
        UtteranceRecord {
            id: id.to_string(),
            text: "یک دو سه چهار".to_string(),
            duration_s: Some(5.0),
            num_speakers: speakers,
            gender: Gender::Female,
            age: Age::Adult,
            accent: "Standard".to_string(),
            formality,
            semantic_content: "social".to_string(),
            data_source: "news".to_string(),
            acoustic_environment: env,
            spontaneous: false,
            speaker_ids: None,
        }
    }

    fn score(id: &str, hyp: &str) -> UtteranceScore {
        score_utterance(id, "sys", "یک دو سه چهار", hyp, &NormalizationConfig::default()).unwrap()
    }

    #[test]
    fn single_category_table_equals_corpus_summary() {
        let records = vec![
            record("u1", Formality::Formal, AcousticEnvironment::Clean, 1),
            record("u2", Formality::Formal, AcousticEnvironment::Clean, 1),
        ];
        let scores = vec![score("u1", "یک دو سه چهار"), score("u2", "یک دو پنج چهار")];
        let table = group_scores(&scores, &records, &["formality".to_string()]).unwrap();
        assert_eq!(table.rows.len(), 1);
        let summary = aggregate_corpus(&scores, AggregationMode::Macro).unwrap();
        assert!((table.rows[0].cell.wer - summary.macro_wer).abs() < 1e-12);
        assert!((table.rows[0].cell.sw_wer - summary.macro_sw_wer).abs() < 1e-12);
    }

    #[test]
    fn speaker_class_derives_two_groups() {
        let records = vec![
            record("u1", Formality::Formal, AcousticEnvironment::Clean, 1),
            record("u2", Formality::Formal, AcousticEnvironment::Clean, 3),
            record("u3", Formality::Formal, AcousticEnvironment::Clean, 1),
        ];
        let scores: Vec<_> = ["u1", "u2", "u3"].iter().map(|id| score(id, "یک دو سه چهار")).collect();
        let table = group_scores(&scores, &records, &["speaker_class".to_string()]).unwrap();
        assert_eq!(table.rows.len(), 2);
        let labels: Vec<_> = table.rows.iter().map(|r| r.key.label()).collect();
        assert!(labels.contains(&"single".to_string()));
        assert!(labels.contains(&"multiple".to_string()));
    }

    #[test]
    fn two_dimensional_cells_match_direct_per_group_computation() {
        let mut records = Vec::new();
        let mut scores = Vec::new();
        let combos = [
            (Formality::Formal, AcousticEnvironment::Clean, "یک دو سه چهار"),
            (Formality::Formal, AcousticEnvironment::Noisy, "یک دو سه پنج"),
            (Formality::Informal, AcousticEnvironment::Clean, "یک دو شش هفت"),
            (Formality::Informal, AcousticEnvironment::Noisy, "هشت نه ده یازده"),
        ];
        let mut expected = Vec::new();
        for (idx, (formality, env, hyp)) in combos.iter().enumerate() {
            for copy in 0..3 {
                let id = format!("u{idx}-{copy}");
                records.push(record(&id, *formality, *env, 1));
                scores.push(score(&id, hyp));
            }
            let direct = score(&format!("u{idx}-0"), hyp);
            expected.push(direct.wer * 100.0);
        }
        let dims = vec!["formality".to_string(), "acoustic_environment".to_string()];
        let table = group_scores(&scores, &records, &dims).unwrap();
        assert_eq!(table.rows.len(), 4);
        for row in &table.rows {
            let idx = combos
                .iter()
                .position(|(f, e, _)| {
                    enum_label(f) == row.key.parts[0].1 && enum_label(e) == row.key.parts[1].1
                })
                .unwrap();
            assert!((row.cell.wer - expected[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_dimension_and_unresolved_id_error() {
        let records = vec![record("u1", Formality::Formal, AcousticEnvironment::Clean, 1)];
        let scores = vec![score("u1", "یک دو سه چهار")];
        assert!(matches!(
            group_scores(&scores, &records, &["pitch".to_string()]),
            Err(Error::UnknownDimension(_))
        ));
        let orphan = vec![score("zz", "یک دو سه چهار")];
        assert!(matches!(
            group_scores(&orphan, &records, &["formality".to_string()]),
            Err(Error::UnresolvedId(_))
        ));
    }

    #[test]
    fn cross_tab_margins_are_count_weighted() {
        // 2x2 with unequal counts along the first row: margin must be the
        // count-weighted mean, (10a + 30b) / 40.
        let mut records = Vec::new();
        let mut scores = Vec::new();
        for i in 0..10 {
            let id = format!("a{i}");
            records.push(record(&id, Formality::Formal, AcousticEnvironment::Clean, 1));
            scores.push(score(&id, "یک دو سه پنج")); // wer 0.25
        }
        for i in 0..30 {
            let id = format!("b{i}");
            records.push(record(&id, Formality::Formal, AcousticEnvironment::Noisy, 1));
            scores.push(score(&id, "یک شش هفت هشت")); // wer 0.75
        }
        let dims = vec!["formality".to_string(), "acoustic_environment".to_string()];
        let table = group_scores(&scores, &records, &dims).unwrap();
        let tab = cross_tabulate(&table).unwrap();
        let system = &tab.systems[0];
        let margin = system.row_margins[0].unwrap();
        let expected = (10.0 * 25.0 + 30.0 * 75.0) / 40.0;
        assert!((margin.wer - expected).abs() < 1e-12);
        assert_eq!(margin.count, 40);
    }

    #[test]
    fn cross_tab_equal_counts_margin_is_plain_mean() {
        let mut records = Vec::new();
        let mut scores = Vec::new();
        for (tag, env, hyp) in [
            ("a", AcousticEnvironment::Clean, "یک دو سه چهار"),
            ("b", AcousticEnvironment::Noisy, "یک دو سه پنج"),
        ] {
            for i in 0..5 {
                let id = format!("{tag}{i}");
                records.push(record(&id, Formality::Formal, env, 1));
                scores.push(score(&id, hyp));
            }
        }
        let dims = vec!["formality".to_string(), "acoustic_environment".to_string()];
        let tab = cross_tabulate(&group_scores(&scores, &records, &dims).unwrap()).unwrap();
        let system = &tab.systems[0];
        let cells: Vec<f64> = system.cells[0].iter().flatten().map(|c| c.wer).collect();
        let margin = system.row_margins[0].unwrap();
        assert!((margin.wer - (cells[0] + cells[1]) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cross_tab_requires_two_dimensions() {
        let records = vec![record("u1", Formality::Formal, AcousticEnvironment::Clean, 1)];
        let scores = vec![score("u1", "یک دو سه چهار")];
        let table = group_scores(&scores, &records, &["formality".to_string()]).unwrap();
        assert!(matches!(cross_tabulate(&table), Err(Error::Dimensionality(1))));
    }

    fn summary(name: &str, cer: f64, wer: f64, sw: f64) -> CorpusSummary {
        CorpusSummary {
            system_name: name.to_string(),
            utterance_count: 1,
            mode: AggregationMode::Macro,
            macro_wer: wer,
            macro_cer: cer,
            macro_sw_wer: sw,
            micro_wer: wer,
            micro_cer: cer,
            micro_sw_wer: sw,
        }
    }

    #[test]
    fn comparison_marks_minimum() {
        let rows = compare_systems(&[
            summary("Vosk", 23.96, 44.62, 39.41),
            summary("Avanegar", 8.75, 19.30, 15.68),
        ])
        .unwrap();
        assert!(!rows[0].best_wer);
        assert!(rows[1].best_wer && rows[1].best_cer && rows[1].best_sw_wer);
    }

    #[test]
    fn single_system_is_best_everywhere_and_ties_mark_all() {
        let rows = compare_systems(&[summary("only", 1.0, 2.0, 3.0)]).unwrap();
        assert!(rows[0].best_cer && rows[0].best_wer && rows[0].best_sw_wer);

        let rows = compare_systems(&[
            summary("a", 5.0, 10.0, 8.0),
            summary("b", 5.0, 12.0, 9.0),
        ])
        .unwrap();
        assert!(rows[0].best_cer && rows[1].best_cer);
        assert!(rows[0].best_wer && !rows[1].best_wer);
        assert!(matches!(compare_systems(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn box_plot_quartiles_and_outliers() {
        let mut records = Vec::new();
        let mut scores = Vec::new();
        for i in 0..8 {
            let id = format!("u{i}");
            records.push(record(&id, Formality::Formal, AcousticEnvironment::Clean, 1));
            // Mostly low error with one extreme value.
            let hyp = if i == 7 { "الف ب پ ت" } else { "یک دو سه چهار" };
            scores.push(score(&id, hyp));
        }
        let stats = box_plot_data(&scores, &records, "gender").unwrap();
        assert_eq!(stats.len(), 1);
        let b = &stats[0];
        assert_eq!(b.count, 8);
        assert!(b.q1 <= b.median && b.median <= b.q3);
        assert_eq!(b.outliers.len(), 1);
    }
}
