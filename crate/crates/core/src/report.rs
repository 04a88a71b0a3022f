//! Machine-readable output surfaces: score JSON lines, summary and
//! comparison tables (CSV, Markdown, JSON), breakdown and cross-tab
//! layouts, figure-data CSVs.
//!
//! Every file carries a metadata block recording the toolkit version, the
//! normalization profile, and the aggregation mode. Percentages are
//! printed to 2 decimals in CSV/Markdown; JSON keeps raw fractions at
//! full precision.

use serde::Serialize;

use crate::breakdown::{BoxStats, BreakdownTable, ComparisonRow, CrossTab};
use crate::corpus::DatasetStats;
use crate::metrics::{CorpusSummary, CorrelationReport, UtteranceScore};
use crate::taxonomy::ErrorProfile;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance header attached to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct OutputMeta {
    pub tool_version: String,
    pub norm_profile: String,
    pub agg_mode: String,
}

impl OutputMeta {
    pub fn new(norm_profile: &str, agg_mode: &str) -> Self {
        OutputMeta {
            tool_version: TOOL_VERSION.to_string(),
            norm_profile: norm_profile.to_string(),
            agg_mode: agg_mode.to_string(),
        }
    }

    fn comment_header(&self) -> String {
        format!(
            "# asreval v{} norm={} agg={}\n",
            self.tool_version, self.norm_profile, self.agg_mode
        )
    }

    fn markdown_header(&self) -> String {
        format!(
            "<!-- asreval v{} norm={} agg={} -->\n",
            self.tool_version, self.norm_profile, self.agg_mode
        )
    }
}

#[derive(Serialize)]
struct ScoreWire<'a> {
    id: &'a str,
    system: &'a str,
    wer: f64,
    cer: f64,
    sw_wer: f64,
    #[serde(rename = "C")]
    correct: usize,
    #[serde(rename = "S_count")]
    s_count: usize,
    #[serde(rename = "S_weighted")]
    s_weighted: f64,
    #[serde(rename = "I")]
    insertions: usize,
    #[serde(rename = "D")]
    deletions: usize,
    #[serde(rename = "N_sub")]
    n_sub: usize,
    seg_count: usize,
}

/// One JSON object per utterance, in input order, full precision.
pub fn scores_jsonl(scores: &[UtteranceScore]) -> String {
    let mut out = String::new();
    for s in scores {
        let wire = ScoreWire {
            id: &s.utterance_id,
            system: &s.system_name,
            wer: s.wer,
            cer: s.cer,
            sw_wer: s.sw_wer,
            correct: s.counts.correct,
            s_count: s.counts.substitutions,
            s_weighted: s.s_weighted,
            insertions: s.counts.insertions,
            deletions: s.counts.deletions,
            n_sub: s.n_sub,
            seg_count: s.seg_count,
        };
        out.push_str(&serde_json::to_string(&wire).expect("score serializes"));
        out.push('\n');
    }
    out
}

fn json_with_meta<T: Serialize>(value: &T, meta: &OutputMeta) -> String {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        meta: &'a OutputMeta,
        #[serde(flatten)]
        body: Body<'a, T>,
    }
    #[derive(Serialize)]
    struct Body<'a, T> {
        data: &'a T,
    }
    let mut out = serde_json::to_string_pretty(&Envelope {
        meta,
        body: Body { data: value },
    })
    .expect("report value serializes");
    out.push('\n');
    out
}

pub fn summary_json(summary: &CorpusSummary, meta: &OutputMeta) -> String {
    json_with_meta(summary, meta)
}

pub fn summary_csv(summaries: &[CorpusSummary], meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str("Model,CER,WER,SW-WER\n");
    for s in summaries {
        let (cer, wer, sw) = s.headline();
        out.push_str(&format!("{},{:.2},{:.2},{:.2}\n", csv_field(&s.system_name), cer, wer, sw));
    }
    out
}

pub fn summary_markdown(summaries: &[CorpusSummary], meta: &OutputMeta) -> String {
    let mut out = meta.markdown_header();
    out.push_str("| Model | CER | WER | SW-WER |\n|---|---|---|---|\n");
    for s in summaries {
        let (cer, wer, sw) = s.headline();
        out.push_str(&format!("| {} | {:.2} | {:.2} | {:.2} |\n", s.system_name, cer, wer, sw));
    }
    out
}

pub fn comparison_json(rows: &[ComparisonRow], meta: &OutputMeta) -> String {
    json_with_meta(&rows, meta)
}

pub fn comparison_csv(rows: &[ComparisonRow], meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str("Model,CER,WER,SW-WER,best_cer,best_wer,best_sw_wer\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{:.2},{},{},{}\n",
            csv_field(&r.system_name), r.cer, r.wer, r.sw_wer, r.best_cer, r.best_wer, r.best_sw_wer
        ));
    }
    out
}

pub fn comparison_markdown(rows: &[ComparisonRow], meta: &OutputMeta) -> String {
    let mark = |value: f64, best: bool| {
        if best {
            format!("**{value:.2}**")
        } else {
            format!("{value:.2}")
        }
    };
    let mut out = meta.markdown_header();
    out.push_str("| Model | CER | WER | SW-WER |\n|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            r.system_name,
            mark(r.cer, r.best_cer),
            mark(r.wer, r.best_wer),
            mark(r.sw_wer, r.best_sw_wer)
        ));
    }
    out
}

pub fn breakdown_json(table: &BreakdownTable, meta: &OutputMeta) -> String {
    json_with_meta(table, meta)
}

pub fn breakdown_csv(table: &BreakdownTable, meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str("system,");
    out.push_str(&table.dimensions.join(","));
    out.push_str(",CER,WER,SW-WER,count\n");
    for row in &table.rows {
        let cats: Vec<String> = row.key.parts.iter().map(|(_, v)| csv_field(v)).collect();
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{}\n",
            csv_field(&row.system_name),
            cats.join(","),
            row.cell.cer,
            row.cell.wer,
            row.cell.sw_wer,
            row.cell.count
        ));
    }
    out
}

pub fn breakdown_markdown(table: &BreakdownTable, meta: &OutputMeta) -> String {
    let mut out = meta.markdown_header();
    out.push_str("| System | ");
    out.push_str(&table.dimensions.join(" | "));
    out.push_str(" | CER | WER | SW-WER | Count |\n|");
    out.push_str(&"---|".repeat(table.dimensions.len() + 5));
    out.push('\n');
    for row in &table.rows {
        let cats: Vec<&str> = row.key.parts.iter().map(|(_, v)| v.as_str()).collect();
        out.push_str(&format!(
            "| {} | {} | {:.2} | {:.2} | {:.2} | {} |\n",
            row.system_name,
            cats.join(" | "),
            row.cell.cer,
            row.cell.wer,
            row.cell.sw_wer,
            row.cell.count
        ));
    }
    out
}

pub fn crosstab_json(tab: &CrossTab, meta: &OutputMeta) -> String {
    json_with_meta(tab, meta)
}

/// Matrix layout: one block per system, categories of the
/// first dimension as rows, of the second as columns, with Avg margins.
pub fn crosstab_markdown(tab: &CrossTab, meta: &OutputMeta) -> String {
    let fmt = |cell: &Option<crate::breakdown::GroupCell>| match cell {
        Some(c) => format!("{:.2} / {:.2} / {:.2}", c.cer, c.wer, c.sw_wer),
        None => "-".to_string(),
    };
    let mut out = meta.markdown_header();
    for system in &tab.systems {
        out.push_str(&format!(
            "\n### {} ({} x {}, cells are CER / WER / SW-WER)\n\n",
            system.system_name, tab.row_dimension, tab.col_dimension
        ));
        out.push_str(&format!("| {} | ", tab.row_dimension));
        out.push_str(&system.col_categories.join(" | "));
        out.push_str(" | Avg |\n|");
        out.push_str(&"---|".repeat(system.col_categories.len() + 2));
        out.push('\n');
        for (ri, row_cat) in system.row_categories.iter().enumerate() {
            let cells: Vec<String> = system.cells[ri].iter().map(&fmt).collect();
            out.push_str(&format!(
                "| {} | {} | {} |\n",
                row_cat,
                cells.join(" | "),
                fmt(&system.row_margins[ri])
            ));
        }
        let margins: Vec<String> = system.col_margins.iter().map(&fmt).collect();
        out.push_str(&format!("| Avg | {} | {} |\n", margins.join(" | "), fmt(&system.overall)));
    }
    out
}

pub fn stats_json(stats: &DatasetStats, meta: &OutputMeta) -> String {
    json_with_meta(stats, meta)
}

pub fn stats_markdown(stats: &DatasetStats, meta: &OutputMeta) -> String {
    let mut out = meta.markdown_header();
    out.push_str("| Statistic | Value |\n|---|---|\n");
    out.push_str(&format!("| Utterances | {} |\n", stats.utterance_count));
    out.push_str(&format!("| Total duration (h) | {:.2} |\n", stats.total_duration_h));
    if let (Some(min), Some(max), Some(avg)) = (stats.min_dur_s, stats.max_dur_s, stats.avg_dur_s) {
        out.push_str(&format!("| Min / Max duration (s) | {min:.1} / {max:.1} |\n"));
        out.push_str(&format!("| Avg duration (s) | {avg:.2} |\n"));
    }
    out.push_str(&format!("| Words | {} |\n", stats.word_count));
    out.push_str(&format!("| Unique words | {} |\n", stats.unique_word_count));
    if let Some(speakers) = stats.speaker_count {
        out.push_str(&format!("| Speakers | {speakers} |\n"));
    }
    out.push_str(&format!("| Missing durations | {} |\n", stats.missing_duration_count));
    out
}

pub fn histogram_csv(stats: &DatasetStats, meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str("bin_start_s,bin_end_s,count\n");
    for bin in &stats.histogram {
        out.push_str(&format!("{},{},{}\n", bin.start_s, bin.end_s, bin.count));
    }
    out
}

pub fn profile_json(profile: &ErrorProfile, meta: &OutputMeta) -> String {
    json_with_meta(profile, meta)
}

pub fn profile_markdown(profile: &ErrorProfile, meta: &OutputMeta) -> String {
    let mut out = meta.markdown_header();
    out.push_str(&format!(
        "## Error profile: {} ({} segments)\n\n| Category | Count | Proportion |\n|---|---|---|\n",
        profile.system_name, profile.segment_count
    ));
    for (category, count) in &profile.counts {
        out.push_str(&format!(
            "| {} | {} | {:.4} |\n",
            category, count, profile.proportions[category]
        ));
    }
    if !profile.flagged_utterance_ids.is_empty() {
        out.push_str("\nFlagged as possible hallucinations: ");
        out.push_str(&profile.flagged_utterance_ids.join(", "));
        out.push('\n');
    }
    out
}

pub fn correlation_json(report: &CorrelationReport, meta: &OutputMeta) -> String {
    json_with_meta(report, meta)
}

/// Per-utterance scatter rows backing the correlation plots.
pub fn scatter_csv(report: &CorrelationReport, meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str("id,wer,cer,sw_wer\n");
    for row in &report.scatter {
        out.push_str(&format!("{},{},{},{}\n", csv_field(&row.id), row.wer, row.cer, row.sw_wer));
    }
    out
}

pub fn bar_csv(rows: &[(String, String, f64, usize)], dimension: &str, meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str(&format!("system,{dimension},sw_wer,count\n"));
    for (system, category, sw_wer, count) in rows {
        out.push_str(&format!(
            "{},{},{sw_wer:.2},{count}\n",
            csv_field(system),
            csv_field(category)
        ));
    }
    out
}

pub fn box_csv(rows: &[BoxStats], dimension: &str, meta: &OutputMeta) -> String {
    let mut out = meta.comment_header();
    out.push_str(&format!(
        "system,{dimension},min,q1,median,q3,max,count,outliers\n"
    ));
    for b in rows {
        let outliers: Vec<String> = b.outliers.iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{}\n",
            csv_field(&b.system_name),
            csv_field(&b.category),
            b.min,
            b.q1,
            b.median,
            b.q3,
            b.max,
            b.count,
            csv_field(&outliers.join(";"))
        ));
    }
    out
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{score_utterance, AggregationMode};
    use crate::textnorm::NormalizationConfig;

    #[test]
    fn score_wire_has_exact_keys() {
        let score = score_utterance("u1", "sys", "a b c", "a x c", &NormalizationConfig::default())
            .unwrap();
        let jsonl = scores_jsonl(&[score]);
        let value: serde_json::Value = serde_json::from_str(jsonl.trim()).unwrap();
        let object = value.as_object().unwrap();
        let expected = [
            "id", "system", "wer", "cer", "sw_wer", "C", "S_count", "S_weighted", "I", "D",
            "N_sub", "seg_count",
        ];
        assert_eq!(object.len(), expected.len());
        for key in expected {
            assert!(object.contains_key(key), "missing key {key}");
        }
    }

    #[test]
    fn tables_print_two_decimals_and_carry_meta() {
        let meta = OutputMeta::new("default", "macro");
        let summary = crate::metrics::CorpusSummary {
            system_name: "sys".to_string(),
            utterance_count: 1,
            mode: AggregationMode::Macro,
            macro_wer: 19.3,
            macro_cer: 8.754,
            macro_sw_wer: 15.6789,
            micro_wer: 0.0,
            micro_cer: 0.0,
            micro_sw_wer: 0.0,
        };
        let csv = summary_csv(std::slice::from_ref(&summary), &meta);
        assert!(csv.starts_with("# asreval v"));
        assert!(csv.contains("sys,8.75,19.30,15.68"));
        let md = summary_markdown(&[summary], &meta);
        assert!(md.contains("| sys | 8.75 | 19.30 | 15.68 |"));
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }
}
