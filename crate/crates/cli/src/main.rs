//! Batch evaluation CLI. All data outputs go to files under `--out`;
//! stdout/stderr carry logs only.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asreval::breakdown;
use asreval::corpus::{self, HypothesisSet, LoadMode, UtteranceRecord};
use asreval::metrics::{self, AggregationMode, CorpusSummary, UtteranceScore};
use asreval::report::{self, OutputMeta};
use asreval::taxonomy::{
    self, Lexicon, DEFAULT_HALLUC_INS_TAU, DEFAULT_HALLUC_LEN_RHO, DEFAULT_NEAR_MATCH_THETA,
};
use asreval::textnorm::NormalizationConfig;
use asreval::{Error, Result};

#[derive(Parser)]
#[command(
    name = "asreval",
    version,
    about = "Corpus-scale ASR evaluation: WER, CER, and substitution-weighted WER"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score hypothesis transcripts against a reference manifest.
    Evaluate(EvaluateArgs),
    /// Per-category metric breakdowns over manifest metadata.
    Breakdown(BreakdownArgs),
    /// Descriptive statistics of a reference manifest.
    Stats(StatsArgs),
    /// Error-taxonomy profile of each system's substitution segments.
    Diagnose(DiagnoseArgs),
    /// Side-by-side system comparison with best values marked.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Reference manifest (JSONL or TSV with header).
    #[arg(long, value_name = "PATH")]
    refs: PathBuf,

    /// Normalization profile: "default" or a path to a profile file.
    #[arg(long, value_name = "NAME|PATH", default_value = "default")]
    norm: String,

    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Comma-separated output formats.
    #[arg(long, value_name = "LIST", default_value = "csv,md,json")]
    format: String,

    /// Fail on the first manifest violation.
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,

    /// Warn on manifest violations and keep going.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct HypArgs {
    /// Hypothesis file per system, as SYSTEM=PATH (repeatable).
    #[arg(long = "hyps", value_name = "SYSTEM=PATH", required = true)]
    hyps: Vec<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    hyp: HypArgs,

    /// Aggregation mode: macro or micro.
    #[arg(long, value_name = "MODE", default_value = "macro")]
    agg: String,
}

#[derive(Args)]
struct BreakdownArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    hyp: HypArgs,

    /// Grouping dimensions, e.g. "accent" or "formality,acoustic_environment".
    #[arg(long, value_name = "DIM[,DIM]")]
    by: String,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    hyp: HypArgs,

    /// Segment CER threshold for the near-match category.
    #[arg(long, value_name = "F", default_value_t = DEFAULT_NEAR_MATCH_THETA)]
    near_match_theta: f64,

    /// Insertion-ratio threshold for hallucination flagging.
    #[arg(long, value_name = "F", default_value_t = DEFAULT_HALLUC_INS_TAU)]
    halluc_ins_tau: f64,

    /// Hypothesis/reference length-ratio threshold for hallucination flagging.
    #[arg(long, value_name = "F", default_value_t = DEFAULT_HALLUC_LEN_RHO)]
    halluc_len_rho: f64,

    /// Informal/formal word-pair lexicon (TSV).
    #[arg(long, value_name = "PATH")]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    hyp: HypArgs,

    /// Aggregation mode: macro or micro.
    #[arg(long, value_name = "MODE", default_value = "macro")]
    agg: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not failures.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(err)) => {
            eprintln!("I/O error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evaluate(args) => evaluate(args),
        Command::Breakdown(args) => breakdown_cmd(args),
        Command::Stats(args) => stats(args),
        Command::Diagnose(args) => diagnose(args),
        Command::Compare(args) => compare(args),
    }
}

struct Formats {
    csv: bool,
    md: bool,
    json: bool,
}

fn parse_formats(list: &str) -> Result<Formats> {
    let mut formats = Formats {
        csv: false,
        md: false,
        json: false,
    };
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "csv" => formats.csv = true,
            "md" => formats.md = true,
            "json" => formats.json = true,
            other => {
                return Err(Error::Config(format!(
                    "unknown output format '{other}' (expected csv, md, json)"
                )))
            }
        }
    }
    if !(formats.csv || formats.md || formats.json) {
        return Err(Error::Config("no output formats selected".to_string()));
    }
    Ok(formats)
}

fn parse_agg(mode: &str) -> Result<AggregationMode> {
    mode.parse()
}

fn load_mode(common: &CommonArgs) -> LoadMode {
    if common.lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    }
}

fn load_refs(common: &CommonArgs) -> Result<Vec<UtteranceRecord>> {
    let (records, issues) = corpus::load_manifest(&common.refs, load_mode(common))?;
    for issue in &issues {
        eprintln!(
            "{}:{}: {:?}: {}",
            common.refs.display(),
            issue.line,
            issue.severity,
            issue.message
        );
    }
    Ok(records)
}

fn load_hyp_sets(
    hyp: &HypArgs,
    records: &[UtteranceRecord],
    common: &CommonArgs,
) -> Result<Vec<HypothesisSet>> {
    let mut seen = BTreeSet::new();
    let mut sets = Vec::new();
    for spec in &hyp.hyps {
        let (system, path) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("--hyps expects SYSTEM=PATH, got '{spec}'"))
        })?;
        if system.is_empty() {
            return Err(Error::Config(format!("empty system name in '{spec}'")));
        }
        if !seen.insert(system.to_string()) {
            return Err(Error::Config(format!("duplicate system name '{system}'")));
        }
        let set = corpus::load_hypotheses(Path::new(path), system)?;
        if common.lenient {
            if let Err(err) = set.validate_against(records) {
                eprintln!("warning ({system}): {err}");
            }
        } else {
            set.validate_against(records)?;
        }
        sets.push(set);
    }
    Ok(sets)
}

fn norm_config(common: &CommonArgs) -> Result<NormalizationConfig> {
    NormalizationConfig::from_name_or_path(&common.norm)
}

fn write_output(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn score_all(
    records: &[UtteranceRecord],
    sets: &[HypothesisSet],
    config: &NormalizationConfig,
) -> Result<Vec<Vec<UtteranceScore>>> {
    sets.iter()
        .map(|set| metrics::score_corpus(records, set, config))
        .collect()
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let agg = parse_agg(&args.agg)?;
    let formats = parse_formats(&args.common.format)?;
    let config = norm_config(&args.common)?;
    let records = load_refs(&args.common)?;
    let sets = load_hyp_sets(&args.hyp, &records, &args.common)?;
    let meta = OutputMeta::new(&config.profile, &args.agg);
    let out = &args.common.out;

    let mut summaries: Vec<CorpusSummary> = Vec::new();
    for (set, scores) in sets.iter().zip(score_all(&records, &sets, &config)?) {
        let system = &set.system_name;
        write_output(
            out,
            &format!("scores_{system}.jsonl"),
            &report::scores_jsonl(&scores),
        )?;
        let summary = metrics::aggregate_corpus(&scores, agg)?;
        if formats.json {
            write_output(
                out,
                &format!("summary_{system}.json"),
                &report::summary_json(&summary, &meta),
            )?;
        }
        if scores.len() >= 2 {
            // Degenerate corpora (a constant metric column) have no
            // defined correlation; skip the emitter rather than fail.
            match metrics::metric_correlation(&scores) {
                Ok(correlation) => {
                    if formats.json {
                        write_output(
                            out,
                            &format!("correlation_{system}.json"),
                            &report::correlation_json(&correlation, &meta),
                        )?;
                    }
                    if formats.csv {
                        write_output(
                            out,
                            &format!("scatter_{system}.csv"),
                            &report::scatter_csv(&correlation, &meta),
                        )?;
                    }
                }
                Err(Error::DegenerateColumn(column)) => {
                    eprintln!("skipping correlation for {system}: {column} has zero variance");
                }
                Err(err) => return Err(err),
            }
        }
        summaries.push(summary);
    }

    if formats.csv {
        write_output(out, "summary.csv", &report::summary_csv(&summaries, &meta))?;
    }
    if formats.md {
        write_output(out, "summary.md", &report::summary_markdown(&summaries, &meta))?;
    }
    if summaries.len() > 1 {
        write_comparison(out, &summaries, &formats, &meta)?;
    }
    Ok(())
}

fn write_comparison(
    out: &Path,
    summaries: &[CorpusSummary],
    formats: &Formats,
    meta: &OutputMeta,
) -> Result<()> {
    let rows = breakdown::compare_systems(summaries)?;
    if formats.csv {
        write_output(out, "comparison.csv", &report::comparison_csv(&rows, meta))?;
    }
    if formats.md {
        write_output(out, "comparison.md", &report::comparison_markdown(&rows, meta))?;
    }
    if formats.json {
        write_output(out, "comparison.json", &report::comparison_json(&rows, meta))?;
    }
    Ok(())
}

fn breakdown_cmd(args: BreakdownArgs) -> Result<()> {
    let formats = parse_formats(&args.common.format)?;
    let config = norm_config(&args.common)?;
    let records = load_refs(&args.common)?;
    let sets = load_hyp_sets(&args.hyp, &records, &args.common)?;
    let meta = OutputMeta::new(&config.profile, "macro");
    let out = &args.common.out;

    let dimensions: Vec<String> = args
        .by
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if dimensions.is_empty() {
        return Err(Error::Config("--by requires at least one dimension".to_string()));
    }

    let all_scores: Vec<UtteranceScore> = score_all(&records, &sets, &config)?
        .into_iter()
        .flatten()
        .collect();
    let table = breakdown::group_scores(&all_scores, &records, &dimensions)?;

    if formats.csv {
        write_output(out, "breakdown.csv", &report::breakdown_csv(&table, &meta))?;
    }
    if formats.md {
        write_output(out, "breakdown.md", &report::breakdown_markdown(&table, &meta))?;
    }
    if formats.json {
        write_output(out, "breakdown.json", &report::breakdown_json(&table, &meta))?;
    }

    if dimensions.len() == 2 {
        let tab = breakdown::cross_tabulate(&table)?;
        if formats.md {
            write_output(out, "crosstab.md", &report::crosstab_markdown(&tab, &meta))?;
        }
        if formats.json {
            write_output(out, "crosstab.json", &report::crosstab_json(&tab, &meta))?;
        }
    } else if dimensions.len() == 1 && formats.csv {
        let bars = breakdown::figure_bar_data(&all_scores, &records, &dimensions[0])?;
        write_output(out, "bar.csv", &report::bar_csv(&bars, &dimensions[0], &meta))?;
        let boxes = breakdown::box_plot_data(&all_scores, &records, &dimensions[0])?;
        write_output(out, "box.csv", &report::box_csv(&boxes, &dimensions[0], &meta))?;
    }
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let formats = parse_formats(&args.common.format)?;
    let config = norm_config(&args.common)?;
    let records = load_refs(&args.common)?;
    let stats = corpus::dataset_statistics(&records, &config)?;
    let meta = OutputMeta::new(&config.profile, "macro");
    let out = &args.common.out;
    if formats.json {
        write_output(out, "stats.json", &report::stats_json(&stats, &meta))?;
    }
    if formats.md {
        write_output(out, "stats.md", &report::stats_markdown(&stats, &meta))?;
    }
    if formats.csv {
        write_output(out, "histogram.csv", &report::histogram_csv(&stats, &meta))?;
    }
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let formats = parse_formats(&args.common.format)?;
    let config = norm_config(&args.common)?;
    let records = load_refs(&args.common)?;
    let sets = load_hyp_sets(&args.hyp, &records, &args.common)?;
    let lexicon = args.lexicon.as_deref().map(Lexicon::from_file).transpose()?;
    let meta = OutputMeta::new(&config.profile, "macro");
    let out = &args.common.out;

    for (set, scores) in sets.iter().zip(score_all(&records, &sets, &config)?) {
        let profile = taxonomy::error_profile(
            &scores,
            lexicon.as_ref(),
            args.near_match_theta,
            args.halluc_ins_tau,
            args.halluc_len_rho,
        )?;
        let system = &set.system_name;
        if formats.json {
            write_output(
                out,
                &format!("profile_{system}.json"),
                &report::profile_json(&profile, &meta),
            )?;
        }
        if formats.md {
            write_output(
                out,
                &format!("profile_{system}.md"),
                &report::profile_markdown(&profile, &meta),
            )?;
        }
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let agg = parse_agg(&args.agg)?;
    let formats = parse_formats(&args.common.format)?;
    let config = norm_config(&args.common)?;
    let records = load_refs(&args.common)?;
    let sets = load_hyp_sets(&args.hyp, &records, &args.common)?;
    let meta = OutputMeta::new(&config.profile, &args.agg);

    let summaries: Vec<CorpusSummary> = score_all(&records, &sets, &config)?
        .iter()
        .map(|scores| metrics::aggregate_corpus(scores, agg))
        .collect::<Result<_>>()?;
    write_comparison(&args.common.out, &summaries, &formats, &meta)
}
