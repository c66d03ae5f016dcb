//! Aligned plain-text tables and machine-readable JSON reports.
//!
//! Renders corpus statistics (with an optional filtered subset shown in
//! parentheses), generation-metric summaries, when-prediction timing
//! accuracy, n-gram source overlap, and bootstrap comparison outcomes.
//! Score cells are percentages with one decimal; counts are plain integers.
//! All output is UTF-8 text.

use serde_json::{json, Value};

use crate::corpus::CorpusStats;
use crate::filters::StatsBundle;
use crate::metrics::{BootstrapOutcome, Metric, MetricReport, WhenAccuracyTable, Winner};

/// Formats a value already on its display scale with one decimal.
fn fmt1(x: f64) -> String {
    format!("{x:.1}")
}

/// Formats a `[0, 1]` score as a percentage with one decimal.
fn pct1(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn metric_label(metric: Metric) -> &'static str {
    match metric {
        Metric::Bleu4 => "BLEU-4",
        Metric::Meteor => "METEOR",
        Metric::Rouge1 => "ROUGE-1",
        Metric::Rouge2 => "ROUGE-2",
        Metric::RougeL => "ROUGE-L",
    }
}

fn width(cell: &str) -> usize {
    cell.chars().count()
}

/// Per-column display width over all rows.
fn column_widths(rows: &[Vec<String>]) -> Vec<usize> {
    let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; n_cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(width(cell));
        }
    }
    widths
}

/// Renders rows at the given widths: first column left-aligned, the rest
/// right-aligned, two spaces between columns, trailing blanks trimmed.
fn render_at_widths(rows: &[Vec<String>], widths: &[usize]) -> String {
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let pad = " ".repeat(widths[i].saturating_sub(width(cell)));
            if i == 0 {
                line.push_str(cell);
                line.push_str(&pad);
            } else {
                line.push_str(&pad);
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn render_rows(rows: &[Vec<String>]) -> String {
    render_at_widths(rows, &column_widths(rows))
}

fn stats_cell(
    main: Option<&CorpusStats>,
    filt: Option<&CorpusStats>,
    parenthesize: bool,
    field: &dyn Fn(&CorpusStats) -> String,
) -> String {
    let Some(main) = main else {
        return "-".to_string();
    };
    let value = field(main);
    if !parenthesize {
        return value;
    }
    let inner = filt.map(|s| field(s)).unwrap_or_else(|| "-".to_string());
    format!("{value} ({inner})")
}

/// Corpus-statistics table: one column per split part plus a total column;
/// rows cover example counts (split by description source) and the average
/// discussion shape. With `filtered`, every cell appends the corresponding
/// filtered-subset value in parentheses; split parts absent from the bundle
/// render as "-".
pub fn stats_table(full: &StatsBundle, filtered: Option<&StatsBundle>) -> String {
    #[allow(clippy::type_complexity)]
    let fields: [(&str, Box<dyn Fn(&CorpusStats) -> String>); 9] = [
        ("Projects", Box::new(|s| s.n_projects().to_string())),
        ("Examples", Box::new(|s| s.n_examples().to_string())),
        ("  # Commit messages", Box::new(|s| s.n_commit_messages().to_string())),
        ("  # PR titles", Box::new(|s| s.n_pr_titles().to_string())),
        ("Avg T", Box::new(|s| fmt1(s.avg_t()))),
        ("Avg t_g", Box::new(|s| fmt1(s.avg_t_g()))),
        ("Avg utterance length (#tokens)", Box::new(|s| fmt1(s.avg_utterance_len()))),
        ("Avg title length (#tokens)", Box::new(|s| fmt1(s.avg_title_len()))),
        ("Avg description length (#tokens)", Box::new(|s| fmt1(s.avg_description_len()))),
    ];
    let columns: [(&str, Option<&CorpusStats>, Option<&CorpusStats>); 4] = [
        ("Train", full.train.as_ref(), filtered.and_then(|f| f.train.as_ref())),
        ("Valid", full.valid.as_ref(), filtered.and_then(|f| f.valid.as_ref())),
        ("Test", full.test.as_ref(), filtered.and_then(|f| f.test.as_ref())),
        ("Total", Some(&full.total), filtered.map(|f| &f.total)),
    ];
    let mut rows: Vec<Vec<String>> = Vec::new();
    rows.push(
        std::iter::once(String::new())
            .chain(columns.iter().map(|(h, _, _)| h.to_string()))
            .collect(),
    );
    for (label, field) in &fields {
        let mut row = vec![label.to_string()];
        for (_, main, filt) in &columns {
            row.push(stats_cell(*main, *filt, filtered.is_some(), field));
        }
        rows.push(row);
    }
    render_rows(&rows)
}

/// Generation-metric summary: one row per system, aggregate scores as
/// percentages. Only the requested metrics appear as columns, in the given
/// order.
pub fn generation_table(rows: &[(&str, &MetricReport)], metrics: &[Metric]) -> String {
    let mut table: Vec<Vec<String>> = Vec::new();
    table.push(
        std::iter::once("Model".to_string())
            .chain(metrics.iter().map(|m| metric_label(*m).to_string()))
            .collect(),
    );
    for (name, report) in rows {
        let aggregate = report.aggregate();
        let mut row = vec![name.to_string()];
        for metric in metrics {
            row.push(pct1(aggregate.get(*metric)));
        }
        table.push(row);
    }
    render_rows(&table)
}

const TG_BUCKETS: [&str; 5] = ["1", "2", "3", "4", "≥5"];

/// Timing-accuracy table: one column per named evaluation set. The first
/// three rows split predictions into early / never-by-t_g / exactly-on-time;
/// the indented rows break the on-time rate down by gold step. A trailing
/// line reports each set's average lead (t_g − t_p over predictions with
/// t_p ≤ t_g); buckets with no examples render as "-".
pub fn when_table(columns: &[(&str, &WhenAccuracyTable)]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    rows.push(
        std::iter::once(String::new())
            .chain(columns.iter().map(|(name, _)| name.to_string()))
            .collect(),
    );
    let overall: [(&str, fn(&WhenAccuracyTable) -> f64); 3] = [
        ("t_p < t_g", |t| t.pct_tp_lt_tg),
        ("t_p = None", |t| t.pct_tp_none),
        ("t_p = t_g", |t| t.pct_tp_eq_tg),
    ];
    for (label, field) in overall {
        let mut row = vec![label.to_string()];
        for (_, table) in columns {
            row.push(fmt1(field(table)));
        }
        rows.push(row);
    }
    for bucket in TG_BUCKETS {
        let label =
            if bucket == "≥5" { "  t_g ≥ 5".to_string() } else { format!("  t_g = {bucket}") };
        let mut row = vec![label];
        for (_, table) in columns {
            row.push(
                table
                    .by_tg
                    .get(bucket)
                    .map(|b| fmt1(b.pct_tp_eq_tg))
                    .unwrap_or_else(|| "-".to_string()),
            );
        }
        rows.push(row);
    }
    let mut out = render_rows(&rows);
    out.push('\n');
    let leads: Vec<String> = columns
        .iter()
        .map(|(name, table)| {
            let lead =
                table.avg_lead.map(|l| format!("{l:.3}")).unwrap_or_else(|| "-".to_string());
            format!("{name} {lead}")
        })
        .collect();
    out.push_str(&format!("Avg lead (t_g - t_p when t_p <= t_g): {}\n", leads.join(", ")));
    out
}

/// One system's n-gram source breakdown: the percentage of its output's
/// unigrams and bigrams found in the title, and found in U_1..U_t_g but not
/// in the title. Values are already percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRow {
    pub name: String,
    pub title: (f64, f64),
    pub utterances_only: (f64, f64),
}

/// N-gram overlap table: one row per system (conventionally ending with a
/// "Reference" row), grouped columns for title overlap and utterance-only
/// overlap at n = 1, 2.
pub fn overlap_table(rows: &[OverlapRow]) -> String {
    let mut table: Vec<Vec<String>> = Vec::new();
    table.push(vec!["Model".into(), "1".into(), "2".into(), "1".into(), "2".into()]);
    for row in rows {
        table.push(vec![
            row.name.clone(),
            fmt1(row.title.0),
            fmt1(row.title.1),
            fmt1(row.utterances_only.0),
            fmt1(row.utterances_only.1),
        ]);
    }
    let mut widths = column_widths(&table);
    // Two header lines: group labels above, then n values. Each group label
    // sits right-aligned over its two columns; widen a group's trailing
    // column when the label is wider than the columns it spans.
    let title_label = "Title";
    let utterances_label = "U_1..U_t_g only";
    let title_span = widths[1] + 2 + widths[2];
    if width(title_label) > title_span {
        widths[2] += width(title_label) - title_span;
    }
    let utterances_span = widths[3] + 2 + widths[4];
    if width(utterances_label) > utterances_span {
        widths[4] += width(utterances_label) - utterances_span;
    }
    let mut group = String::new();
    group.push_str(&" ".repeat(widths[0] + 2));
    group.push_str(&" ".repeat((widths[1] + 2 + widths[2]).saturating_sub(width(title_label))));
    group.push_str(title_label);
    group.push_str("  ");
    group.push_str(
        &" ".repeat((widths[3] + 2 + widths[4]).saturating_sub(width(utterances_label))),
    );
    group.push_str(utterances_label);
    let mut out = String::new();
    out.push_str(group.trim_end());
    out.push('\n');
    out.push_str(&render_at_widths(&table, &widths));
    out
}

/// Bootstrap comparison outcomes per metric. `label_a` and `label_b` name
/// the two systems; the winner column shows the better system's label, or
/// "-" when the observed means are exactly equal.
pub fn significance_table(
    rows: &[(Metric, BootstrapOutcome)],
    label_a: &str,
    label_b: &str,
) -> String {
    let mut table: Vec<Vec<String>> = Vec::new();
    table.push(vec!["Metric".into(), "p-value".into(), "significant".into(), "winner".into()]);
    for (metric, outcome) in rows {
        table.push(vec![
            metric_label(*metric).to_string(),
            format!("{:.4}", outcome.p_value),
            if outcome.significant { "yes" } else { "no" }.to_string(),
            match outcome.winner {
                Some(Winner::A) => label_a.to_string(),
                Some(Winner::B) => label_b.to_string(),
                None => "-".to_string(),
            },
        ]);
    }
    render_rows(&table)
}

/// Side-by-side pipeline evaluation: metric rows for the classifier-timed
/// run (@t_p) and the gold-timed run (@t_g), then their paired-bootstrap
/// comparison.
pub fn pipeline_tables(
    at_tp: &MetricReport,
    at_tg: &MetricReport,
    significance: &[(Metric, BootstrapOutcome)],
) -> String {
    let mut out = generation_table(&[("@t_p", at_tp), ("@t_g", at_tg)], &Metric::ALL);
    out.push('\n');
    out.push_str(&significance_table(significance, "@t_p", "@t_g"));
    out
}

fn significance_json(significance: Option<(&str, &str, &[(Metric, BootstrapOutcome)])>) -> Value {
    match significance {
        None => json!({}),
        Some((a, b, rows)) => {
            let metrics: serde_json::Map<String, Value> = rows
                .iter()
                .map(|(metric, outcome)| {
                    (
                        metric.name().to_string(),
                        json!({
                            "p_value": outcome.p_value,
                            "significant": outcome.significant,
                            "winner": outcome.winner.map(|w| match w {
                                Winner::A => a,
                                Winner::B => b,
                            }),
                        }),
                    )
                })
                .collect();
            json!({ "a": a, "b": b, "metrics": metrics })
        }
    }
}

/// Machine-readable generation report: `aggregate` holds the mean scores on
/// the raw 0–1 scale plus the example count; `significance` holds any
/// bootstrap comparison (empty object otherwise); `by_tg` is empty here (it
/// belongs to the timing report).
fn aggregate_entry(report: &MetricReport) -> Value {
    let mut entry = serde_json::to_value(report.aggregate()).expect("scores serialize");
    entry["n"] = json!(report.n());
    entry
}

pub fn gen_json(
    reports: &[(&str, &MetricReport)],
    significance: Option<(&str, &str, &[(Metric, BootstrapOutcome)])>,
) -> Value {
    let aggregate: serde_json::Map<String, Value> = reports
        .iter()
        .map(|(name, report)| (name.to_string(), aggregate_entry(report)))
        .collect();
    json!({
        "aggregate": aggregate,
        "by_tg": {},
        "significance": significance_json(significance),
    })
}

/// Machine-readable end-to-end report: generation aggregates of the same
/// system cut at the predicted and at the gold step, plus their paired
/// comparison.
pub fn pipeline_json(
    at_tp: &MetricReport,
    at_tg: &MetricReport,
    significance: &[(Metric, BootstrapOutcome)],
) -> Value {
    gen_json(
        &[("@t_p", at_tp), ("@t_g", at_tg)],
        Some(("@t_p", "@t_g", significance)),
    )
}

/// Machine-readable timing report: overall percentages and average lead
/// under `aggregate`, per-gold-step accuracy under `by_tg`.
pub fn when_json(table: &WhenAccuracyTable) -> Value {
    let by_tg: serde_json::Map<String, Value> = table
        .by_tg
        .iter()
        .map(|(bucket, row)| {
            (bucket.clone(), json!({ "n": row.n, "pct_tp_eq_tg": row.pct_tp_eq_tg }))
        })
        .collect();
    json!({
        "aggregate": {
            "n": table.n,
            "pct_tp_lt_tg": table.pct_tp_lt_tg,
            "pct_tp_none": table.pct_tp_none,
            "pct_tp_eq_tg": table.pct_tp_eq_tg,
            "avg_lead": table.avg_lead,
        },
        "by_tg": by_tg,
        "significance": {},
    })
}
