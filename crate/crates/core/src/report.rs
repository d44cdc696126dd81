//! Table and plot-data emission.
//!
//! Statistics come from [`crate::stats`]; this module only arranges and
//! formats them. JSON keeps full precision. Markdown rounds to two decimals.
//! CSV keeps full precision unless a digit count is given.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runner::Aggregate;
use crate::stats::reference::{self, ReferenceRow};
use crate::stats::{
    group_samples, improvement_groups, improvement_rows, pgg_stats, table1_report, Denominator, GroupBy,
    ImprovementClass, ImprovementRow, PggStats, StatsError, SummaryRow, Table1, Table1Options,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o error at {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Md,
}

pub const TABLE1_COLUMNS: [&str; 7] = [
    "Scenario",
    "Normal C ratio",
    "OoS C ratio",
    "Difference",
    "SE",
    "z-score",
    "p-value",
];

fn num(x: f64, digits: Option<usize>) -> String {
    match digits {
        Some(d) => {
            let s = format!("{x:.d$}");
            // Avoid "-0.00".
            if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
        None => x.to_string(),
    }
}

fn table1_cells(t: &Table1, digits: Option<usize>) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                num(r.test.p1, digits),
                num(r.test.p2, digits),
                num(r.test.diff, digits),
                num(r.test.se, digits),
                num(r.test.z, digits),
                format!("{}{}", num(r.test.p_value, digits), r.test.stars),
            ]
        })
        .collect();
    let summary = |label: &str, s: &SummaryRow| {
        vec![
            label.to_string(),
            num(s.normal, digits),
            num(s.oos, digits),
            num(s.diff, digits),
            num(s.se, digits),
            num(s.z, digits),
            num(s.p_value, digits),
        ]
    };
    out.push(summary("AVERAGE", &t.average));
    out.push(summary("MEDIAN", &t.median));
    out
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn to_markdown(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    s.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for row in rows {
        s.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    s
}

pub fn table1_csv(t: &Table1, digits: Option<usize>) -> String {
    to_csv(&TABLE1_COLUMNS, &table1_cells(t, digits))
}

pub fn table1_markdown(t: &Table1) -> String {
    to_markdown(&TABLE1_COLUMNS, &table1_cells(t, Some(2)))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

pub fn render_table1(t: &Table1, format: Format) -> String {
    match format {
        Format::Json => to_json(t),
        Format::Csv => table1_csv(t, None),
        Format::Md => table1_markdown(t),
    }
}

/// A computed value that differs from the published one by more than the
/// tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub scenario: String,
    pub column: &'static str,
    pub computed: f64,
    pub printed: f64,
}

/// Compares each row with the published values for the same scenario.
/// Rows without a published counterpart are skipped.
pub fn compare_to_reference(t: &Table1, tolerance: f64) -> Vec<Divergence> {
    let mut out = Vec::new();
    let mut check = |scenario: &str, computed: [f64; 6], r: &ReferenceRow| {
        let printed = [r.normal, r.oos, r.diff, r.se, r.z, r.p_value];
        for ((column, c), p) in TABLE1_COLUMNS[1..].iter().zip(computed).zip(printed) {
            if (c - p).abs() > tolerance {
                out.push(Divergence {
                    scenario: scenario.to_string(),
                    column,
                    computed: c,
                    printed: p,
                });
            }
        }
    };
    for row in &t.rows {
        if let Some(r) = reference::lookup(&row.scenario) {
            let x = &row.test;
            check(&row.scenario, [x.p1, x.p2, x.diff, x.se, x.z, x.p_value], r);
        }
    }
    if t.rows.len() == reference::TABLE1.len() && t.rows.iter().all(|r| reference::lookup(&r.scenario).is_some()) {
        for (label, s, r) in [
            ("AVERAGE", &t.average, &reference::TABLE1_AVERAGE),
            ("MEDIAN", &t.median, &reference::TABLE1_MEDIAN),
        ] {
            check(label, [s.normal, s.oos, s.diff, s.se, s.z, s.p_value], r);
        }
    }
    out
}

pub fn divergences_markdown(divergences: &[Divergence]) -> String {
    if divergences.is_empty() {
        return "All values agree with the published table to the printed precision.\n".into();
    }
    let mut s = String::from("Differences from the published table:\n\n");
    for d in divergences {
        s.push_str(&format!(
            "- {} {}: computed {:.4}, published {}\n",
            d.scenario, d.column, d.computed, d.printed
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub label: String,
    pub coop_rate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub se: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub group_by: GroupBy,
    pub bars: Vec<Bar>,
}

pub fn coop_bars(agg: &Aggregate, by: GroupBy, denominator: Denominator) -> Result<PlotData, StatsError> {
    let bars = group_samples(agg, by, denominator)?
        .into_iter()
        .map(|(label, s)| {
            let p = s.ratio();
            Bar {
                label,
                coop_rate: p,
                se: (p * (1.0 - p) / s.n as f64).sqrt(),
                n: s.n,
            }
        })
        .collect();
    Ok(PlotData { group_by: by, bars })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementBar {
    pub label: String,
    /// `None` for degenerate groups.
    pub value: Option<f64>,
    pub class: ImprovementClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementPlot {
    pub group_by: GroupBy,
    pub bars: Vec<ImprovementBar>,
    /// Mean over non-degenerate bars; drawn as a horizontal line.
    pub average: Option<f64>,
}

fn to_bars(rows: &[ImprovementRow]) -> Vec<ImprovementBar> {
    rows.iter()
        .map(|r| ImprovementBar {
            label: r.label.clone(),
            value: r.result.value_f64(),
            class: r.result.class,
        })
        .collect()
}

fn average(bars: &[ImprovementBar]) -> Option<f64> {
    let values: Vec<f64> = bars.iter().filter_map(|b| b.value).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn improvement_plot(
    c70: &Aggregate,
    c7: &Aggregate,
    c7ft: &Aggregate,
    by: GroupBy,
    denominator: Denominator,
) -> Result<ImprovementPlot, StatsError> {
    let bars = to_bars(&improvement_groups(c70, c7, c7ft, by, denominator)?);
    Ok(ImprovementPlot {
        group_by: by,
        average: average(&bars),
        bars,
    })
}

pub const IMPROVEMENT_COLUMNS: [&str; 6] = ["Scenario", "C70", "C7", "C7 fine-tuned", "Improvement", "Class"];

/// Per-scenario improvement table. `percent` scales values by 100.
pub fn render_improvement(rows: &[ImprovementRow], format: Format, percent: bool) -> String {
    if format == Format::Json {
        return to_json(&to_bars(rows));
    }
    let digits = (format == Format::Md).then_some(2);
    let scale = if percent { 100.0 } else { 1.0 };
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let f = |x: &crate::Rational| num(crate::Scalar::to_f64_lossy(x), digits);
            vec![
                r.label.clone(),
                f(&r.result.c70),
                f(&r.result.c7),
                f(&r.result.c7ft),
                r.result
                    .value_f64()
                    .map_or_else(|| "n/a".to_string(), |v| num(v * scale, digits)),
                r.result.class.name().to_string(),
            ]
        })
        .collect();
    match format {
        Format::Csv => to_csv(&IMPROVEMENT_COLUMNS, &cells),
        _ => to_markdown(&IMPROVEMENT_COLUMNS, &cells),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PggSummary {
    pub scenario: String,
    pub stats: PggStats<f64>,
}

/// Contribution summaries for every public good scenario in `agg`.
pub fn pgg_summaries(agg: &Aggregate) -> Result<Vec<PggSummary>, StatsError> {
    agg.iter()
        .filter(|(_, a)| !a.contributions.is_empty())
        .map(|(k, a)| {
            Ok(PggSummary {
                scenario: k.clone(),
                stats: pgg_stats(&a.contributions)?,
            })
        })
        .collect()
}

pub const PGG_COLUMNS: [&str; 4] = ["Scenario", "Mean", "SE", "n"];

pub fn render_pgg(rows: &[PggSummary], format: Format) -> String {
    if format == Format::Json {
        return to_json(&rows);
    }
    let digits = (format == Format::Md).then_some(2);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                num(r.stats.mean, digits),
                num(r.stats.se, digits),
                r.stats.n.to_string(),
            ]
        })
        .collect();
    match format {
        Format::Csv => to_csv(&PGG_COLUMNS, &cells),
        _ => to_markdown(&PGG_COLUMNS, &cells),
    }
}

/// Inputs to [`write_report`]. Every section is optional.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    /// Log whose cooperation rates are plotted.
    pub primary: Option<Aggregate>,
    /// Normal and scaled-payoff logs for the z-test table.
    pub comparison: Option<(Aggregate, Aggregate)>,
    /// Teacher, base student and fine-tuned student logs.
    pub improvement: Option<(Aggregate, Aggregate, Aggregate)>,
    pub table_options: Table1Options,
    /// Append differences from the published table to the Markdown output.
    pub annotate_reference: bool,
}

/// Writes every requested section into `dir` for both groupings and
/// returns the files created.
pub fn write_report(inputs: &ReportInputs, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|e| ReportError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut files: Vec<(String, String)> = Vec::new();
    let denominator = inputs.table_options.denominator;
    for by in [GroupBy::Game, GroupBy::Context] {
        if let Some(agg) = &inputs.primary {
            files.push((format!("coop_by_{}.json", by.name()), to_json(&coop_bars(agg, by, denominator)?)));
        }
        if let Some((c70, c7, ft)) = &inputs.improvement {
            files.push((
                format!("improvement_by_{}.json", by.name()),
                to_json(&improvement_plot(c70, c7, ft, by, denominator)?),
            ));
        }
    }
    if let Some(agg) = &inputs.primary {
        let pgg = pgg_summaries(agg)?;
        if !pgg.is_empty() {
            files.push(("pgg.json".into(), render_pgg(&pgg, Format::Json)));
        }
    }
    if let Some((normal, oos)) = &inputs.comparison {
        let table = table1_report(normal, oos, inputs.table_options)?;
        files.push(("table1.csv".into(), table1_csv(&table, None)));
        files.push(("table1.json".into(), to_json(&table)));
        let mut md = table1_markdown(&table);
        if inputs.annotate_reference {
            md.push('\n');
            md.push_str(&divergences_markdown(&compare_to_reference(&table, 0.005 + 1e-9)));
        }
        files.push(("table1.md".into(), md));
    }
    if let Some((c70, c7, ft)) = &inputs.improvement {
        let rows = improvement_rows(c70, c7, ft, denominator)?;
        files.push(("improvement.csv".into(), render_improvement(&rows, Format::Csv, false)));
        files.push(("improvement.md".into(), render_improvement(&rows, Format::Md, false)));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| ReportError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        written.push(path);
    }
    Ok(written)
}
