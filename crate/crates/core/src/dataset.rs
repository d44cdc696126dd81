//! Alpaca-format export of recorded trials, and a validator for the result.
//!
//! Each Ok trial becomes one `{instruction, input, output}` record. By
//! default the system prompt is the instruction and the game prompt the
//! input; [`FieldMapping::Concat`] joins both into the instruction instead.
//! The output is the raw reply, motivation included.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::agents::has_answer_token;
use crate::runner::{read_log, RunError, Trial, TrialStatus};
use crate::scenarios::{Catalog, PromptBundle};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("trial log line {line}: {message}")]
    LogCorrupt { line: usize, message: String },
    #[error("scenario {0} cannot be resolved to a prompt")]
    UnresolvableScenario(String),
    #[error("malformed dataset file: {0}")]
    MalformedFile(String),
    #[error("i/o error at {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl From<RunError> for DatasetError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::LogCorrupt { line, message } => DatasetError::LogCorrupt { line, message },
            RunError::Storage { path, message } => DatasetError::Io { path, message },
            other => DatasetError::LogCorrupt {
                line: 0,
                message: other.to_string(),
            },
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlpacaRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMapping {
    /// instruction = system prompt, input = game prompt.
    #[default]
    Split,
    /// instruction = system prompt, blank line, game prompt; input empty.
    Concat,
}

impl FieldMapping {
    fn apply(self, bundle: &PromptBundle) -> (String, String) {
        match self {
            FieldMapping::Split => (bundle.system.clone(), bundle.user.clone()),
            FieldMapping::Concat => (format!("{}\n\n{}", bundle.system, bundle.user), String::new()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExportOptions {
    pub include_invalid: bool,
    pub mapping: FieldMapping,
    /// One record per line instead of a JSON array.
    pub jsonl: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExportSummary {
    pub n_records: usize,
    pub n_skipped_invalid: usize,
    /// Distinct (instruction, input) pairs.
    pub n_prompts: usize,
    pub warnings: Vec<String>,
}

/// Builds records in `(scenario, index)` order.
pub fn build_records(
    catalog: &Catalog,
    trials: &[Trial],
    options: ExportOptions,
) -> Result<(Vec<AlpacaRecord>, ExportSummary), DatasetError> {
    let mut sorted: Vec<&Trial> = trials.iter().collect();
    sorted.sort_by(|a, b| a.slot().cmp(&b.slot()));

    let mut bundles: BTreeMap<&str, (String, String)> = BTreeMap::new();
    let mut records = Vec::new();
    let mut summary = ExportSummary::default();
    let mut n_invalid_kept = 0;
    for t in sorted {
        if t.status == TrialStatus::Invalid {
            if !options.include_invalid {
                summary.n_skipped_invalid += 1;
                continue;
            }
            n_invalid_kept += 1;
        }
        if !bundles.contains_key(t.scenario.as_str()) {
            let bundle = catalog
                .scenario(&t.scenario)
                .and_then(|s| catalog.render(&s))
                .map_err(|_| DatasetError::UnresolvableScenario(t.scenario.clone()))?;
            bundles.insert(&t.scenario, options.mapping.apply(&bundle));
        }
        let (instruction, input) = bundles[t.scenario.as_str()].clone();
        records.push(AlpacaRecord {
            instruction,
            input,
            output: t.raw_text.clone(),
        });
    }
    summary.n_records = records.len();
    summary.n_prompts = records
        .iter()
        .map(|r| (&r.instruction, &r.input))
        .collect::<BTreeSet<_>>()
        .len();
    if trials.is_empty() {
        summary.warnings.push("trial log is empty; wrote an empty dataset".into());
    }
    if n_invalid_kept > 0 {
        summary
            .warnings
            .push(format!("{n_invalid_kept} invalid trials included; their outputs may not parse"));
    }
    Ok((records, summary))
}

pub fn render_records(records: &[AlpacaRecord], jsonl: bool) -> String {
    if jsonl {
        records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    } else {
        serde_json::to_string_pretty(records).expect("records serialize") + "\n"
    }
}

/// Exports the trials in `trial_log` to `out`.
pub fn export_alpaca(
    catalog: &Catalog,
    trial_log: impl AsRef<Path>,
    out: impl AsRef<Path>,
    options: ExportOptions,
) -> Result<ExportSummary, DatasetError> {
    let trials = read_log(trial_log.as_ref())?;
    let (records, summary) = build_records(catalog, &trials, options)?;
    let out = out.as_ref();
    let mut file = fs::File::create(out).map_err(|e| io_err(out, e))?;
    file.write_all(render_records(&records, options.jsonl).as_bytes())
        .map_err(|e| io_err(out, e))?;
    Ok(summary)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDiagnostic {
    pub index: usize,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_records: usize,
    pub n_bad: usize,
    pub reasons: Vec<RecordDiagnostic>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.n_bad == 0
    }
}

const FIELDS: [&str; 3] = ["instruction", "input", "output"];

fn check_record(value: &Value, mapping: FieldMapping) -> Vec<String> {
    let Some(obj) = value.as_object() else {
        return vec!["record is not an object".into()];
    };
    let mut reasons = Vec::new();
    for key in obj.keys().filter(|k| !FIELDS.contains(&k.as_str())) {
        reasons.push(format!("unexpected field {key}"));
    }
    for field in FIELDS {
        match obj.get(field) {
            None => reasons.push(format!("missing {field}")),
            Some(Value::String(s)) => {
                let may_be_empty = field == "input" && mapping == FieldMapping::Concat;
                if s.trim().is_empty() && !may_be_empty {
                    reasons.push(format!("empty {field}"));
                } else if field == "output" && !has_answer_token(s) {
                    reasons.push("unparseable output".into());
                }
            }
            Some(_) => reasons.push(format!("{field} is not a string")),
        }
    }
    reasons
}

pub fn validate_records(values: &[Value], mapping: FieldMapping) -> ValidationReport {
    let reasons: Vec<RecordDiagnostic> = values
        .iter()
        .enumerate()
        .filter_map(|(index, v)| {
            let reasons = check_record(v, mapping);
            (!reasons.is_empty()).then_some(RecordDiagnostic { index, reasons })
        })
        .collect();
    ValidationReport {
        n_records: values.len(),
        n_bad: reasons.len(),
        reasons,
    }
}

/// Reads a JSON array (or JSONL) dataset and checks every record.
pub fn validate_alpaca(path: impl AsRef<Path>, mapping: FieldMapping) -> Result<ValidationReport, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values = parse_dataset(&text)?;
    Ok(validate_records(&values, mapping))
}

fn parse_dataset(text: &str) -> Result<Vec<Value>, DatasetError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(text).map_err(|e| DatasetError::MalformedFile(e.to_string()));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| DatasetError::MalformedFile(format!("line {}: {e}", i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentResponse, ParseFailure, Parsed};
    use crate::games::Action;
    use chrono::Utc;
    use serde_json::json;
    use std::time::Duration;

    fn trial(key: &str, index: u32, raw: &str, parsed: Parsed) -> Trial {
        let r = AgentResponse {
            raw_text: raw.into(),
            parsed,
            motivation: None,
            latency: Duration::ZERO,
            attempt: 0,
        };
        Trial::from_response(key, index, &r, Utc::now())
    }

    #[test]
    fn records_follow_the_rendered_prompts() {
        let catalog = Catalog::builtin().unwrap();
        let trials = vec![
            trial("team_prison", 1, "Sharing helps.\nC", Parsed::Action(Action::C)),
            trial("team_prison", 0, "D", Parsed::Action(Action::D)),
            trial("biz_delight", 0, "zzz", Parsed::Failure(ParseFailure::Missing)),
        ];
        let (records, summary) = build_records(&catalog, &trials, ExportOptions::default()).unwrap();
        assert_eq!(summary.n_records, 2);
        assert_eq!(summary.n_skipped_invalid, 1);
        assert_eq!(summary.n_prompts, 1);
        let bundle = catalog.render(&catalog.scenario("team_prison").unwrap()).unwrap();
        assert_eq!(records[0].instruction, bundle.system);
        assert_eq!(records[0].input, bundle.user);
        assert_eq!(records[0].output, "D");
        assert_eq!(records[1].output, "Sharing helps.\nC");

        let opts = ExportOptions {
            include_invalid: true,
            mapping: FieldMapping::Concat,
            jsonl: false,
        };
        let (records, summary) = build_records(&catalog, &trials, opts).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].input, "");
        assert_eq!(summary.warnings.len(), 1);
    }

    #[test]
    fn empty_and_unresolvable_logs() {
        let catalog = Catalog::builtin().unwrap();
        let (records, summary) = build_records(&catalog, &[], ExportOptions::default()).unwrap();
        assert!(records.is_empty());
        assert_eq!(summary.warnings.len(), 1);
        let bad = [trial("mars_prison", 0, "C", Parsed::Action(Action::C))];
        assert!(matches!(
            build_records(&catalog, &bad, ExportOptions::default()),
            Err(DatasetError::UnresolvableScenario(k)) if k == "mars_prison"
        ));
    }

    #[test]
    fn validator_reasons() {
        let values = vec![
            json!({"instruction": "s", "input": "u", "output": "C"}),
            json!({"instruction": "s", "input": "u", "output": ""}),
            json!({"instruction": "s", "input": "u", "output": "no idea"}),
            json!({"instruction": "s", "input": "u", "output": "7", "extra": 1}),
            json!({"instruction": "s", "output": "D"}),
            json!("nope"),
        ];
        let report = validate_records(&values, FieldMapping::Split);
        assert_eq!(report.n_records, 6);
        assert_eq!(report.n_bad, 5);
        assert_eq!(report.reasons[0].reasons, ["empty output"]);
        assert_eq!(report.reasons[1].reasons, ["unparseable output"]);
        assert_eq!(report.reasons[2].reasons, ["unexpected field extra"]);
        assert_eq!(report.reasons[3].reasons, ["missing input"]);
    }

    #[test]
    fn jsonl_and_array_files_both_validate() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![AlpacaRecord {
            instruction: "s".into(),
            input: "u".into(),
            output: "C".into(),
        }];
        for jsonl in [false, true] {
            let p = dir.path().join(format!("d{jsonl}"));
            fs::write(&p, render_records(&recs, jsonl)).unwrap();
            let report = validate_alpaca(&p, FieldMapping::Split).unwrap();
            assert_eq!((report.n_records, report.n_bad), (1, 0));
        }
        let p = dir.path().join("bad");
        fs::write(&p, "[{").unwrap();
        assert!(matches!(
            validate_alpaca(&p, FieldMapping::Split),
            Err(DatasetError::MalformedFile(_))
        ));
    }
}
