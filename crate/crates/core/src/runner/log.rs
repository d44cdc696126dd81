//! Append-only JSONL trial log.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::RunError;
use crate::agents::{AgentResponse, ParseFailure, Parsed};
use crate::games::Action;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    /// Still unparseable after every permitted retry.
    Invalid,
}

/// One line of the trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub format_version: u32,
    pub scenario: String,
    pub index: u32,
    pub attempt: u32,
    pub status: TrialStatus,
    pub action: Option<Action>,
    pub contribution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<ParseFailure>,
    pub raw_text: String,
    pub motivation: Option<String>,
    pub latency_ms: u64,
    pub ts: String,
}

impl Trial {
    pub fn from_response(scenario: &str, index: u32, response: &AgentResponse, ts: DateTime<Utc>) -> Self {
        let (status, action, contribution, failure) = match response.parsed {
            Parsed::Action(a) => (TrialStatus::Ok, Some(a), None, None),
            Parsed::Contribution(c) => (TrialStatus::Ok, None, Some(c), None),
            Parsed::Failure(f) => (TrialStatus::Invalid, None, None, Some(f)),
        };
        Self {
            format_version: FORMAT_VERSION,
            scenario: scenario.to_string(),
            index,
            attempt: response.attempt,
            status,
            action,
            contribution,
            failure,
            raw_text: response.raw_text.clone(),
            motivation: response.motivation.clone(),
            latency_ms: response.latency.as_millis() as u64,
            ts: ts.to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }

    pub fn slot(&self) -> (&str, u32) {
        (&self.scenario, self.index)
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("trial serializes");
        line.push('\n');
        line
    }
}

/// Serialized sink for completed trials. Every trial is written as one
/// complete line and flushed before the next is accepted.
pub struct LogWriter {
    file: File,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| RunError::storage(parent, e))?;
        }
        let file = File::create(path).map_err(|e| RunError::storage(path, e))?;
        Ok(Self { file })
    }

    pub fn append(path: &Path) -> Result<Self, RunError> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| RunError::storage(path, e))?;
        Ok(Self { file })
    }

    pub fn write(&mut self, trial: &Trial) -> std::io::Result<()> {
        self.file.write_all(trial.to_line().as_bytes())?;
        self.file.flush()
    }
}

/// Reads a complete log. Any unparseable line, or a repeated
/// `(scenario, index)` slot, is reported with its 1-based line number.
pub fn read_log(path: &Path) -> Result<Vec<Trial>, RunError> {
    let file = File::open(path).map_err(|e| RunError::storage(path, e))?;
    let mut trials = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RunError::storage(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let trial: Trial = serde_json::from_str(&line).map_err(|e| RunError::LogCorrupt {
            line: i + 1,
            message: e.to_string(),
        })?;
        if trial.format_version != FORMAT_VERSION {
            return Err(RunError::LogCorrupt {
                line: i + 1,
                message: format!("unsupported format_version {}", trial.format_version),
            });
        }
        if !seen.insert((trial.scenario.clone(), trial.index)) {
            return Err(RunError::LogCorrupt {
                line: i + 1,
                message: format!("duplicate trial {}#{}", trial.scenario, trial.index),
            });
        }
        trials.push(trial);
    }
    Ok(trials)
}

/// Drops a trailing partial line left by an interrupted write.
pub fn repair_torn_tail(path: &Path) -> Result<bool, RunError> {
    let bytes = fs::read(path).map_err(|e| RunError::storage(path, e))?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(false);
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| RunError::storage(path, e))?;
    file.set_len(keep as u64).map_err(|e| RunError::storage(path, e))?;
    Ok(true)
}

/// Log content with wall-clock fields cleared, sorted by
/// `(scenario, index)`. Two runs of the same seeded config produce the
/// same canonical log regardless of parallelism.
pub fn canonical_log(trials: &[Trial]) -> String {
    let mut sorted: Vec<Trial> = trials.to_vec();
    sorted.sort_by(|a, b| a.slot().cmp(&b.slot()));
    sorted
        .into_iter()
        .map(|mut t| {
            t.latency_ms = 0;
            t.ts = String::new();
            t.to_line()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn response(parsed: Parsed) -> AgentResponse {
        AgentResponse {
            raw_text: "C".into(),
            parsed,
            motivation: None,
            latency: Duration::from_millis(12),
            attempt: 1,
        }
    }

    #[test]
    fn line_shape() {
        let t = Trial::from_response("biz_prison", 3, &response(Parsed::Action(Action::C)), Utc::now());
        let v: serde_json::Value = serde_json::from_str(&t.to_line()).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["scenario"], "biz_prison");
        assert_eq!(v["index"], 3);
        assert_eq!(v["attempt"], 1);
        assert_eq!(v["status"], "ok");
        assert_eq!(v["action"], "C");
        assert!(v["contribution"].is_null());
        assert!(v["motivation"].is_null());
        assert_eq!(v["latency_ms"], 12);
        assert!(v.get("failure").is_none());

        let bad = Trial::from_response("x_y", 0, &response(Parsed::Failure(ParseFailure::Missing)), Utc::now());
        assert_eq!(bad.status, TrialStatus::Invalid);
        assert!(bad.to_line().contains(r#""failure":"missing""#));
    }

    #[test]
    fn corrupt_and_duplicate_lines_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let t = Trial::from_response("a_b", 0, &response(Parsed::Action(Action::D)), Utc::now());
        fs::write(&path, format!("{}not json\n", t.to_line())).unwrap();
        assert!(matches!(read_log(&path), Err(RunError::LogCorrupt { line: 2, .. })));
        fs::write(&path, format!("{}{}", t.to_line(), t.to_line())).unwrap();
        assert!(matches!(read_log(&path), Err(RunError::LogCorrupt { line: 2, .. })));
    }

    #[test]
    fn torn_tail_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let t = Trial::from_response("a_b", 0, &response(Parsed::Action(Action::D)), Utc::now());
        let line = t.to_line();
        fs::write(&path, format!("{line}{}", &line[..10])).unwrap();
        assert!(repair_torn_tail(&path).unwrap());
        assert_eq!(read_log(&path).unwrap(), vec![t]);
        assert!(!repair_torn_tail(&path).unwrap());
    }
}
