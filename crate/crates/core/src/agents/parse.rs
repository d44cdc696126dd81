//! Strict parsing of agent replies.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::games::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseFailure {
    /// Both C and D appear as standalone tokens.
    Ambiguous,
    /// No usable token or number.
    Missing,
    /// A number was found but lies outside `[0, endowment]`.
    OutOfRange,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseFailure::Ambiguous => "ambiguous",
            ParseFailure::Missing => "missing",
            ParseFailure::OutOfRange => "out of range",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsePolicy {
    /// Retry with lowercase `c`/`d` tokens when no uppercase token exists.
    #[serde(default)]
    pub case_insensitive: bool,
    /// Replies carry a motivation followed by the answer: a final line with
    /// a single distinct token decides, and the text above it is kept as the
    /// motivation.
    #[serde(default)]
    pub final_line: bool,
}

fn upper_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[CD]\b").expect("static regex"))
}

fn any_case_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[CDcd]\b").expect("static regex"))
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").expect("static regex"))
}

/// Whether `text` contains anything an answer could be read from: a
/// standalone C/D token in either case, or a number.
pub fn has_answer_token(text: &str) -> bool {
    any_case_re().is_match(text) || number_re().is_match(text)
}

fn letters(re: &Regex, text: &str) -> BTreeSet<Action> {
    re.find_iter(text)
        .map(|m| match m.as_str() {
            "C" | "c" => Action::C,
            _ => Action::D,
        })
        .collect()
}

fn decide(set: BTreeSet<Action>) -> Result<Action, ParseFailure> {
    let mut it = set.into_iter();
    match (it.next(), it.next()) {
        (Some(a), None) => Ok(a),
        (Some(_), Some(_)) => Err(ParseFailure::Ambiguous),
        (None, _) => Err(ParseFailure::Missing),
    }
}

fn parse_strict(text: &str, case_insensitive: bool) -> Result<Action, ParseFailure> {
    match decide(letters(upper_re(), text)) {
        Err(ParseFailure::Missing) if case_insensitive => decide(letters(any_case_re(), text)),
        other => other,
    }
}

/// Extracts the chosen action under the default (strict) policy.
pub fn parse_action(raw: &str) -> Result<Action, ParseFailure> {
    parse_action_with(raw, ParsePolicy::default()).0
}

/// Extracts the chosen action and, in final-line mode, the motivation text
/// that precedes it.
pub fn parse_action_with(raw: &str, policy: ParsePolicy) -> (Result<Action, ParseFailure>, Option<String>) {
    if policy.final_line {
        let trimmed = raw.trim_end();
        if let Some((head, last)) = trimmed.rsplit_once('\n') {
            if let Ok(action) = parse_strict(last, policy.case_insensitive) {
                let motivation = head.trim();
                let motivation = (!motivation.is_empty()).then(|| motivation.to_string());
                return (Ok(action), motivation);
            }
        }
    }
    (parse_strict(raw, policy.case_insensitive), None)
}

/// First numeric literal in the reply, accepted iff it lies in
/// `[0, endowment]`.
pub fn parse_contribution(raw: &str, endowment: f64) -> Result<f64, ParseFailure> {
    let m = number_re().find(raw).ok_or(ParseFailure::Missing)?;
    let value: f64 = m.as_str().parse().map_err(|_| ParseFailure::Missing)?;
    if (0.0..=endowment).contains(&value) {
        Ok(value)
    } else {
        Err(ParseFailure::OutOfRange)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_examples() {
        assert_eq!(parse_action("C"), Ok(Action::C));
        assert_eq!(parse_action("  D\n"), Ok(Action::D));
        assert_eq!(parse_action("My answer: \"D\"."), Ok(Action::D));
        assert_eq!(parse_action("I would pick C, though D is tempting."), Err(ParseFailure::Ambiguous));
        assert_eq!(parse_action("cooperate"), Err(ParseFailure::Missing));
        assert_eq!(parse_action("c"), Err(ParseFailure::Missing));
        assert_eq!(parse_action("C. Definitely C."), Ok(Action::C));
        assert_eq!(parse_action("CD"), Err(ParseFailure::Missing));
    }

    #[test]
    fn case_insensitive_fallback() {
        let policy = ParsePolicy { case_insensitive: true, final_line: false };
        assert_eq!(parse_action_with("i pick d", policy).0, Ok(Action::D));
        assert_eq!(parse_action_with("c or d", policy).0, Err(ParseFailure::Ambiguous));
        assert_eq!(parse_action_with("cooperate", policy).0, Err(ParseFailure::Missing));
        // Uppercase wins when present.
        assert_eq!(parse_action_with("D, not c", policy).0, Ok(Action::D));
    }

    #[test]
    fn final_line_mode_keeps_motivation() {
        let policy = ParsePolicy { case_insensitive: false, final_line: true };
        let raw = "Choosing D risks mutual loss, while C keeps trust.\nC";
        let (action, motivation) = parse_action_with(raw, policy);
        assert_eq!(action, Ok(Action::C));
        assert_eq!(motivation.as_deref(), Some("Choosing D risks mutual loss, while C keeps trust."));
        // Without the policy the same text is ambiguous.
        assert_eq!(parse_action(raw), Err(ParseFailure::Ambiguous));
        // A single-line reply falls back to the strict rule.
        assert_eq!(parse_action_with("D", policy), (Ok(Action::D), None));
    }

    #[test]
    fn contribution_examples() {
        assert_eq!(parse_contribution("I contribute 7 points", 10.0), Ok(7.0));
        assert_eq!(parse_contribution("15", 10.0), Err(ParseFailure::OutOfRange));
        assert_eq!(parse_contribution("-2", 10.0), Err(ParseFailure::OutOfRange));
        assert_eq!(parse_contribution("all of it", 10.0), Err(ParseFailure::Missing));
        assert_eq!(parse_contribution("2.5 now, 3 later", 10.0), Ok(2.5));
        assert_eq!(parse_contribution("10", 10.0), Ok(10.0));
    }
}
