//! Decision backends.
//!
//! An [`Agent`] receives a rendered [`Prompt`] and a per-attempt seed and
//! returns the raw reply together with its parsed form. Agents hold no
//! per-call state, so the runner can call them from many threads at once.

mod baseline;
mod http;
mod parse;
mod seed;

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::games::Action;
use crate::scenarios::{Prompt, Task};

pub use baseline::{FixedAgent, MixedNeAgent, RationalAgent, TableAgent};
pub use http::{LlmHttpAgent, LlmHttpSpec, RetryPolicy, MOTIVATION_REQUEST};
pub use parse::{has_answer_token, parse_action, parse_action_with, parse_contribution, ParseFailure, ParsePolicy};
pub use seed::TrialSeed;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("unexpected response shape: {0}")]
    Protocol(String),
    #[error("agent configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Parsed {
    Action(Action),
    Contribution(f64),
    Failure(ParseFailure),
}

impl Parsed {
    pub fn is_failure(&self) -> bool {
        matches!(self, Parsed::Failure(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub raw_text: String,
    pub parsed: Parsed,
    pub motivation: Option<String>,
    pub latency: Duration,
    /// Zero-based attempt number, filled in by the runner.
    pub attempt: u32,
}

pub trait Agent: Send + Sync {
    fn decide(&self, prompt: &Prompt, seed: TrialSeed) -> Result<AgentResponse, AgentError>;
}

/// Parses a reply for the given task.
pub fn interpret(task: &Task, raw: &str, policy: ParsePolicy) -> (Parsed, Option<String>) {
    match task {
        Task::Matrix(_) => {
            let (action, motivation) = parse_action_with(raw, policy);
            (action.map_or_else(Parsed::Failure, Parsed::Action), motivation)
        }
        Task::PublicGood(spec) => (
            parse_contribution(raw, spec.endowment).map_or_else(Parsed::Failure, Parsed::Contribution),
            None,
        ),
    }
}

pub(crate) fn finish(task: &Task, raw_text: String, policy: ParsePolicy, started: Instant) -> AgentResponse {
    let (parsed, motivation) = interpret(task, &raw_text, policy);
    AgentResponse {
        raw_text,
        parsed,
        motivation,
        latency: started.elapsed(),
        attempt: 0,
    }
}

/// Serializable agent configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    LlmHttp(LlmHttpSpec),
    Table {
        coop_prob: BTreeMap<String, f64>,
        #[serde(default)]
        default_prob: Option<f64>,
    },
    Fixed {
        action: Action,
    },
    Rational {
        conjecture_q: f64,
    },
    MixedNe,
}

fn check_probability(what: &str, p: f64) -> Result<(), AgentError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(AgentError::Config(format!("{what} = {p} is not a probability")))
    }
}

impl AgentSpec {
    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            AgentSpec::LlmHttp(spec) => spec.validate(),
            AgentSpec::Table { coop_prob, default_prob } => {
                for (key, p) in coop_prob {
                    check_probability(key, *p)?;
                }
                if let Some(p) = default_prob {
                    check_probability("default_prob", *p)?;
                }
                Ok(())
            }
            AgentSpec::Fixed { .. } | AgentSpec::MixedNe => Ok(()),
            AgentSpec::Rational { conjecture_q } => check_probability("conjecture_q", *conjecture_q),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Agent>, AgentError> {
        self.validate()?;
        Ok(match self {
            AgentSpec::LlmHttp(spec) => Arc::new(LlmHttpAgent::new(spec.clone())?),
            AgentSpec::Table { coop_prob, default_prob } => Arc::new(TableAgent {
                coop_prob: coop_prob.clone(),
                default_prob: *default_prob,
            }),
            AgentSpec::Fixed { action } => Arc::new(FixedAgent { action: *action }),
            AgentSpec::Rational { conjecture_q } => Arc::new(RationalAgent {
                conjecture_q: *conjecture_q,
            }),
            AgentSpec::MixedNe => Arc::new(MixedNeAgent),
        })
    }

    /// Parse policy applied to this agent's replies.
    pub fn parse_policy(&self) -> ParsePolicy {
        match self {
            AgentSpec::LlmHttp(spec) => spec.parse_policy(),
            _ => ParsePolicy::default(),
        }
    }
}

/// Shorthand for baseline agents:
/// `fixed:C`, `rational:0.5`, `mixed-ne`, `table:0.7`,
/// `table:biz_prison=0.7,team_prison=0.2[,*=0.5]`.
impl FromStr for AgentSpec {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AgentError::Config(format!("cannot parse agent {s:?}"));
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let spec = match kind {
            "fixed" => AgentSpec::Fixed {
                action: match arg {
                    "C" => Action::C,
                    "D" => Action::D,
                    _ => return Err(bad()),
                },
            },
            "rational" => AgentSpec::Rational {
                conjecture_q: arg.parse().map_err(|_| bad())?,
            },
            "mixed-ne" | "mixed" => AgentSpec::MixedNe,
            "table" => {
                if let Ok(p) = arg.parse::<f64>() {
                    AgentSpec::Table {
                        coop_prob: BTreeMap::new(),
                        default_prob: Some(p),
                    }
                } else {
                    let mut coop_prob = BTreeMap::new();
                    let mut default_prob = None;
                    for pair in arg.split(',').filter(|p| !p.is_empty()) {
                        let (key, p) = pair.split_once('=').ok_or_else(bad)?;
                        let p: f64 = p.trim().parse().map_err(|_| bad())?;
                        if key.trim() == "*" {
                            default_prob = Some(p);
                        } else {
                            coop_prob.insert(key.trim().to_string(), p);
                        }
                    }
                    AgentSpec::Table { coop_prob, default_prob }
                }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}
