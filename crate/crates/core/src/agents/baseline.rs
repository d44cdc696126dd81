//! Offline agents used for calibration and tests.
//!
//! Each one answers with plain text (a letter, or a number for the public
//! good game) that then goes through the same parser as a model reply.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;

use super::{finish, Agent, AgentError, AgentResponse, ParsePolicy, TrialSeed};
use crate::games::{equilibria, Action, Payoffs};
use crate::scalar::{Rational, Scalar};
use crate::scenarios::{Prompt, Task};

fn reply_for(task: &Task, action: Action) -> String {
    match task {
        Task::Matrix(_) => action.letter().to_string(),
        Task::PublicGood(spec) => match action {
            Action::C => spec.endowment.to_string(),
            Action::D => "0".to_string(),
        },
    }
}

fn respond(prompt: &Prompt, action: Action, started: Instant) -> AgentResponse {
    finish(&prompt.task, reply_for(&prompt.task, action), ParsePolicy::default(), started)
}

#[derive(Debug, Clone)]
pub struct FixedAgent {
    pub action: Action,
}

impl Agent for FixedAgent {
    fn decide(&self, prompt: &Prompt, _seed: TrialSeed) -> Result<AgentResponse, AgentError> {
        Ok(respond(prompt, self.action, Instant::now()))
    }
}

/// Cooperates with a configured probability per scenario.
#[derive(Debug, Clone)]
pub struct TableAgent {
    pub coop_prob: BTreeMap<String, f64>,
    pub default_prob: Option<f64>,
}

impl TableAgent {
    pub fn probability(&self, key: &str) -> Result<f64, AgentError> {
        self.coop_prob
            .get(key)
            .copied()
            .or(self.default_prob)
            .ok_or_else(|| AgentError::Config(format!("no cooperation probability for {key}")))
    }
}

impl Agent for TableAgent {
    fn decide(&self, prompt: &Prompt, seed: TrialSeed) -> Result<AgentResponse, AgentError> {
        let started = Instant::now();
        let p = self.probability(&prompt.scenario.scenario_key)?;
        let action = if seed.rng().random_bool(p) { Action::C } else { Action::D };
        Ok(respond(prompt, action, started))
    }
}

/// Best-responds to a fixed belief about the coplayer's cooperation
/// probability. Exact ties go to C.
#[derive(Debug, Clone)]
pub struct RationalAgent {
    pub conjecture_q: f64,
}

impl RationalAgent {
    pub fn choose(&self, payoffs: &Payoffs<Rational>) -> Action {
        let x = payoffs.to_f64();
        if x.expected(Action::C, self.conjecture_q) >= x.expected(Action::D, self.conjecture_q) {
            Action::C
        } else {
            Action::D
        }
    }
}

impl Agent for RationalAgent {
    fn decide(&self, prompt: &Prompt, _seed: TrialSeed) -> Result<AgentResponse, AgentError> {
        let started = Instant::now();
        let action = match &prompt.task {
            Task::Matrix(payoffs) => self.choose(payoffs),
            // Contributing nothing is strictly dominant when m/n < 1.
            Task::PublicGood(_) => Action::D,
        };
        Ok(respond(prompt, action, started))
    }
}

/// Plays the symmetric mixed equilibrium where one exists, otherwise the
/// dominant action.
#[derive(Debug, Clone, Default)]
pub struct MixedNeAgent;

impl Agent for MixedNeAgent {
    fn decide(&self, prompt: &Prompt, seed: TrialSeed) -> Result<AgentResponse, AgentError> {
        let started = Instant::now();
        let action = match &prompt.task {
            Task::Matrix(payoffs) => {
                let eq = equilibria(payoffs).map_err(|e| AgentError::Config(e.to_string()))?;
                match (eq.dominant_action, eq.mixed_coop_prob) {
                    (Some(a), _) => a,
                    (None, Some(q)) => {
                        let q = q.to_f64_lossy().clamp(0.0, 1.0);
                        if seed.rng().random_bool(q) {
                            Action::C
                        } else {
                            Action::D
                        }
                    }
                    (None, None) => unreachable!("strict 2x2 games always have one of the two"),
                }
            }
            Task::PublicGood(_) => Action::D,
        };
        Ok(respond(prompt, action, started))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Parsed;
    use crate::scenarios::Catalog;

    fn prompt(key: &str) -> Prompt {
        Catalog::builtin().unwrap().prompt_for_key(key).unwrap()
    }

    fn seed(i: u64) -> TrialSeed {
        TrialSeed::derive(7, "test", i, 0)
    }

    #[test]
    fn fixed_agent() {
        let r = FixedAgent { action: Action::C }.decide(&prompt("biz_prison"), seed(0)).unwrap();
        assert_eq!(r.parsed, Parsed::Action(Action::C));
        assert_eq!(r.raw_text, "C");
        let r = FixedAgent { action: Action::C }.decide(&prompt("commons_pgg"), seed(0)).unwrap();
        assert_eq!(r.parsed, Parsed::Contribution(10.0));
    }

    #[test]
    fn rational_agent_hand_checked() {
        let agent = RationalAgent { conjecture_q: 0.5 };
        // Snowdrift: EU(C) = 4.0, EU(D) = 6.0.
        let r = agent.decide(&prompt("biz_snowdrift"), seed(0)).unwrap();
        assert_eq!(r.parsed, Parsed::Action(Action::D));
        // Delight: EU(C) = 6.5, EU(D) = 3.5.
        let r = agent.decide(&prompt("biz_delight"), seed(0)).unwrap();
        assert_eq!(r.parsed, Parsed::Action(Action::C));
    }

    #[test]
    fn table_agent_degenerate_and_missing() {
        let agent = TableAgent {
            coop_prob: BTreeMap::from([("biz_prison".to_string(), 1.0)]),
            default_prob: None,
        };
        for i in 0..20 {
            let r = agent.decide(&prompt("biz_prison"), seed(i)).unwrap();
            assert_eq!(r.parsed, Parsed::Action(Action::C));
        }
        assert!(matches!(agent.decide(&prompt("team_prison"), seed(0)), Err(AgentError::Config(_))));
    }

    #[test]
    fn stateless_given_seed() {
        let agent = TableAgent { coop_prob: BTreeMap::new(), default_prob: Some(0.5) };
        let p = prompt("IR_staghunt");
        for i in 0..50 {
            let a = agent.decide(&p, seed(i)).unwrap();
            let b = agent.decide(&p, seed(i)).unwrap();
            assert_eq!(a.parsed, b.parsed);
            assert_eq!(a.raw_text, b.raw_text);
        }
    }

    #[test]
    fn mixed_ne_uses_dominant_action_when_available() {
        let r = MixedNeAgent.decide(&prompt("team_prison"), seed(0)).unwrap();
        assert_eq!(r.parsed, Parsed::Action(Action::D));
        let r = MixedNeAgent.decide(&prompt("team_delight"), seed(0)).unwrap();
        assert_eq!(r.parsed, Parsed::Action(Action::C));
    }
}
