use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::log::{read_log, Trial, TrialStatus};
use super::RunError;
use crate::games::Action;

/// Per-scenario tallies. `contributions` is only populated for public good
/// scenarios and is ordered by trial index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAggregate {
    pub n_ok: u64,
    pub n_coop: u64,
    pub n_defect: u64,
    pub n_invalid: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contributions: Vec<f64>,
}

impl ScenarioAggregate {
    pub fn n_total(&self) -> u64 {
        self.n_ok + self.n_invalid
    }
}

pub type Aggregate = BTreeMap<String, ScenarioAggregate>;

/// Folds trials into per-scenario counts. The result does not depend on
/// the order of `trials`.
pub fn aggregate_trials(trials: &[Trial]) -> Aggregate {
    let mut out: Aggregate = BTreeMap::new();
    let mut contributions: BTreeMap<&str, Vec<(u32, f64)>> = BTreeMap::new();
    for t in trials {
        let entry = out.entry(t.scenario.clone()).or_default();
        match t.status {
            TrialStatus::Invalid => entry.n_invalid += 1,
            TrialStatus::Ok => {
                entry.n_ok += 1;
                match (t.action, t.contribution) {
                    (Some(Action::C), _) => entry.n_coop += 1,
                    (Some(Action::D), _) => entry.n_defect += 1,
                    (None, Some(c)) => contributions.entry(&t.scenario).or_default().push((t.index, c)),
                    (None, None) => {}
                }
            }
        }
    }
    for (key, mut values) in contributions {
        values.sort_by_key(|&(i, _)| i);
        if let Some(entry) = out.get_mut(key) {
            entry.contributions = values.into_iter().map(|(_, c)| c).collect();
        }
    }
    out
}

pub fn aggregate(trial_log: impl AsRef<Path>) -> Result<Aggregate, RunError> {
    Ok(aggregate_trials(&read_log(trial_log.as_ref())?))
}
