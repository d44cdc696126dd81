use serde::{Deserialize, Serialize};

use super::GameError;
use crate::scalar::Scalar;

/// Linear public good game: every unit contributed is multiplied by
/// `multiplier` and shared equally among `n_players`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PggSpec<T> {
    pub n_players: usize,
    pub endowment: T,
    pub multiplier: T,
}

impl<T: Scalar> PggSpec<T> {
    pub fn new(n_players: usize, endowment: T, multiplier: T) -> Result<Self, GameError> {
        let spec = Self {
            n_players,
            endowment,
            multiplier,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.n_players < 2 {
            return Err(GameError::InvalidPggSpec("need at least two players".into()));
        }
        if !self.endowment.is_finite_value() || self.endowment < T::zero() {
            return Err(GameError::InvalidPggSpec("endowment must be >= 0".into()));
        }
        let n = T::from_usize(self.n_players)
            .ok_or_else(|| GameError::InvalidPggSpec("player count not representable".into()))?;
        if !self.multiplier.is_finite_value() || self.multiplier <= T::one() || self.multiplier >= n {
            return Err(GameError::InvalidPggSpec(
                "multiplier must satisfy 1 < m < n_players".into(),
            ));
        }
        Ok(())
    }

    /// Marginal per-capita return of one contributed unit.
    pub fn mpcr(&self) -> T {
        self.multiplier / T::from_usize(self.n_players).unwrap_or_else(T::one)
    }
}

impl Default for PggSpec<f64> {
    fn default() -> Self {
        Self {
            n_players: 4,
            endowment: 10.0,
            multiplier: 1.6,
        }
    }
}

/// `payoff_i = e - c_i + m * sum(c) / n`.
pub fn pgg_payoffs<T: Scalar>(spec: &PggSpec<T>, contributions: &[T]) -> Result<Vec<T>, GameError> {
    spec.validate()?;
    if contributions.len() != spec.n_players {
        return Err(GameError::ArityMismatch {
            expected: spec.n_players,
            got: contributions.len(),
        });
    }
    if let Some(index) = contributions
        .iter()
        .position(|c| !c.is_finite_value() || *c < T::zero() || *c > spec.endowment)
    {
        return Err(GameError::ContributionOutOfRange { index });
    }
    let pot = contributions.iter().fold(T::zero(), |acc, &c| acc + c);
    let share = spec.multiplier * pot / T::from_usize(spec.n_players).unwrap_or_else(T::one);
    Ok(contributions
        .iter()
        .map(|&c| spec.endowment - c + share)
        .collect())
}
