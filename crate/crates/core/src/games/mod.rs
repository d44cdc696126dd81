//! Symmetric 2x2 social dilemmas and the linear public good game.
//!
//! A game is described by the usual R/T/S/P quadruple. Only admissible
//! quadruples (`max(P, S) < min(T, R)`) are meaningful here; with that
//! constraint the relative order of T vs R and P vs S picks one of four
//! classes, and each class has a fixed equilibrium structure.

mod pgg;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use pgg::{pgg_payoffs, PggSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("payoffs violate max(p, s) < min(t, r)")]
    AdmissibilityViolation,
    #[error("payoff ordering is not strict ({0})")]
    Tie(&'static str),
    #[error("payoff values must be finite")]
    NonFinite,
    #[error("scale factor must be positive")]
    NonPositiveScale,
    #[error("contribution {index} is outside [0, endowment]")]
    ContributionOutOfRange { index: usize },
    #[error("expected {expected} contributions, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid public good spec: {0}")]
    InvalidPggSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Socially optimal choice.
    C,
    /// Individually optimal choice.
    D,
}

impl Action {
    pub const BOTH: [Action; 2] = [Action::C, Action::D];

    pub fn letter(self) -> char {
        match self {
            Action::C => 'C',
            Action::D => 'D',
        }
    }

    pub fn other(self) -> Action {
        match self {
            Action::C => Action::D,
            Action::D => Action::C,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub type Profile = (Action, Action);

/// The four outcome values of a symmetric 2x2 game, from the row player's
/// point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Payoffs<T> {
    /// Mutual cooperation.
    pub r: T,
    /// Defecting against a cooperator.
    pub t: T,
    /// Cooperating against a defector.
    pub s: T,
    /// Mutual defection.
    pub p: T,
}

impl<T: Scalar> Payoffs<T> {
    /// Builds an admissible payoff quadruple.
    pub fn new(r: T, t: T, s: T, p: T) -> Result<Self, GameError> {
        let payoffs = Self { r, t, s, p };
        payoffs.validate()?;
        Ok(payoffs)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if ![self.r, self.t, self.s, self.p].iter().all(Scalar::is_finite_value) {
            return Err(GameError::NonFinite);
        }
        if self.p.max_of(self.s) >= self.t.min_of(self.r) {
            return Err(GameError::AdmissibilityViolation);
        }
        Ok(())
    }

    fn validate_strict(&self) -> Result<(), GameError> {
        self.validate()?;
        if self.t == self.r {
            return Err(GameError::Tie("t = r"));
        }
        if self.p == self.s {
            return Err(GameError::Tie("p = s"));
        }
        Ok(())
    }

    pub fn map<U>(self, f: impl Fn(T) -> U) -> Payoffs<U> {
        Payoffs {
            r: f(self.r),
            t: f(self.t),
            s: f(self.s),
            p: f(self.p),
        }
    }

    pub fn to_f64(&self) -> Payoffs<f64> {
        self.map(|x| x.to_f64_lossy())
    }

    /// Row player's payoff for one profile.
    fn own(&self, mine: Action, theirs: Action) -> T {
        match (mine, theirs) {
            (Action::C, Action::C) => self.r,
            (Action::C, Action::D) => self.s,
            (Action::D, Action::C) => self.t,
            (Action::D, Action::D) => self.p,
        }
    }

    /// Expected payoff of `action` against a coplayer who cooperates with
    /// probability `q`.
    pub fn expected(&self, action: Action, q: T) -> T {
        q * self.own(action, Action::C) + (T::one() - q) * self.own(action, Action::D)
    }
}

/// `(mine, theirs)` points for a single play of the game.
pub fn payoff<T: Scalar>(payoffs: &Payoffs<T>, mine: Action, theirs: Action) -> (T, T) {
    (payoffs.own(mine, theirs), payoffs.own(theirs, mine))
}

/// Multiplies every payoff by `k`.
pub fn scale<T: Scalar>(payoffs: &Payoffs<T>, k: T) -> Result<Payoffs<T>, GameError> {
    if !k.is_finite_value() || k <= T::zero() {
        return Err(GameError::NonPositiveScale);
    }
    Ok(payoffs.map(|x| x * k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameClass {
    PrisonersDilemma,
    Snowdrift,
    StagHunt,
    PrisonersDelight,
}

impl GameClass {
    pub fn name(self) -> &'static str {
        match self {
            GameClass::PrisonersDilemma => "Prisoner's Dilemma",
            GameClass::Snowdrift => "Snowdrift",
            GameClass::StagHunt => "Stag Hunt",
            GameClass::PrisonersDelight => "Prisoner's Delight",
        }
    }

    /// Games with a unique equilibrium in strictly dominant actions.
    pub fn is_rationalizable(self) -> bool {
        matches!(self, GameClass::PrisonersDilemma | GameClass::PrisonersDelight)
    }
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify<T: Scalar>(payoffs: &Payoffs<T>) -> Result<GameClass, GameError> {
    payoffs.validate_strict()?;
    let temptation = payoffs.t > payoffs.r;
    let fear = payoffs.p > payoffs.s;
    Ok(match (temptation, fear) {
        (true, true) => GameClass::PrisonersDilemma,
        (true, false) => GameClass::Snowdrift,
        (false, true) => GameClass::StagHunt,
        (false, false) => GameClass::PrisonersDelight,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumProfile<T> {
    /// Pure Nash equilibria, sorted.
    pub pure_profiles: Vec<Profile>,
    /// Coplayer cooperation probability that makes a player indifferent.
    pub mixed_coop_prob: Option<T>,
    pub dominant_action: Option<Action>,
}

pub fn equilibria<T: Scalar>(payoffs: &Payoffs<T>) -> Result<EquilibriumProfile<T>, GameError> {
    use Action::{C, D};
    let class = classify(payoffs)?;
    let dominant = |a: Action| EquilibriumProfile {
        pure_profiles: vec![(a, a)],
        mixed_coop_prob: None,
        dominant_action: Some(a),
    };
    Ok(match class {
        GameClass::PrisonersDilemma => dominant(D),
        GameClass::PrisonersDelight => dominant(C),
        GameClass::StagHunt => EquilibriumProfile {
            pure_profiles: vec![(C, C), (D, D)],
            mixed_coop_prob: Some(indifference_q(payoffs)),
            dominant_action: None,
        },
        GameClass::Snowdrift => EquilibriumProfile {
            pure_profiles: vec![(C, D), (D, C)],
            mixed_coop_prob: Some(indifference_q(payoffs)),
            dominant_action: None,
        },
    })
}

/// Solves `q r + (1-q) s = q t + (1-q) p` for `q`.
fn indifference_q<T: Scalar>(x: &Payoffs<T>) -> T {
    let fear = x.p - x.s;
    fear / (fear + (x.r - x.t))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialOptimum<T> {
    /// Best profile among the symmetric ones; always `(C, C)` for
    /// admissible payoffs.
    pub symmetric: Profile,
    /// Every profile maximizing the sum of both players' payoffs.
    pub welfare_argmax: Vec<Profile>,
    pub max_welfare: T,
}

impl<T> SocialOptimum<T> {
    pub fn symmetric_in_argmax(&self) -> bool {
        self.welfare_argmax.contains(&self.symmetric)
    }
}

pub fn social_optimum<T: Scalar>(payoffs: &Payoffs<T>) -> Result<SocialOptimum<T>, GameError> {
    payoffs.validate()?;
    let symmetric = if payoffs.r >= payoffs.p {
        (Action::C, Action::C)
    } else {
        (Action::D, Action::D)
    };
    let welfare = |(a, b): Profile| {
        let (x, y) = payoff(payoffs, a, b);
        x + y
    };
    let profiles: Vec<Profile> = Action::BOTH
        .iter()
        .flat_map(|&a| Action::BOTH.iter().map(move |&b| (a, b)))
        .collect();
    let max_welfare = profiles
        .iter()
        .map(|&pr| welfare(pr))
        .fold(welfare(profiles[0]), Scalar::max_of);
    let welfare_argmax = profiles
        .into_iter()
        .filter(|&pr| welfare(pr) == max_welfare)
        .collect();
    Ok(SocialOptimum {
        symmetric,
        welfare_argmax,
        max_welfare,
    })
}
