//! Evaluation harness for strategic decision-making agents on symmetric
//! social dilemmas.
//!
//! The pipeline is: build [`scenarios::Catalog`] from the checksummed prompt
//! corpus, run an [`agents::Agent`] over it with [`runner::run`], then either
//! export the transcripts as an alpaca dataset ([`dataset`]) or analyze the
//! aggregated logs ([`stats`], [`report`]).
//!
//! Game math is generic over [`Scalar`]; use the aliases below for the two
//! common instantiations.

pub mod agents;
pub mod dataset;
pub mod games;
pub mod report;
pub mod runner;
pub mod scalar;
pub mod scenarios;
pub mod stats;

pub use scalar::{Rational, Scalar};

/// Payoffs with exact rational entries (the corpus representation).
pub type ExactPayoffs = games::Payoffs<Rational>;
/// Payoffs with `f64` entries.
pub type Payoffs64 = games::Payoffs<f64>;
pub type ExactEquilibrium = games::EquilibriumProfile<Rational>;
pub type Equilibrium64 = games::EquilibriumProfile<f64>;
pub type PggSpec64 = games::PggSpec<f64>;
