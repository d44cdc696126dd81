//! Cooperation ratios, two-proportion z-tests, the improvement metric and
//! public good summaries.
//!
//! Everything here is a pure function of counts. Ratios stay at full
//! precision; rounding is left to [`crate::report`].

mod improvement;
pub mod reference;
mod table;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub use improvement::{improvement, improvement_from_counts, ImprovementClass, ImprovementResult};
pub use table::{
    group_of, group_samples, improvement_groups, improvement_rows, sample_of, split_key, table1_from_samples,
    table1_report, Denominator, GroupBy, ImprovementRow, SummaryRow, Table1, Table1Options, Table1Row,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("invalid sample: {successes} successes out of {n}")]
    InvalidSample { successes: u64, n: u64 },
    #[error("pooled proportion is 0 or 1 but the samples differ")]
    DegeneratePool,
    #[error("proportion {0} is outside [0, 1]")]
    ProportionOutOfRange(f64),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("scenario sets differ: {0}")]
    ScenarioMismatch(String),
}

/// Cooperation count out of `n` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProportionSample {
    pub successes: u64,
    pub n: u64,
}

impl ProportionSample {
    pub fn new(successes: u64, n: u64) -> Result<Self, StatsError> {
        if n == 0 {
            return Err(StatsError::EmptySample);
        }
        if successes > n {
            return Err(StatsError::InvalidSample { successes, n });
        }
        Ok(Self { successes, n })
    }

    fn check(&self) -> Result<(), StatsError> {
        Self::new(self.successes, self.n).map(|_| ())
    }

    pub fn ratio(&self) -> f64 {
        self.successes as f64 / self.n as f64
    }
}

pub fn coop_ratio(sample: ProportionSample) -> Result<f64, StatsError> {
    sample.check()?;
    Ok(sample.ratio())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Upper tail at |z|.
    #[default]
    OneSided,
    TwoSided,
}

/// Star thresholds 0.001 / 0.01 / 0.05. `inclusive` makes each threshold
/// itself significant (`p <= 0.05` earns a star).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarPolicy {
    pub inclusive: bool,
}

const STAR_LEVELS: [(f64, &str); 3] = [(0.001, "***"), (0.01, "**"), (0.05, "*")];

pub fn stars(p_value: f64) -> &'static str {
    stars_with(p_value, StarPolicy::default())
}

pub fn stars_with(p_value: f64, policy: StarPolicy) -> &'static str {
    for (level, mark) in STAR_LEVELS {
        let hit = if policy.inclusive {
            p_value <= level
        } else {
            p_value < level
        };
        if hit {
            return mark;
        }
    }
    ""
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZTestOptions {
    pub tail: Tail,
    pub star_policy: StarPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTestResult {
    pub p1: f64,
    pub p2: f64,
    /// `p2 - p1`.
    pub diff: f64,
    pub se: f64,
    /// `(p1 - p2) / se`, so positive when the first sample cooperates more.
    pub z: f64,
    pub p_value: f64,
    pub stars: String,
    /// Pooled proportion was 0 or 1, so `se` is zero and `z` is set to 0.
    #[serde(default)]
    pub degenerate: bool,
}

pub fn two_prop_ztest(a: ProportionSample, b: ProportionSample) -> Result<ZTestResult, StatsError> {
    two_prop_ztest_with(a, b, ZTestOptions::default())
}

pub fn two_prop_ztest_with(
    a: ProportionSample,
    b: ProportionSample,
    options: ZTestOptions,
) -> Result<ZTestResult, StatsError> {
    a.check()?;
    b.check()?;
    let (p1, p2) = (a.ratio(), b.ratio());
    let pooled = (a.successes + b.successes) as f64 / (a.n + b.n) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / a.n as f64 + 1.0 / b.n as f64)).sqrt();
    let (z, degenerate) = if se > 0.0 {
        ((p1 - p2) / se, false)
    } else if a.successes * b.n == b.successes * a.n {
        (0.0, true)
    } else {
        return Err(StatsError::DegeneratePool);
    };
    let upper = Normal::standard().sf(z.abs());
    let p_value = match options.tail {
        Tail::OneSided => upper,
        Tail::TwoSided => (2.0 * upper).min(1.0),
    };
    Ok(ZTestResult {
        p1,
        p2,
        diff: p2 - p1,
        se,
        z,
        p_value,
        stars: stars_with(p_value, options.star_policy).to_string(),
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PggStats<F> {
    pub mean: F,
    /// Sample standard deviation (n - 1 denominator) over `sqrt(n)`.
    pub se: F,
    pub n: usize,
    /// Only one observation, so `se` is reported as zero.
    pub single: bool,
}

pub fn pgg_stats<F: Float>(contributions: &[F]) -> Result<PggStats<F>, StatsError> {
    if contributions.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if contributions.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = contributions.len();
    let nf = F::from(n).expect("count fits the float type");
    let mean = contributions.iter().fold(F::zero(), |acc, &x| acc + x) / nf;
    if n == 1 {
        return Ok(PggStats {
            mean,
            se: F::zero(),
            n,
            single: true,
        });
    }
    let ss = contributions.iter().fold(F::zero(), |acc, &x| acc + (x - mean) * (x - mean));
    let sd = (ss / (nf - F::one())).sqrt();
    Ok(PggStats {
        mean,
        se: sd / nf.sqrt(),
        n,
        single: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(successes: u64, n: u64) -> ProportionSample {
        ProportionSample::new(successes, n).unwrap()
    }

    #[test]
    fn ratios() {
        assert_eq!(coop_ratio(s(225, 300)).unwrap(), 0.75);
        assert_eq!(coop_ratio(s(0, 300)).unwrap(), 0.0);
        assert_eq!(coop_ratio(s(300, 300)).unwrap(), 1.0);
        assert_eq!(
            coop_ratio(ProportionSample { successes: 0, n: 0 }),
            Err(StatsError::EmptySample)
        );
        assert!(ProportionSample::new(4, 3).is_err());
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.02), "*");
        assert_eq!(stars(0.05), "");
        assert_eq!(stars_with(0.05, StarPolicy { inclusive: true }), "*");
        assert_eq!(stars_with(0.001, StarPolicy { inclusive: true }), "***");
        assert_eq!(stars(0.3), "");
    }

    #[test]
    fn fixture_ztest() {
        let r = two_prop_ztest(s(225, 300), s(213, 300)).unwrap();
        assert_eq!((r.p1, r.p2), (0.75, 0.71));
        assert!((r.diff + 0.04).abs() < 1e-12);
        assert!((r.se - 0.036249).abs() < 1e-6);
        assert!((r.z - 1.1035).abs() < 1e-4);
        assert!((r.p_value - 0.1349).abs() < 1e-4);
        assert_eq!(r.stars, "");

        let r = two_prop_ztest(s(150, 300), s(120, 300)).unwrap();
        assert!((r.z - 2.462).abs() < 1e-3);
        assert!((r.p_value - 0.0069).abs() < 1e-4);
        assert_eq!(r.stars, "**");

        let two = two_prop_ztest_with(
            s(150, 300),
            s(120, 300),
            ZTestOptions {
                tail: Tail::TwoSided,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((two.p_value - 2.0 * r.p_value).abs() < 1e-15);
    }

    #[test]
    fn identical_and_degenerate_samples() {
        let r = two_prop_ztest(s(240, 300), s(240, 300)).unwrap();
        assert_eq!((r.diff, r.z, r.p_value, r.stars.as_str()), (0.0, 0.0, 0.5, ""));
        assert!(!r.degenerate);
        let r = two_prop_ztest(s(300, 300), s(50, 50)).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.se, r.z, r.p_value), (0.0, 0.0, 0.5));
        let r = two_prop_ztest(s(0, 10), s(0, 30)).unwrap();
        assert!(r.degenerate);
    }

    #[test]
    fn pgg_summary() {
        let r = pgg_stats(&[10.0, 10.0, 10.0, 10.0]).unwrap();
        assert_eq!((r.mean, r.se, r.n), (10.0, 0.0, 4));
        let r = pgg_stats(&[0.0, 10.0]).unwrap();
        assert_eq!(r.mean, 5.0);
        assert!((r.se - 5.0).abs() < 1e-12);
        let r = pgg_stats(&[7.0f32]).unwrap();
        assert!(r.single && r.se == 0.0);
        assert_eq!(pgg_stats::<f64>(&[]), Err(StatsError::EmptySample));
        assert_eq!(pgg_stats(&[f64::NAN]), Err(StatsError::NonFinite));
    }
}
