use serde::{Deserialize, Serialize};

use super::{ProportionSample, StatsError};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImprovementClass {
    /// Value in [0, 1]: the fine-tuned model moved toward the teacher.
    Learning,
    /// Value above 1: moved past the teacher.
    Overcorrection,
    /// Value below 0: moved away from the teacher.
    Exacerbation,
    /// Teacher and base model agree, so the metric is undefined.
    Degenerate,
}

impl ImprovementClass {
    pub fn name(self) -> &'static str {
        match self {
            ImprovementClass::Learning => "learning",
            ImprovementClass::Overcorrection => "overcorrection",
            ImprovementClass::Exacerbation => "exacerbation",
            ImprovementClass::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementResult<T> {
    /// Teacher cooperation ratio.
    pub c70: T,
    /// Base student ratio.
    pub c7: T,
    /// Fine-tuned student ratio.
    pub c7ft: T,
    /// `None` exactly when the class is `Degenerate`.
    pub value: Option<T>,
    pub class: ImprovementClass,
}

impl<T: Scalar> ImprovementResult<T> {
    pub fn value_f64(&self) -> Option<f64> {
        self.value.map(|v| v.to_f64_lossy())
    }
}

/// `1 - (c70 - c7ft) / (c70 - c7)` with its classification.
pub fn improvement<T: Scalar>(c70: T, c7: T, c7ft: T) -> Result<ImprovementResult<T>, StatsError> {
    for x in [c70, c7, c7ft] {
        if !x.is_finite_value() {
            return Err(StatsError::NonFinite);
        }
        if x < T::zero() || x > T::one() {
            return Err(StatsError::ProportionOutOfRange(x.to_f64_lossy()));
        }
    }
    let denom = c70 - c7;
    if denom == T::zero() {
        return Ok(ImprovementResult {
            c70,
            c7,
            c7ft,
            value: None,
            class: ImprovementClass::Degenerate,
        });
    }
    let value = T::one() - (c70 - c7ft) / denom;
    let class = if value < T::zero() {
        ImprovementClass::Exacerbation
    } else if value > T::one() {
        ImprovementClass::Overcorrection
    } else {
        ImprovementClass::Learning
    };
    Ok(ImprovementResult {
        c70,
        c7,
        c7ft,
        value: Some(value),
        class,
    })
}

/// Exact improvement from cooperation counts.
pub fn improvement_from_counts(
    c70: ProportionSample,
    c7: ProportionSample,
    c7ft: ProportionSample,
) -> Result<ImprovementResult<Rational>, StatsError> {
    let ratio = |s: ProportionSample| -> Result<Rational, StatsError> {
        s.check()?;
        let n = i64::try_from(s.n).map_err(|_| StatsError::InvalidSample { successes: s.successes, n: s.n })?;
        Ok(Rational::new(s.successes as i64, n))
    };
    improvement(ratio(c70)?, ratio(c7)?, ratio(c7ft)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn worked_examples_exact() {
        let cases = [
            ((9, 5, 9), Some(r(1, 1)), ImprovementClass::Learning),
            ((9, 5, 5), Some(r(0, 1)), ImprovementClass::Learning),
            ((8, 6, 9), Some(r(3, 2)), ImprovementClass::Overcorrection),
            ((8, 6, 5), Some(r(-1, 2)), ImprovementClass::Exacerbation),
            ((7, 7, 3), None, ImprovementClass::Degenerate),
        ];
        for ((a, b, c), value, class) in cases {
            let out = improvement(r(a, 10), r(b, 10), r(c, 10)).unwrap();
            assert_eq!(out.value, value);
            assert_eq!(out.class, class);
        }
    }

    #[test]
    fn float_inputs() {
        let out = improvement(0.8f64, 0.6, 0.9).unwrap();
        assert!((out.value.unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(out.class, ImprovementClass::Overcorrection);
        assert!(matches!(
            improvement(1.2f64, 0.5, 0.5),
            Err(StatsError::ProportionOutOfRange(_))
        ));
        assert_eq!(improvement(f64::NAN, 0.5, 0.5), Err(StatsError::NonFinite));
    }

    #[test]
    fn from_counts() {
        let s = |k| ProportionSample::new(k, 300).unwrap();
        let out = improvement_from_counts(s(240), s(180), s(270)).unwrap();
        assert_eq!(out.value, Some(r(3, 2)));
    }
}
