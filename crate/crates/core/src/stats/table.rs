use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::improvement::{improvement_from_counts, ImprovementResult};
use super::{two_prop_ztest_with, ProportionSample, StatsError, ZTestOptions, ZTestResult};
use crate::runner::{Aggregate, ScenarioAggregate};
use crate::scalar::Rational;

const SCALED_SUFFIX: &str = "_x2";

/// Which trial count a cooperation ratio is taken over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Parsed trials only (`n_ok`).
    #[default]
    Parsed,
    /// Every trial, counting invalid ones as non-cooperation.
    Initialized,
}

pub fn sample_of(agg: &ScenarioAggregate, denominator: Denominator) -> Result<ProportionSample, StatsError> {
    let n = match denominator {
        Denominator::Parsed => agg.n_ok,
        Denominator::Initialized => agg.n_total(),
    };
    ProportionSample::new(agg.n_coop, n)
}

/// `(context, game)` halves of a scenario key.
pub fn split_key(key: &str) -> (&str, &str) {
    key.split_once('_').unwrap_or((key, ""))
}

fn base_key(key: &str) -> &str {
    key.strip_suffix(SCALED_SUFFIX).unwrap_or(key)
}

fn is_matrix(agg: &ScenarioAggregate) -> bool {
    agg.contributions.is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Game,
    Context,
}

impl GroupBy {
    pub fn name(self) -> &'static str {
        match self {
            GroupBy::Game => "game",
            GroupBy::Context => "context",
        }
    }
}

pub fn group_of(key: &str, by: GroupBy) -> &str {
    let (context, game) = split_key(key);
    match by {
        GroupBy::Game => game,
        GroupBy::Context => context,
    }
}

/// Pools cooperation counts of the 2x2 scenarios in `agg` by game or
/// context.
pub fn group_samples(
    agg: &Aggregate,
    by: GroupBy,
    denominator: Denominator,
) -> Result<BTreeMap<String, ProportionSample>, StatsError> {
    let mut out: BTreeMap<String, ProportionSample> = BTreeMap::new();
    for (key, a) in agg.iter().filter(|(_, a)| is_matrix(a)) {
        let s = sample_of(a, denominator)?;
        let entry = out
            .entry(group_of(key, by).to_string())
            .or_insert(ProportionSample { successes: 0, n: 0 });
        entry.successes += s.successes;
        entry.n += s.n;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table1Options {
    pub ztest: ZTestOptions,
    pub denominator: Denominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub scenario: String,
    pub normal: ProportionSample,
    pub oos: ProportionSample,
    pub test: ZTestResult,
}

/// Column-wise mean or median of the numeric row statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub normal: f64,
    pub oos: f64,
    pub diff: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
    pub average: SummaryRow,
    pub median: SummaryRow,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

fn summarize(rows: &[Table1Row], f: fn(&[f64]) -> f64) -> SummaryRow {
    let col = |g: fn(&Table1Row) -> f64| f(&rows.iter().map(g).collect::<Vec<_>>());
    SummaryRow {
        normal: col(|r| r.test.p1),
        oos: col(|r| r.test.p2),
        diff: col(|r| r.test.diff),
        se: col(|r| r.test.se),
        z: col(|r| r.test.z),
        p_value: col(|r| r.test.p_value),
    }
}

/// Tests each `(scenario, normal, oos)` pair and appends unweighted
/// AVERAGE and MEDIAN rows.
pub fn table1_from_samples(
    pairs: Vec<(String, ProportionSample, ProportionSample)>,
    options: Table1Options,
) -> Result<Table1, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let rows = pairs
        .into_iter()
        .map(|(scenario, normal, oos)| {
            let test = two_prop_ztest_with(normal, oos, options.ztest)?;
            Ok(Table1Row {
                scenario,
                normal,
                oos,
                test,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    Ok(Table1 {
        average: summarize(&rows, mean),
        median: summarize(&rows, median),
        rows,
    })
}

fn by_base(agg: &Aggregate) -> BTreeMap<&str, &ScenarioAggregate> {
    agg.iter()
        .filter(|(_, a)| is_matrix(a))
        .map(|(k, a)| (base_key(k), a))
        .collect()
}

fn mismatch(left: &BTreeSet<&str>, right: &BTreeSet<&str>) -> StatsError {
    let only_left: Vec<_> = left.difference(right).copied().collect();
    let only_right: Vec<_> = right.difference(left).copied().collect();
    StatsError::ScenarioMismatch(format!(
        "only in first: [{}]; only in second: [{}]",
        only_left.join(", "),
        only_right.join(", ")
    ))
}

/// Normal-vs-scaled comparison. Scaled keys (`<context>_<game>_x2`) are
/// paired with their unscaled counterpart; plain keys pair with themselves.
pub fn table1_report(normal: &Aggregate, oos: &Aggregate, options: Table1Options) -> Result<Table1, StatsError> {
    let left = by_base(normal);
    let right = by_base(oos);
    let lk: BTreeSet<&str> = left.keys().copied().collect();
    let rk: BTreeSet<&str> = right.keys().copied().collect();
    if lk != rk || left.len() != normal.values().filter(|a| is_matrix(a)).count() {
        return Err(mismatch(&lk, &rk));
    }
    let pairs = left
        .iter()
        .map(|(key, a)| {
            Ok((
                key.to_string(),
                sample_of(a, options.denominator)?,
                sample_of(right[key], options.denominator)?,
            ))
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    table1_from_samples(pairs, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub label: String,
    pub result: ImprovementResult<Rational>,
}

fn matrix_keys(agg: &Aggregate) -> BTreeSet<&str> {
    agg.iter()
        .filter(|(_, a)| is_matrix(a))
        .map(|(k, _)| k.as_str())
        .collect()
}

fn same_keys(c70: &Aggregate, c7: &Aggregate, c7ft: &Aggregate) -> Result<BTreeSet<String>, StatsError> {
    let k70 = matrix_keys(c70);
    for other in [c7, c7ft] {
        let k = matrix_keys(other);
        if k != k70 {
            return Err(mismatch(&k70, &k));
        }
    }
    Ok(k70.into_iter().map(str::to_string).collect())
}

/// Per-scenario improvement of a fine-tuned student over its base model,
/// measured against the teacher.
pub fn improvement_rows(
    c70: &Aggregate,
    c7: &Aggregate,
    c7ft: &Aggregate,
    denominator: Denominator,
) -> Result<Vec<ImprovementRow>, StatsError> {
    same_keys(c70, c7, c7ft)?
        .into_iter()
        .map(|key| {
            let result = improvement_from_counts(
                sample_of(&c70[&key], denominator)?,
                sample_of(&c7[&key], denominator)?,
                sample_of(&c7ft[&key], denominator)?,
            )?;
            Ok(ImprovementRow { label: key, result })
        })
        .collect()
}

/// Improvement computed on counts pooled by game or context.
pub fn improvement_groups(
    c70: &Aggregate,
    c7: &Aggregate,
    c7ft: &Aggregate,
    by: GroupBy,
    denominator: Denominator,
) -> Result<Vec<ImprovementRow>, StatsError> {
    same_keys(c70, c7, c7ft)?;
    let g70 = group_samples(c70, by, denominator)?;
    let g7 = group_samples(c7, by, denominator)?;
    let gft = group_samples(c7ft, by, denominator)?;
    g70.into_iter()
        .map(|(label, s70)| {
            let result = improvement_from_counts(s70, g7[&label], gft[&label])?;
            Ok(ImprovementRow { label, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ImprovementClass;

    fn agg(entries: &[(&str, u64, u64)]) -> Aggregate {
        entries
            .iter()
            .map(|&(k, coop, n)| {
                (
                    k.to_string(),
                    ScenarioAggregate {
                        n_ok: n,
                        n_coop: coop,
                        n_defect: n - coop,
                        n_invalid: 0,
                        contributions: vec![],
                    },
                )
            })
            .collect()
    }

    #[test]
    fn pairs_scaled_keys_and_summarizes() {
        let normal = agg(&[("team_prison", 225, 300), ("biz_delight", 222, 300)]);
        let oos = agg(&[("team_prison_x2", 213, 300), ("biz_delight_x2", 228, 300)]);
        let t = table1_report(&normal, &oos, Table1Options::default()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].scenario, "biz_delight");
        assert_eq!(t.rows[1].scenario, "team_prison");
        assert!((t.rows[1].test.z - 1.1035).abs() < 1e-4);
        let mean_z = (t.rows[0].test.z + t.rows[1].test.z) / 2.0;
        assert_eq!(t.average.z, mean_z);
        assert_eq!(t.median.z, mean_z);
    }

    #[test]
    fn identical_logs_and_single_rows() {
        let a = agg(&[("team_prison", 225, 300), ("IR_staghunt", 216, 300)]);
        let t = table1_report(&a, &a, Table1Options::default()).unwrap();
        assert!(t.rows.iter().all(|r| r.test.z == 0.0));
        assert_eq!(t.average.z, 0.0);

        let one = agg(&[("team_prison", 225, 300)]);
        let t = table1_report(&one, &agg(&[("team_prison_x2", 200, 300)]), Table1Options::default()).unwrap();
        assert_eq!(t.average, t.median);
    }

    #[test]
    fn mismatched_sets() {
        let a = agg(&[("team_prison", 225, 300)]);
        let b = agg(&[("team_delight_x2", 200, 300)]);
        assert!(matches!(
            table1_report(&a, &b, Table1Options::default()),
            Err(StatsError::ScenarioMismatch(_))
        ));
    }

    #[test]
    fn denominators() {
        let mut a = agg(&[("team_prison", 200, 290)]);
        a.get_mut("team_prison").unwrap().n_invalid = 10;
        let s = &a["team_prison"];
        assert_eq!(sample_of(s, Denominator::Parsed).unwrap().n, 290);
        assert_eq!(sample_of(s, Denominator::Initialized).unwrap().n, 300);
    }

    #[test]
    fn grouping() {
        let a = agg(&[
            ("team_prison", 10, 20),
            ("biz_prison", 5, 20),
            ("team_delight", 20, 20),
        ]);
        let g = group_samples(&a, GroupBy::Game, Denominator::Parsed).unwrap();
        assert_eq!(g["prison"], ProportionSample { successes: 15, n: 40 });
        let g = group_samples(&a, GroupBy::Context, Denominator::Parsed).unwrap();
        assert_eq!(g["team"], ProportionSample { successes: 30, n: 40 });
    }

    #[test]
    fn improvement_tables() {
        let c70 = agg(&[("team_prison", 240, 300), ("biz_prison", 210, 300)]);
        let c7 = agg(&[("team_prison", 180, 300), ("biz_prison", 210, 300)]);
        let ft = agg(&[("team_prison", 270, 300), ("biz_prison", 150, 300)]);
        let rows = improvement_rows(&c70, &c7, &ft, Denominator::Parsed).unwrap();
        assert_eq!(rows[0].label, "biz_prison");
        assert_eq!(rows[0].result.class, ImprovementClass::Degenerate);
        assert_eq!(rows[1].result.value, Some(Rational::new(3, 2)));

        // Pooled: c70 450/600, c7 390/600, ft 420/600 -> 1 - 30/60.
        let groups = improvement_groups(&c70, &c7, &ft, GroupBy::Game, Denominator::Parsed).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].result.value, Some(Rational::new(1, 2)));

        let missing = agg(&[("team_prison", 1, 300)]);
        assert!(improvement_rows(&c70, &missing, &ft, Denominator::Parsed).is_err());
    }
}
