//! Published normal-vs-scaled comparison for the fine-tuned 7B student,
//! kept as annotation data. The printed SE and z columns do not follow
//! from the printed ratios under the pooled formula at n = 300, so these
//! values are compared against, never asserted.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub scenario: &'static str,
    pub normal: f64,
    pub oos: f64,
    pub diff: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    pub stars: &'static str,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    scenario: &'static str,
    normal: f64,
    oos: f64,
    diff: f64,
    se: f64,
    z: f64,
    p_value: f64,
    stars: &'static str,
) -> ReferenceRow {
    ReferenceRow {
        scenario,
        normal,
        oos,
        diff,
        se,
        z,
        p_value,
        stars,
    }
}

/// Trial count per scenario in the published runs.
pub const REFERENCE_N: u64 = 300;

pub const TABLE1: [ReferenceRow; 20] = [
    row("team_prison", 0.75, 0.71, -0.04, 0.02, 1.6, 0.05, "*"),
    row("team_delight", 0.74, 0.76, 0.01, 0.03, -0.53, 0.3, ""),
    row("team_staghunt", 0.74, 0.71, -0.03, 0.03, 1.18, 0.12, ""),
    row("team_snowdrift", 0.70, 0.72, 0.02, 0.03, -0.88, 0.19, ""),
    row("IR_prison", 0.74, 0.71, -0.03, 0.03, 1.05, 0.15, ""),
    row("IR_delight", 0.75, 0.70, -0.05, 0.02, 2.0, 0.02, "*"),
    row("IR_staghunt", 0.72, 0.69, -0.03, 0.03, 1.29, 0.10, ""),
    row("IR_snowdrift", 0.71, 0.74, 0.02, 0.03, -0.89, 0.19, ""),
    row("friendsharing_prison", 0.75, 0.70, -0.05, 0.02, 2.0, 0.02, "*"),
    // One rendering prints SE 4.02 here; 0.02 is taken as the intended value.
    row("friendsharing_delight", 0.79, 0.74, -0.05, 0.02, 2.11, 0.02, "*"),
    row("friendsharing_staghunt", 0.71, 0.77, 0.06, 0.03, -2.17, 0.01, "**"),
    row("friendsharing_snowdrift", 0.76, 0.76, 0.00, 0.02, -0.14, 0.45, ""),
    row("biz_prison", 0.74, 0.70, -0.04, 0.03, 1.72, 0.04, "*"),
    row("biz_delight", 0.74, 0.76, 0.03, 0.03, -1.05, 0.15, ""),
    row("biz_staghunt", 0.71, 0.63, -0.08, 0.03, 3.06, 0.00, "***"),
    row("biz_snowdrift", 0.74, 0.76, 0.01, 0.03, -0.53, 0.30, ""),
    row("environment_prison", 0.63, 0.66, 0.03, 0.03, -0.96, 0.17, ""),
    row("environment_delight", 0.69, 0.72, 0.03, 0.03, -1.0, 0.16, ""),
    row("environment_staghunt", 0.65, 0.64, -0.02, 0.03, 0.61, 0.27, ""),
    row("environment_snowdrift", 0.62, 0.67, 0.05, 0.03, -1.67, 0.05, "*"),
];

pub const TABLE1_AVERAGE: ReferenceRow = row("AVERAGE", 0.72, 0.71, -0.01, 0.03, 0.31, 0.38, "");
pub const TABLE1_MEDIAN: ReferenceRow = row("MEDIAN", 0.74, 0.71, -0.01, 0.03, 1.05, 0.15, "");

pub fn lookup(scenario: &str) -> Option<&'static ReferenceRow> {
    TABLE1.iter().find(|r| r.scenario == scenario)
}

/// Cooperation counts implied by a printed ratio at [`REFERENCE_N`].
pub fn implied_count(ratio: f64) -> u64 {
    (ratio * REFERENCE_N as f64).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_covers_twenty_distinct_scenarios() {
        let mut keys: Vec<_> = TABLE1.iter().map(|r| r.scenario).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 20);
        assert_eq!(implied_count(0.75), 225);
        assert_eq!(implied_count(0.71), 213);
    }
}
