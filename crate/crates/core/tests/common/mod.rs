//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use num_bigint::BigUint;
use rand::{Rng, RngCore};

use dilemma::games::{Action, Payoffs};
use dilemma::Rational;

/// Row player's payoff read straight off the matrix.
fn u(x: &Payoffs<Rational>, mine: Action, theirs: Action) -> Rational {
    match (mine, theirs) {
        (Action::C, Action::C) => x.r,
        (Action::C, Action::D) => x.s,
        (Action::D, Action::C) => x.t,
        (Action::D, Action::D) => x.p,
    }
}

/// Pure equilibria by checking every unilateral deviation.
pub fn brute_pure_equilibria(x: &Payoffs<Rational>) -> Vec<(Action, Action)> {
    let acts = [Action::C, Action::D];
    let mut out = Vec::new();
    for a in acts {
        for b in acts {
            let row_ok = u(x, a, b) >= u(x, a.other(), b);
            let col_ok = u(x, b, a) >= u(x, b.other(), a);
            if row_ok && col_ok {
                out.push((a, b));
            }
        }
    }
    out.sort();
    out
}

/// Strictly dominant action, if any.
pub fn brute_dominant(x: &Payoffs<Rational>) -> Option<Action> {
    [Action::C, Action::D]
        .into_iter()
        .find(|&a| [Action::C, Action::D].iter().all(|&b| u(x, a, b) > u(x, a.other(), b)))
}

/// Random admissible payoffs with distinct T/R and P/S, entries in
/// `[-range, range]` with denominators up to 4.
pub fn random_admissible(rng: &mut impl RngCore, range: i64) -> Payoffs<Rational> {
    loop {
        let mut v = || Rational::new(rng.random_range(-range * 4..=range * 4), rng.random_range(1..=4));
        let (r, t, s, p) = (v(), v(), v(), v());
        if t == r || p == s {
            continue;
        }
        let lo = if p > s { p } else { s };
        let hi = if t < r { t } else { r };
        if lo < hi {
            return Payoffs { r, t, s, p };
        }
    }
}

/// |z| of the pooled two-proportion test, to 20 decimal places, using
/// only integer arithmetic:
/// `z^2 = N (a_s b_n - b_s a_n)^2 / (a_n b_n S (N - S))`.
/// Returns `None` when the pooled proportion is 0 or 1.
pub fn exact_abs_z(a_s: u64, a_n: u64, b_s: u64, b_n: u64) -> Option<f64> {
    let big = |x: u64| BigUint::from(x);
    let s = a_s + b_s;
    let n = a_n + b_n;
    if s == 0 || s == n {
        return None;
    }
    let cross = (a_s as i128 * b_n as i128 - b_s as i128 * a_n as i128).unsigned_abs();
    let num = big(n) * BigUint::from(cross) * BigUint::from(cross);
    let den = big(a_n) * big(b_n) * big(s) * big(n - s);
    let scale = BigUint::from(10u32).pow(40);
    let root = (num * scale / den).sqrt();
    // root = floor(|z| * 1e20)
    let digits = root.to_string();
    let (int, frac) = if digits.len() > 20 {
        digits.split_at(digits.len() - 20)
    } else {
        ("0", digits.as_str())
    };
    let frac = format!("{frac:0>20}");
    Some(format!("{int}.{frac}").parse().unwrap())
}

/// Signed z with the library's convention (positive when `a` cooperates
/// more).
pub fn exact_z(a_s: u64, a_n: u64, b_s: u64, b_n: u64) -> Option<f64> {
    let sign = (a_s as i128 * b_n as i128 - b_s as i128 * a_n as i128).signum() as f64;
    exact_abs_z(a_s, a_n, b_s, b_n).map(|z| sign * z)
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper normal tail via composite Simpson integration of the density on
/// `[0, x]`, or a continued fraction beyond 6 where the subtraction from
/// 1/2 would lose precision.
pub fn upper_tail(x: f64) -> f64 {
    let x = x.abs();
    if x > 6.0 {
        // Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
        let mut frac = x;
        for k in (1..=60).rev() {
            frac = x + k as f64 / frac;
        }
        return phi(x) / frac;
    }
    let n = 4000;
    let h = x / n as f64;
    let mut sum = phi(0.0) + phi(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * phi(i as f64 * h);
    }
    0.5 - sum * h / 3.0
}
