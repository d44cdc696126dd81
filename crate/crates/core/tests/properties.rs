mod common;

use proptest::prelude::*;

use dilemma::agents::{parse_action, parse_contribution, TrialSeed};
use dilemma::games::{classify, equilibria, pgg_payoffs, scale, social_optimum, Action, Payoffs, PggSpec};
use dilemma::runner::{aggregate_trials, canonical_log, Trial};
use dilemma::scenarios::{extract_payoffs, Catalog};
use dilemma::stats::{
    improvement, pgg_stats, stars, two_prop_ztest, ImprovementClass, ProportionSample,
};
use dilemma::Rational;

fn rational() -> impl Strategy<Value = Rational> {
    (-400i64..=400, 1i64..=8).prop_map(|(n, d)| Rational::new(n, d))
}

fn admissible() -> impl Strategy<Value = Payoffs<Rational>> {
    (rational(), rational(), rational(), rational()).prop_filter_map("not admissible", |(r, t, s, p)| {
        Payoffs::new(r, t, s, p).ok().filter(|x| classify(x).is_ok())
    })
}

fn sample() -> impl Strategy<Value = ProportionSample> {
    (1u64..=2000).prop_flat_map(|n| (0..=n).prop_map(move |s| ProportionSample { successes: s, n }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn equilibria_match_brute_force(x in admissible()) {
        let eq = equilibria(&x).unwrap();
        prop_assert_eq!(&eq.pure_profiles, &common::brute_pure_equilibria(&x));
        prop_assert_eq!(eq.dominant_action, common::brute_dominant(&x));
        prop_assert_eq!(classify(&x).unwrap().is_rationalizable(), eq.dominant_action.is_some());
        if let Some(q) = eq.mixed_coop_prob {
            prop_assert!(q > Rational::from_integer(0) && q < Rational::from_integer(1));
            prop_assert_eq!(x.expected(Action::C, q), x.expected(Action::D, q));
        }
    }

    #[test]
    fn positive_scaling_preserves_structure(x in admissible(), k in (1i64..=50, 1i64..=10)) {
        let k = Rational::new(k.0, k.1);
        let y = scale(&x, k).unwrap();
        prop_assert_eq!(classify(&x).unwrap(), classify(&y).unwrap());
        prop_assert_eq!(equilibria(&x).unwrap(), equilibria(&y).unwrap());
    }

    #[test]
    fn mutual_cooperation_is_the_symmetric_optimum(x in admissible()) {
        let opt = social_optimum(&x).unwrap();
        prop_assert_eq!(opt.symmetric, (Action::C, Action::C));
    }

    #[test]
    fn float_and_exact_agree(x in admissible()) {
        let exact = equilibria(&x).unwrap();
        let float = equilibria(&x.to_f64()).unwrap();
        prop_assert_eq!(&exact.pure_profiles, &float.pure_profiles);
        if let (Some(q), Some(qf)) = (exact.mixed_coop_prob, float.mixed_coop_prob) {
            let q = *q.numer() as f64 / *q.denom() as f64;
            prop_assert!((q - qf).abs() < 1e-9);
        }
    }

    #[test]
    fn pgg_conservation_and_free_riding(
        n in 2usize..=8,
        e in 1u32..=50,
        m_num in 11u32..=79,
        raw in prop::collection::vec(0u32..=1000, 8),
        who in 0usize..8,
    ) {
        let endowment = e as f64;
        let multiplier = 1.0 + (m_num as f64 / 80.0) * (n as f64 - 1.0);
        prop_assume!(multiplier > 1.0 && multiplier < n as f64);
        let spec = PggSpec::new(n, endowment, multiplier).unwrap();
        let c: Vec<f64> = raw[..n].iter().map(|&x| endowment * x as f64 / 1000.0).collect();
        let pay = pgg_payoffs(&spec, &c).unwrap();
        let total_c: f64 = c.iter().sum();
        let total_pay: f64 = pay.iter().sum();
        let expected = n as f64 * endowment + (multiplier - 1.0) * total_c;
        prop_assert!((total_pay - expected).abs() < 1e-9 * expected.max(1.0));

        // Contributing less never lowers one's own payoff.
        let i = who % n;
        let mut less = c.clone();
        less[i] = 0.0;
        let pay_less = pgg_payoffs(&spec, &less).unwrap();
        prop_assert!(pay_less[i] >= pay[i] - 1e-12);
    }

    #[test]
    fn pgg_exact_conservation(raw in prop::collection::vec(0i64..=10, 4)) {
        let spec = PggSpec::new(4, Rational::from_integer(10), Rational::new(8, 5)).unwrap();
        let c: Vec<Rational> = raw.iter().map(|&x| Rational::from_integer(x)).collect();
        let pay = pgg_payoffs(&spec, &c).unwrap();
        let total: Rational = pay.iter().copied().sum();
        let contributed: Rational = c.iter().copied().sum();
        prop_assert_eq!(total, Rational::from_integer(40) + Rational::new(3, 5) * contributed);
    }

    #[test]
    fn ztest_antisymmetry(a in sample(), b in sample()) {
        let ab = two_prop_ztest(a, b).unwrap();
        let ba = two_prop_ztest(b, a).unwrap();
        prop_assert_eq!(ab.z, -ba.z);
        prop_assert_eq!(ab.diff, -ba.diff);
        prop_assert_eq!(ab.se, ba.se);
        prop_assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn ztest_matches_oracle(a in sample(), b in sample()) {
        let r = two_prop_ztest(a, b).unwrap();
        match common::exact_z(a.successes, a.n, b.successes, b.n) {
            Some(z) => {
                prop_assert!((r.z - z).abs() < 1e-9, "z {} vs oracle {}", r.z, z);
                prop_assert!((r.p_value - common::upper_tail(z)).abs() < 1e-9);
            }
            None => prop_assert!(r.degenerate && r.z == 0.0),
        }
    }

    #[test]
    fn ztest_monotone_in_second_sample(a in sample(), n in 1u64..=500, s1 in 0u64..=500, s2 in 0u64..=500) {
        let (lo, hi) = (s1.min(s2).min(n), s1.max(s2).min(n));
        let z_lo = two_prop_ztest(a, ProportionSample { successes: lo, n }).unwrap().z;
        let z_hi = two_prop_ztest(a, ProportionSample { successes: hi, n }).unwrap().z;
        prop_assert!(z_hi <= z_lo + 1e-12);
    }

    #[test]
    fn stars_monotone(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(stars(lo).len() >= stars(hi).len());
    }

    #[test]
    fn improvement_class_is_affine_invariant(
        c in (0i64..=100, 0i64..=100, 0i64..=100),
        a in 1i64..=100,
        b in 0i64..=100,
    ) {
        let r = |x: i64| Rational::new(x, 100);
        let base = improvement(r(c.0), r(c.1), r(c.2)).unwrap();
        // x -> (a x + b') / 100 stays inside [0, 1].
        let scale = Rational::new(a, 100);
        let shift = Rational::new(b, 100) * (Rational::from_integer(1) - scale);
        let f = |x: Rational| scale * x + shift;
        let moved = improvement(f(r(c.0)), f(r(c.1)), f(r(c.2))).unwrap();
        prop_assert_eq!(base.class, moved.class);
        prop_assert_eq!(base.value, moved.value);
        prop_assert_eq!(base.class == ImprovementClass::Degenerate, c.0 == c.1);
    }

    #[test]
    fn pgg_stats_translation(xs in prop::collection::vec(0.0f64..10.0, 1..50), shift in -100.0f64..100.0) {
        let a = pgg_stats(&xs).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let b = pgg_stats(&moved).unwrap();
        prop_assert!((b.mean - (a.mean + shift)).abs() < 1e-9);
        prop_assert!((b.se - a.se).abs() < 1e-9);
        prop_assert!(a.se >= 0.0);
    }

    #[test]
    fn strict_parse_rules(text in "[a-zA-Z ,.\n]{0,40}") {
        let upper_c = text.split(|c: char| !c.is_alphanumeric() && c != '_').any(|w| w == "C");
        let upper_d = text.split(|c: char| !c.is_alphanumeric() && c != '_').any(|w| w == "D");
        match (upper_c, upper_d) {
            (true, false) => prop_assert_eq!(parse_action(&text), Ok(Action::C)),
            (false, true) => prop_assert_eq!(parse_action(&text), Ok(Action::D)),
            _ => prop_assert!(parse_action(&text).is_err()),
        }
    }

    #[test]
    fn contribution_parse_stays_in_range(x in 0u32..=1000) {
        let v = x as f64 / 100.0;
        prop_assert_eq!(parse_contribution(&format!("I give {v} points"), 10.0), Ok(v));
    }

    #[test]
    fn seeds_are_distinct_per_slot(seed in any::<u64>(), i in 0u64..1000, j in 0u64..1000, attempt in 0u32..4) {
        let a = TrialSeed::derive(seed, "biz_prison", i, attempt);
        prop_assert_eq!(a, TrialSeed::derive(seed, "biz_prison", i, attempt));
        if i != j {
            prop_assert_ne!(a, TrialSeed::derive(seed, "biz_prison", j, attempt));
        }
        prop_assert_ne!(a, TrialSeed::derive(seed, "biz_prison", i, attempt + 1));
    }

    #[test]
    fn templates_round_trip(x in admissible()) {
        let catalog = Catalog::builtin().unwrap();
        for game in &catalog.corpus.games {
            let text = game.template.render(&x);
            prop_assert_eq!(extract_payoffs(&text).unwrap(), x);
        }
    }

    #[test]
    fn aggregation_ignores_order(order in Just((0..60u32).collect::<Vec<_>>()).prop_shuffle(), coop in prop::collection::vec(any::<bool>(), 60)) {
        let trials: Vec<Trial> = (0..60u32)
            .map(|i| {
                let a = if coop[i as usize] { "C" } else { "D" };
                let key = if i % 2 == 0 { "biz_prison" } else { "team_delight" };
                serde_json::from_str(&format!(
                    r#"{{"format_version":1,"scenario":"{key}","index":{i},"attempt":0,"status":"ok","action":"{a}","contribution":null,"raw_text":"{a}","motivation":null,"latency_ms":{i},"ts":"t{i}"}}"#
                ))
                .unwrap()
            })
            .collect();
        let shuffled: Vec<Trial> = order.iter().map(|&i| trials[i as usize].clone()).collect();
        let agg = aggregate_trials(&trials);
        prop_assert_eq!(&agg, &aggregate_trials(&shuffled));
        prop_assert_eq!(canonical_log(&trials), canonical_log(&shuffled));
        for a in agg.values() {
            prop_assert_eq!(a.n_coop + a.n_defect, a.n_ok);
        }
    }
}
