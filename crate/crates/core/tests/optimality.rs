mod common;

use common::{all_sequences, bern_pair, counts, nu, seq_prob};
use proptest::prelude::*;
use tunable_ht::decision::calibrated_mp_test;
use tunable_ht::oracle::{minimize_accept, verify_bayes_instance, verify_mp_instance};
use tunable_ht::{
    bayes_test, dist::TypeSpace, infty_mp_test, lagrangian_mp_oracle, nu_type1_error,
    nu_type2_error, NuParam, OracleConfig, Prior, RandomizedTest,
};

fn nu_choice() -> impl Strategy<Value = NuParam> {
    prop_oneof![
        Just(nu(1.0)),
        Just(nu(1.5)),
        Just(nu(2.0)),
        Just(nu(4.0)),
        Just(NuParam::Infinite),
        (1.05..8.0f64).prop_map(nu),
    ]
}

fn distinct_thetas() -> impl Strategy<Value = (f64, f64)> {
    (0.05..0.95f64, 0.05..0.95f64).prop_filter("distinct", |(a, b)| (a - b).abs() > 0.02)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mp_oracle_agrees((t0, t1) in distinct_thetas(), v in nu_choice(), n in 2u32..=6, eps in 0.05..0.5f64, seed in any::<u64>()) {
        let r = verify_mp_instance(v, eps, &bern_pair(t0, t1), n, &OracleConfig::default(), seed).unwrap();
        prop_assert!(r.passed, "{r:?}");
    }

    #[test]
    fn bayes_oracle_agrees((t0, t1) in distinct_thetas(), v in nu_choice(), n in 2u32..=6, pi0 in 0.05..0.95f64, seed in any::<u64>()) {
        let p = bern_pair(t0, t1).with_prior(Prior::new(pi0, 1.0 - pi0).unwrap());
        let r = verify_bayes_instance(v, &p, n, &OracleConfig::default(), seed).unwrap();
        prop_assert!(r.passed, "{r:?}");
        prop_assert!(r.oracle_risk >= r.risk - 1e-9);
    }

    #[test]
    fn infinite_mp_is_the_likelihood_ratio_test((t0, t1) in distinct_thetas(), n in 1usize..=8, log2_lambda in -6.0..6.0f64) {
        let p = bern_pair(t0, t1);
        let lambda = log2_lambda.exp2();
        let t = infty_mp_test(lambda, &p, n as u32).unwrap();
        let (p0, p1) = ([1.0 - t0, t0], [1.0 - t1, t1]);
        for s in all_sequences(2, n) {
            let ratio = seq_prob(&p0, &s) / seq_prob(&p1, &s);
            let classical = if ratio <= lambda { 1.0 } else { 0.0 };
            // Ratios within rounding of λ may fall either way.
            if (ratio / lambda - 1.0).abs() > 1e-9 {
                prop_assert_eq!(t.reject_prob(&p, &counts(2, &s)).unwrap(), classical);
            }
        }
    }

    #[test]
    fn infinite_nu_errors_are_classical((t0, t1) in distinct_thetas(), n in 1usize..=8, bits in any::<u64>()) {
        let p = bern_pair(t0, t1);
        let t = RandomizedTest::from_fn(2, n as u32, |c| f64::from(((bits >> c[1]) & 1) as u32)).unwrap();
        let (p0, p1) = ([1.0 - t0, t0], [1.0 - t1, t1]);
        let (mut fa, mut miss) = (0.0, 0.0);
        for s in all_sequences(2, n) {
            if t.reject_prob(&p, &counts(2, &s)).unwrap() == 1.0 {
                fa += seq_prob(&p0, &s);
            } else {
                miss += seq_prob(&p1, &s);
            }
        }
        let a = nu_type1_error(&t, &p, NuParam::Infinite).unwrap();
        let b = nu_type2_error(&t, &p, NuParam::Infinite).unwrap();
        prop_assert!((a - fa).abs() <= 1e-14);
        prop_assert!((b - miss).abs() <= 1e-14);
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn oracle_gap_shrinks_with_the_grid() {
    let p = bern_pair(0.5, 0.7);
    let n = 5;
    let space = TypeSpace::new(&p, n).unwrap();
    for v in [nu(1.0), nu(2.0), nu(4.0)] {
        let (closed, cal) = calibrated_mp_test(v, 0.2, &p, n).unwrap();
        let closed = closed.reject_probs_on(&space);
        let mut gaps = Vec::new();
        for g in [101, 201, 401, 801] {
            let cfg = OracleConfig { grid_points: g, refinement_rounds: 0 };
            let oracle = lagrangian_mp_oracle(v, cal.lambda, &p, n, &cfg).unwrap();
            let gap = max_gap(&closed, &oracle.reject_probs_on(&space));
            assert!(gap <= cfg.step() + 1e-9, "ν={v} G={g}: {gap}");
            gaps.push(gap);
        }
        assert!(gaps[3] < gaps[0], "{gaps:?}");
    }
}

#[test]
fn kkt_replay_at_the_closed_form() {
    // The closed-form accept probability minimises the per-type scalar
    // objective: no grid point does better.
    let v = nu(2.0);
    for w in [0.01, 0.2, 0.5, 0.77, 0.99] {
        let cfg = OracleConfig::default();
        let x = minimize_accept(v, w, 1.0 - w, &cfg);
        let exact = w * w / (w * w + (1.0 - w) * (1.0 - w));
        assert!((x - exact).abs() <= cfg.step(), "w={w}: {x} vs {exact}");
    }
}

#[test]
fn bayes_test_beats_every_constant_test() {
    let p = bern_pair(0.5, 0.7).with_prior(Prior::new(0.3, 0.7).unwrap());
    for v in [nu(1.0), nu(1.5), nu(3.0), NuParam::Infinite] {
        let best = tunable_ht::bayes_risk(v, &bayes_test(v, &p, 6).unwrap(), &p).unwrap().risk;
        for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let t = RandomizedTest::constant(2, 6, r).unwrap();
            let risk = tunable_ht::bayes_risk(v, &t, &p).unwrap().risk;
            assert!(risk >= best - 1e-12, "ν={v} r={r}");
        }
    }
}
