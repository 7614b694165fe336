//! Indicator updates against independently computed digamma values and
//! closed-form Gaussian moments.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfusion_core::gauss::{GaussianBelief, LinearMeasurement};
use rfusion_core::vb::{
    digamma, expected_discrepancy, update_beta, update_indicator, BetaPrior, Discrepancy,
    IndicatorState,
};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Ψ(x) = -γ + Σ_{k≥0} (1/(k+1) - 1/(k+x))`, truncated after a million
/// terms with the tail `Ψ(N+x) - Ψ(N+1)` taken from the leading asymptotic terms.
fn digamma_series(x: f64) -> f64 {
    const N: usize = 1_000_000;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 0..N {
        let k = k as f64;
        let term = 1.0 / (k + 1.0) - 1.0 / (k + x);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let n = N as f64;
    let tail = ((n + x) / (n + 1.0)).ln() - 0.5 / (n + x) + 0.5 / (n + 1.0);
    -EULER_GAMMA + sum + tail
}

#[test]
fn digamma_matches_series() {
    for x in [0.05, 0.1, 0.5, 0.9, 1.0, 1.9, 2.5, 5.99, 6.0, 7.3, 25.5] {
        let got = digamma(x).unwrap();
        let want = digamma_series(x);
        assert!((got - want).abs() < 1e-10, "Ψ({x}): {got} vs {want}");
    }
}

#[test]
fn digamma_known_values() {
    assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-12);
    let half = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
    assert!((digamma(0.5).unwrap() - half).abs() < 1e-12);
    assert!(digamma(0.0).is_err());
    assert!(digamma(-1.5).is_err());
}

#[test]
fn nominal_indicator_from_prior_mean() {
    let st = IndicatorState {
        z_mean: 1.0,
        e: 1.9,
        f: 0.1,
    };
    let z = update_indicator(st, Discrepancy { stat: 0.0 }).z_mean;
    let want = 1.0 / (1.0 + (digamma_series(0.1) - digamma_series(1.9)).exp());
    assert!((z - want).abs() < 1e-10, "{z} vs {want}");
}

#[test]
fn confident_outlier() {
    let st = IndicatorState {
        z_mean: 1.0,
        e: 0.9,
        f: 0.1,
    };
    let z = update_indicator(st, Discrepancy { stat: 40.0 }).z_mean;
    let logit = digamma_series(0.9) - digamma_series(0.1) - 20.0;
    let want = 1.0 / (1.0 + (-logit).exp());
    assert!((z - want).abs() < 1e-12, "{z} vs {want}");
    assert!(z < 1e-4);
}

#[test]
fn discrepancy_linear_gaussian_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=3);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = &b * b.transpose() + DMatrix::identity(n, n) * 0.1;
        let x = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let h = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let c = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let r = &c * c.transpose() + DMatrix::identity(m, m);
        let y = DVector::from_fn(m, |_, _| rng.random_range(-5.0..5.0));

        let post = GaussianBelief::new(x.clone(), p.clone()).unwrap();
        let got = expected_discrepancy(&post, &LinearMeasurement(h.clone()), &y, &r)
            .unwrap()
            .stat;
        let resid = &y - &h * &x;
        let d = &h * &p * h.transpose() + &resid * resid.transpose();
        let want = (d * r.try_inverse().unwrap()).trace();
        assert!(
            (got - want).abs() <= 1e-8 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

proptest! {
    #[test]
    fn digamma_recurrence(x in 0.01f64..50.0) {
        let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        prop_assert!((lhs - 1.0 / x).abs() < 1e-10 * (1.0 / x).max(1.0));
    }

    #[test]
    fn indicator_decreases_with_discrepancy(
        e in 0.05f64..5.0, f in 0.05f64..5.0, s1 in 0.0f64..100.0, s2 in 0.0f64..100.0,
    ) {
        let st = IndicatorState { z_mean: 1.0, e, f };
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let z_lo = update_indicator(st, Discrepancy { stat: lo }).z_mean;
        let z_hi = update_indicator(st, Discrepancy { stat: hi }).z_mean;
        prop_assert!(z_hi <= z_lo);
        prop_assert!((0.0..=1.0).contains(&z_lo) && (0.0..=1.0).contains(&z_hi));
    }

    #[test]
    fn indicator_monotone_in_beta_parameters(
        e in 0.05f64..5.0, f in 0.05f64..5.0, de in 0.0f64..3.0, stat in 0.0f64..60.0,
    ) {
        let d = Discrepancy { stat };
        let base = update_indicator(IndicatorState { z_mean: 1.0, e, f }, d).z_mean;
        let more_e = update_indicator(IndicatorState { z_mean: 1.0, e: e + de, f }, d).z_mean;
        let more_f = update_indicator(IndicatorState { z_mean: 1.0, e, f: f + de }, d).z_mean;
        prop_assert!(more_e >= base);
        prop_assert!(more_f <= base);
    }

    #[test]
    fn clean_sweep_keeps_trust(e0 in 0.05f64..5.0, ratio in 1.0f64..20.0) {
        let prior = BetaPrior::new(e0, e0 / ratio).unwrap();
        let st = update_indicator(IndicatorState::initial(prior), Discrepancy { stat: 0.0 });
        let st = update_beta(st, prior);
        prop_assert!(st.z_mean >= 0.5);
    }

    #[test]
    fn beta_update_conserves_mass(e0 in 0.01f64..10.0, f0 in 0.01f64..10.0, z in 0.0f64..=1.0) {
        let prior = BetaPrior::new(e0, f0).unwrap();
        let st = update_beta(IndicatorState { z_mean: z, e: 1.0, f: 1.0 }, prior);
        prop_assert!((st.e + st.f - (e0 + f0 + 1.0)).abs() < 1e-12);
    }
}
