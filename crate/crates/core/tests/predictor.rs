use fedsae_core::predictor::{
    execute_assignment, fassa_update, fassa_update_theta, ira_update, Completion, FassaPartialRule,
    PredictorParams, TaskPair,
};
use proptest::prelude::*;

const U: f64 = 10.0;
const GAMMA1: f64 = 3.0;
const GAMMA2: f64 = 1.0;

/// Ira epoch prediction transcribed branch by branch; returns (L', H', Ê).
fn ira_oracle(l: f64, h: f64, e: f64) -> (f64, f64, f64) {
    if e > h {
        (l + U / l, h + U / h, h)
    } else if e >= l && e <= h {
        let a = l + U / l;
        (a.min(h / 2.0), a.max(h / 2.0), l)
    } else {
        (l / 2.0, h / 2.0, 0.0)
    }
}

/// Fassa epoch prediction transcribed branch by branch with the partial branch
/// written as the low-bound rule `min(L + r, H/2)`.
fn fassa_oracle(l: f64, h: f64, e: f64, theta: f64) -> (f64, f64, f64) {
    if e > h {
        if theta <= l {
            (l + GAMMA2, h + GAMMA2, h)
        } else if theta > l && theta <= h {
            (l + GAMMA1, h + GAMMA2, h)
        } else {
            (l + GAMMA1, h + GAMMA1, h)
        }
    } else if e >= l && e <= h {
        let r = if theta >= l { GAMMA2 } else { GAMMA1 };
        ((l + r).min(h / 2.0), (l + r).max(h / 2.0), l)
    } else {
        (l / 2.0, h / 2.0, 0.0)
    }
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

fn pair_strategy() -> impl Strategy<Value = (f64, f64)> {
    (0.01f64..40.0, 0.0f64..40.0).prop_map(|(l, d)| (l, l + d))
}

#[test]
fn transcription_agrees_on_random_triples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let params = PredictorParams::default();
    for _ in 0..10_000 {
        let l = rng.random_range(0.05..30.0);
        let h = l + rng.random_range(0.0..30.0);
        let e = rng.random_range(0.0..70.0);
        let theta = rng.random_range(0.0..70.0);
        let pair = TaskPair::new(l, h, theta);
        let outcome = execute_assignment(&pair, e);

        let (ol, oh, oe) = ira_oracle(l, h, e);
        let got = ira_update(&pair, &outcome, &params);
        assert_eq!(outcome.completed_epochs, oe);
        assert_eq!((got.low, got.high), sorted(ol, oh));

        let (fl, fh, fe) = fassa_oracle(l, h, e, theta);
        let got = fassa_update(&pair, &outcome, &params);
        assert_eq!(fe, oe);
        assert_eq!((got.low, got.high), sorted(fl, fh));
    }
}

#[test]
fn ema_closed_form_up_to_fifty_updates() {
    for &(theta0, c, alpha) in &[
        (1.0, 7.5, 0.95),
        (12.0, 3.0, 0.95),
        (0.0, 9.9, 0.5),
        (5.0, 5.0, 0.8),
    ] {
        let mut theta = theta0;
        for t in 1..=50 {
            theta = fassa_update_theta(theta, c, alpha);
            let expected = c + f64::powi(alpha, t) * (theta0 - c);
            assert!(
                (theta - expected).abs() <= 1e-12,
                "t={t}: {theta} vs {expected}"
            );
        }
    }
}

#[test]
fn ira_recovers_after_four_halvings() {
    let params = PredictorParams::default();
    for c in [4.0, 6.0, 8.0] {
        let mut pair = TaskPair::new(16.0 * c, 32.0 * c, 0.0);
        let mut drops = 0;
        loop {
            let outcome = execute_assignment(&pair, c);
            if outcome.uploaded {
                break;
            }
            drops += 1;
            pair = ira_update(&pair, &outcome, &params);
            assert!(drops <= 10);
        }
        assert_eq!(drops, 4, "capacity {c}");
    }
}

proptest! {
    #[test]
    fn updates_keep_pair_ordered((l, h) in pair_strategy(), e in 0.0f64..80.0, theta in 0.0f64..80.0) {
        let pair = TaskPair::new(l, h, theta);
        let outcome = execute_assignment(&pair, e);
        for rule in [FassaPartialRule::MirrorIra, FassaPartialRule::Literal] {
            let params = PredictorParams { partial_rule: rule, ..PredictorParams::default() };
            let a = ira_update(&pair, &outcome, &params);
            let b = fassa_update(&pair, &outcome, &params);
            prop_assert!(a.low <= a.high && a.low > 0.0);
            prop_assert!(b.low <= b.high && b.low > 0.0);
        }
    }

    #[test]
    fn drop_halves_exactly((l, h) in pair_strategy(), frac in 0.0f64..1.0, theta in 0.0f64..80.0) {
        let pair = TaskPair::new(l, h, theta);
        let outcome = execute_assignment(&pair, l * frac * 0.999);
        prop_assert_eq!(outcome.completion, Completion::Dropped);
        let params = PredictorParams::default();
        for next in [ira_update(&pair, &outcome, &params), fassa_update(&pair, &outcome, &params)] {
            prop_assert_eq!((next.low, next.high), (l / 2.0, h / 2.0));
        }
    }

    #[test]
    fn completed_work_never_exceeds_capacity((l, h) in pair_strategy(), e in 0.0f64..80.0) {
        let outcome = execute_assignment(&TaskPair::new(l, h, 0.0), e);
        prop_assert!(outcome.completed_epochs <= e);
        prop_assert_eq!(outcome.uploaded, outcome.completed_epochs > 0.0);
    }

    #[test]
    fn ira_full_completion_grows_both((l, h) in pair_strategy()) {
        let pair = TaskPair::new(l, h, 0.0);
        let next = ira_update(&pair, &execute_assignment(&pair, h + 1.0), &PredictorParams::default());
        prop_assert!(next.low > l && next.high > l);
        prop_assert!(next.high >= h);
    }

    #[test]
    fn fassa_increment_depends_on_stage((l, h) in pair_strategy(), theta in 0.0f64..80.0) {
        let pair = TaskPair::new(l, h, theta);
        let next = fassa_update(&pair, &execute_assignment(&pair, h + 1.0), &PredictorParams::default());
        let total = next.low + next.high - l - h;
        let expected = if theta <= l { 2.0 * GAMMA2 } else if theta <= h { GAMMA1 + GAMMA2 } else { 2.0 * GAMMA1 };
        prop_assert!((total - expected).abs() < 1e-9);
    }

    #[test]
    fn theta_stays_between_old_value_and_capacity(theta in 0.0f64..100.0, e in 0.0f64..100.0, alpha in 0.01f64..0.99) {
        let next = fassa_update_theta(theta, e, alpha);
        prop_assert!(next >= theta.min(e) - 1e-12 && next <= theta.max(e) + 1e-12);
    }
}
