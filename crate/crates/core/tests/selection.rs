use fedsae_core::rng::{self, Purpose};
use fedsae_core::selector::{softmax_scaled, weighted_without_replacement};
use fedsae_core::{SelectionParams, SelectionState};
use proptest::prelude::*;

proptest! {
    #[test]
    fn softmax_sums_to_one(values in prop::collection::vec(-1e4f64..1e4, 1..200), beta in 0.0f64..1.0) {
        let p = softmax_scaled(&values, beta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn softmax_ignores_common_shift(values in prop::collection::vec(-100.0f64..100.0, 1..50), shift in -500.0f64..500.0) {
        let a = softmax_scaled(&values, 0.01);
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let b = softmax_scaled(&shifted, 0.01);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn softmax_is_monotone_in_value(values in prop::collection::vec(-100.0f64..100.0, 2..50)) {
        let p = softmax_scaled(&values, 0.01);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] > values[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn selection_is_sorted_and_distinct(
        n in 1usize..60,
        k_frac in 0.0f64..1.0,
        round in 1usize..20,
        al_rounds in 0usize..20,
        seed in any::<u64>(),
        values in prop::collection::vec(0.0f64..1e3, 60),
    ) {
        let k = ((n as f64 * k_frac) as usize).clamp(1, n);
        let mut s = SelectionState::new(n, k, SelectionParams { al_rounds, ..SelectionParams::default() }).unwrap();
        for (c, v) in values.iter().take(n).enumerate() {
            s.set_value(c, *v).unwrap();
        }
        let picked = s.select(round, &mut rng::stream(seed, Purpose::Selection, round as u64, 0));
        prop_assert_eq!(picked.len(), k);
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(picked.iter().all(|&c| c < n));
    }

    #[test]
    fn weighted_draws_skip_zero_mass_while_possible(seed in any::<u64>()) {
        let weights = [0.0, 0.5, 0.0, 0.25, 0.25, 0.0];
        let mut rng = rng::stream(seed, Purpose::Selection, 0, 0);
        let mut picked = weighted_without_replacement(&weights, 3, &mut rng);
        picked.sort_unstable();
        prop_assert_eq!(picked, vec![1, 3, 4]);
    }
}

#[test]
fn higher_value_is_picked_more_often() {
    let mut s = SelectionState::new(
        10,
        1,
        SelectionParams {
            beta: 1.0,
            al_rounds: 1,
            ..SelectionParams::default()
        },
    )
    .unwrap();
    s.set_value(0, 2.0).unwrap();
    let hits = (0..4_000u64)
        .filter(|&i| s.select(1, &mut rng::stream(i, Purpose::Selection, 1, 0)) == vec![0])
        .count() as f64
        / 4_000.0;
    // e^2 / (e^2 + 9)
    let expected = 2f64.exp() / (2f64.exp() + 9.0);
    assert!((hits - expected).abs() < 0.03, "{hits} vs {expected}");
}
