use std::collections::BTreeMap;

use fedsae_core::datagen::{self, partition_label_skew, power_law_sizes, Sample};
use fedsae_core::Error;
use proptest::prelude::*;

fn labelled(counts: &[usize]) -> Vec<Sample> {
    let mut out = Vec::new();
    let mut id = 0.0;
    for (label, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            out.push(Sample::new(vec![id, label as f64], label));
            id += 1.0;
        }
    }
    out
}

proptest! {
    #[test]
    fn power_law_sizes_are_exact_and_ordered(
        clients in 1usize..300,
        extra in 0usize..20_000,
        exponent in 0.0f64..3.0,
    ) {
        let total = clients * datagen::MIN_CLIENT_SAMPLES + extra;
        let sizes = power_law_sizes(total, clients, exponent, datagen::MIN_CLIENT_SAMPLES).unwrap();
        prop_assert_eq!(sizes.iter().sum::<usize>(), total);
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sizes.iter().all(|&s| s >= datagen::MIN_CLIENT_SAMPLES));
    }

    #[test]
    fn partition_is_a_permutation(
        counts in prop::collection::vec(20usize..200, 2..8),
        clients in 1usize..12,
        seed in any::<u64>(),
    ) {
        let classes = counts.len();
        let samples = labelled(&counts);
        let total = samples.len();
        match partition_label_skew(samples, clients, classes, 1.0, seed) {
            Ok(shards) => {
                prop_assert_eq!(shards.len(), clients);
                let mut seen: Vec<u64> = shards
                    .iter()
                    .flat_map(|s| s.train.iter().chain(&s.test).map(|x| x.features[0] as u64))
                    .collect();
                seen.sort_unstable();
                prop_assert_eq!(seen, (0..total as u64).collect::<Vec<_>>());
                let sizes: Vec<usize> = shards.iter().map(|s| s.num_samples()).collect();
                prop_assert_eq!(sizes, power_law_sizes(total, clients, 1.0, datagen::MIN_CLIENT_SAMPLES).unwrap());
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn label_skew_respects_class_limit(
        counts in prop::collection::vec(50usize..120, 4..10),
        clients in 4usize..20,
        per_client in 2usize..4,
        seed in any::<u64>(),
    ) {
        let samples = labelled(&counts);
        match partition_label_skew(samples, clients, per_client, 0.5, seed) {
            Ok(shards) => {
                for s in &shards {
                    let mut labels: BTreeMap<usize, usize> = BTreeMap::new();
                    for l in s.labels() {
                        *labels.entry(l).or_default() += 1;
                    }
                    prop_assert!(labels.len() <= per_client);
                    prop_assert!(!s.train.is_empty() && !s.test.is_empty());
                }
            }
            Err(Error::InfeasibleSkew { .. }) | Err(Error::UnownedClass { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
