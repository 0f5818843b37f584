use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pari_core::counting::{brute_force_count, component_shares, count_conditioned, count_models};
use pari_core::interdep::{build_graph, encoded_components};
use pari_core::paths::Relationship;
use pari_core::synth::random_instance;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_count_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (paths, labeling) = random_instance(&mut rng, 6);
        for comp in encoded_components(&build_graph(&paths, &labeling), &paths, &labeling) {
            prop_assume!(comp.size() <= 10);
            let total = count_models(&comp);
            prop_assert_eq!(&total, &brute_force_count(&comp, &paths, &labeling).unwrap());
            for node in 0..comp.size() {
                let sum: BigUint = Relationship::INFERABLE.iter().map(|&r| count_conditioned(&comp, node, r)).sum();
                prop_assert_eq!(&sum, &total);
            }
        }
    }

    #[test]
    fn shares_are_normalised_when_satisfiable(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (paths, labeling) = random_instance(&mut rng, 4);
        for comp in encoded_components(&build_graph(&paths, &labeling), &paths, &labeling) {
            match component_shares(&comp) {
                Ok(shares) => prop_assert!(shares.iter().all(|s| s.is_normalised())),
                Err(_) => prop_assert_eq!(count_models(&comp), BigUint::from(0u32)),
            }
        }
    }
}
