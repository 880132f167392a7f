//! Property tests over seeded generators: axiom soundness, synthesis
//! round-trips, and the bijection invariant of the word-path table.

mod common;

use common::{axiom_instance, typed};
use pbs_calculus::diagram::congruent;
use pbs_calculus::pathsem::path_table;
use pbs_calculus::sample::SampleRng;
use pbs_calculus::sample::{
    random_admissible_family, random_bare_diagram, SamplerConfig,
};
use pbs_calculus::synth::synthesize;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_axiom_instance_is_congruent_and_table_equal(
        family in 0usize..12,
        seed in any::<u64>(),
    ) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let (lhs, rhs) = axiom_instance(family, &mut rng, SamplerConfig::unrestricted());
        let (dl, dr) = (typed(lhs), typed(rhs));
        prop_assert_eq!(congruent(&dl, &dr), Ok(true));
        prop_assert_eq!(path_table(&dl).unwrap(), path_table(&dr).unwrap());
    }

    #[test]
    fn synthesis_round_trips(seed in any::<u64>(), neg_free in any::<bool>()) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let f = random_admissible_family(&mut rng, 3, 6, 4, neg_free);
        let d = synthesize(&f, neg_free).unwrap();
        prop_assert!(f.matches_diagram(&d));
        if neg_free {
            prop_assert!(!d.contains_neg());
        }
    }

    #[test]
    fn path_tables_are_permutations(seed in any::<u64>()) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let arity = rng.gen_range(1..=4);
        let d = random_bare_diagram(&mut rng, arity, SamplerConfig::unrestricted());
        prop_assert!(path_table(&d).unwrap().is_bijection());
    }

    #[test]
    fn congruence_is_reflexive_and_symmetric(seed in any::<u64>()) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let arity = rng.gen_range(1..=3);
        let a = random_bare_diagram(&mut rng, arity, SamplerConfig::unrestricted());
        let b = random_bare_diagram(&mut rng, arity, SamplerConfig::unrestricted());
        prop_assert_eq!(congruent(&a, &a), Ok(true));
        prop_assert_eq!(congruent(&a, &b), congruent(&b, &a));
    }
}
