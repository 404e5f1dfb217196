mod common;

use common::{random_case, random_rv, Limits};
use noise_core::noisebool::{lattice_closure, set_partitions};
use noise_core::{generated, verify_axioms, NoiseBooleanAlgebra};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SMALL: Limits = Limits { max_atoms: 4, max_outcomes: 64, max_factors: 5 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn independency_algebras_satisfy_axioms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng, &SMALL);
        let b = &case.algebra;
        prop_assert_eq!(b.len(), 1 << b.n_atoms());
        prop_assert!(verify_axioms(&case.space, b.fields()).passes());
        let closure = lattice_closure(&case.space, b.atoms(), 1 << 12).unwrap();
        prop_assert_eq!(closure.len(), b.len());
        for x in b.elems() {
            let c = b.complement_elem(x);
            prop_assert_eq!(b.complement_elem(c), x);
            let (fx, fc) = (b.field(x), b.field(c));
            prop_assert!(case.space.are_independent(&[fx, fc]).unwrap());
            prop_assert!(fx.join(fc).unwrap().is_full());
        }
        let rebuilt = NoiseBooleanAlgebra::from_fields(&case.space, b.fields()).unwrap();
        prop_assert_eq!(rebuilt.len(), b.len());
        let again = generated(&case.space, b.atoms()).unwrap();
        prop_assert_eq!(again.len(), b.len());
    }

    #[test]
    fn lattice_operations_match_masks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng, &SMALL);
        let b = &case.algebra;
        for x in b.elems() {
            for y in b.elems() {
                prop_assert_eq!(&b.field(x).join(b.field(y)).unwrap(), b.field(x.join(y)));
                prop_assert_eq!(&b.field(x).meet(b.field(y)).unwrap(), b.field(x.meet(y)));
                prop_assert_eq!(b.field(y).is_subfield_of(b.field(x)), x.contains(y));
            }
        }
    }

    #[test]
    fn conditional_expectation_is_a_projection(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng, &SMALL);
        let f = random_rv(&mut rng, case.space.len());
        let g = random_rv(&mut rng, case.space.len());
        for x in case.algebra.fields() {
            let ef = case.space.cond_exp(&f, x).unwrap();
            prop_assert!(ef.is_measurable(x, 1e-12));
            prop_assert!(case.space.cond_exp(&ef, x).unwrap().max_abs_diff(&ef) < 1e-12);
            let eg = case.space.cond_exp(&g, x).unwrap();
            prop_assert!((case.space.inner(&ef, &g) - case.space.inner(&f, &eg)).abs() < 1e-12);
            prop_assert!((case.space.expect(&ef) - case.space.expect(&f)).abs() < 1e-12);
        }
    }
}

#[test]
fn set_partition_counts_are_bell_numbers() {
    let bell = [1, 1, 2, 5, 15, 52, 203];
    for (n, want) in bell.iter().enumerate() {
        assert_eq!(set_partitions(n).len(), *want);
    }
}
