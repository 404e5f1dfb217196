//! Fixtures shared by the benchmarks.

use noise_core::scenarios::{classical_signs, voter_model, VoterRule};
use noise_core::{NoiseBooleanAlgebra, RandomVariable, SpectralResolution};

/// `n` fair signs and the product of all of them.
pub fn signs(n: usize) -> (NoiseBooleanAlgebra, RandomVariable) {
    let sc = classical_signs(n).expect("valid sign count");
    let product = sc.rvs.values().skip(1).fold(sc.rvs.values().next().unwrap().clone(), |acc, x| &acc * x);
    (sc.algebra().expect("independent signs"), product)
}

/// Majority voter model on three children at the given depth, with its
/// root observable.
pub fn voter(depth: usize) -> (NoiseBooleanAlgebra, RandomVariable) {
    let rule = VoterRule::majority(3).expect("odd arity");
    let sc = voter_model(&rule, depth).expect("within caps");
    let root = sc.rv("X_root").expect("root observable").clone();
    (sc.algebra().expect("independent leaves"), root)
}

pub fn resolved(algebra: &NoiseBooleanAlgebra) -> SpectralResolution {
    SpectralResolution::resolve(algebra).expect("resolvable")
}
