#![allow(dead_code)]

use noise_core::{Elem, FiniteProbabilitySpace, NoiseBooleanAlgebra, RandomVariable, SigmaField};
use rand::seq::SliceRandom;
use rand::Rng;

/// A random classical algebra: a product of small factors with random
/// marginals, atoms given by random groupings of the factors, outcomes
/// randomly permuted.
pub struct RandomCase {
    pub space: FiniteProbabilitySpace,
    pub factors: Vec<SigmaField>,
    pub groups: Vec<Vec<usize>>,
    pub algebra: NoiseBooleanAlgebra,
}

pub struct Limits {
    pub max_atoms: usize,
    pub max_outcomes: usize,
    pub max_factors: usize,
}

pub const DEFAULT_LIMITS: Limits = Limits { max_atoms: 5, max_outcomes: 256, max_factors: 6 };

fn random_probs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn group_field(n: usize, factors: &[SigmaField], group: &[usize]) -> SigmaField {
    let keys: Vec<u64> =
        (0..n).map(|w| group.iter().fold(0u64, |k, &i| k * 16 + factors[i].labels()[w] as u64)).collect();
    SigmaField::from_labels(&keys)
}

pub fn random_case(rng: &mut impl Rng, limits: &Limits) -> RandomCase {
    // factor sizes
    let mut sizes = Vec::new();
    let mut total = 1usize;
    let n_factors = rng.gen_range(1..=limits.max_factors);
    for _ in 0..n_factors {
        let s = rng.gen_range(2..=4);
        if total * s > limits.max_outcomes {
            break;
        }
        sizes.push(s);
        total *= s;
    }
    if sizes.is_empty() {
        sizes.push(2);
        total = 2;
    }
    let marginals: Vec<Vec<f64>> = sizes.iter().map(|&s| random_probs(rng, s)).collect();
    let mut perm: Vec<usize> = (0..total).collect();
    perm.shuffle(rng);
    // outcome w (after permutation) is the mixed-radix index perm[w]
    let coord = |idx: usize, i: usize| -> usize {
        let below: usize = sizes[i + 1..].iter().product();
        idx / below % sizes[i]
    };
    let probs: Vec<f64> = perm
        .iter()
        .map(|&idx| (0..sizes.len()).map(|i| marginals[i][coord(idx, i)]).product())
        .collect();
    let s: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / s).collect();
    let space = FiniteProbabilitySpace::new(probs).unwrap();
    let factors: Vec<SigmaField> = (0..sizes.len())
        .map(|i| SigmaField::from_labels(&perm.iter().map(|&idx| coord(idx, i)).collect::<Vec<_>>()))
        .collect();
    let n_atoms = rng.gen_range(1..=limits.max_atoms.min(factors.len()));
    let groups = random_grouping(rng, factors.len(), n_atoms);
    let atoms: Vec<SigmaField> = groups.iter().map(|g| group_field(total, &factors, g)).collect();
    let algebra = NoiseBooleanAlgebra::from_independency(&space, &atoms).unwrap();
    RandomCase { space, factors, groups, algebra }
}

/// Random assignment of `n` items to exactly `k` nonempty groups.
pub fn random_grouping(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..n).collect();
    items.shuffle(rng);
    let mut groups: Vec<Vec<usize>> = items[..k].iter().map(|&i| vec![i]).collect();
    for &i in &items[k..] {
        let g = rng.gen_range(0..k);
        groups[g].push(i);
    }
    groups.iter_mut().for_each(|g| g.sort_unstable());
    groups
}

/// An algebra whose atoms split the atoms of `case` into finer factor
/// groups; every element of `case.algebra` is an element of it.
pub fn random_refinement(rng: &mut impl Rng, case: &RandomCase) -> NoiseBooleanAlgebra {
    let n = case.space.len();
    let mut atoms = Vec::new();
    for g in &case.groups {
        let k = rng.gen_range(1..=g.len());
        for sub in random_grouping(rng, g.len(), k) {
            let members: Vec<usize> = sub.iter().map(|&i| g[i]).collect();
            atoms.push(group_field(n, &case.factors, &members));
        }
    }
    NoiseBooleanAlgebra::from_independency(&case.space, &atoms).unwrap()
}

pub fn random_rv(rng: &mut impl Rng, n: usize) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Random function measurable w.r.t. `x`, normalized to unit `L²` norm.
pub fn random_measurable_unit(rng: &mut impl Rng, space: &FiniteProbabilitySpace, x: &SigmaField) -> RandomVariable {
    let per_block: Vec<f64> = (0..x.n_blocks()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = RandomVariable::from_blocks(x, &per_block);
    let norm = space.norm_sq(&f).sqrt();
    f.scale(1.0 / norm)
}

/// A random partition of unity of the algebra.
pub fn random_partition(rng: &mut impl Rng, algebra: &NoiseBooleanAlgebra) -> Vec<Elem> {
    let n = algebra.n_atoms();
    if n == 0 {
        return Vec::new();
    }
    let k = rng.gen_range(1..=n);
    random_grouping(rng, n, k).into_iter().map(|g| Elem(g.iter().fold(0, |m, &i| m | 1 << i))).collect()
}

pub fn sign_algebra(n: usize) -> (NoiseBooleanAlgebra, Vec<RandomVariable>) {
    let sc = noise_core::scenarios::classical_signs(n).unwrap();
    let xi = (1..=n).map(|i| sc.rv(&format!("xi{i}")).unwrap().clone()).collect();
    (sc.algebra().unwrap(), xi)
}
