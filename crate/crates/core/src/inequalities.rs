//! Bonferroni-type operator inequalities for conditional expectations of
//! members of a noise Boolean algebra, and the influence forms they imply.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::noisebool::{lattice_closure, verify_axioms, Elem, NoiseBooleanAlgebra};
use crate::operators::LinearOperator;
use crate::probspace::{FiniteProbabilitySpace, RandomVariable, SigmaField};
use crate::spectral::{counting_in, influence, SpectralResolution};

/// Largest tuple length accepted by the Bonferroni builders.
pub const MAX_TUPLE: usize = 5;

fn join_of(xs: &[Elem], members: u32) -> Elem {
    xs.iter().enumerate().filter(|(i, _)| members >> i & 1 == 1).fold(Elem::ZERO, |acc, (_, x)| acc.join(*x))
}

/// `(∨_{[n]∖J} x) ∨ (∧_{j∈J} ∨_{J∖{j}} x)` for nonempty `J`.
fn bonferroni_index(xs: &[Elem], all: Elem, subset: u32) -> Elem {
    let full = (1u32 << xs.len()) - 1;
    let outside = join_of(xs, full & !subset);
    let inner = (0..xs.len())
        .filter(|j| subset >> j & 1 == 1)
        .map(|j| join_of(xs, subset & !(1 << j)))
        .fold(all, Elem::meet);
    outside.join(inner)
}

/// Signed coefficient of each `P_z` in the terms `k ∈ ks` of the
/// alternating sum.
fn alternating_terms(xs: &[Elem], ks: impl Fn(usize) -> bool) -> BTreeMap<Elem, f64> {
    let all = join_of(xs, (1u32 << xs.len()) - 1);
    let mut coef = BTreeMap::new();
    for subset in 1u32..(1u32 << xs.len()) {
        let k = subset.count_ones() as usize;
        if ks(k) {
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            *coef.entry(bonferroni_index(xs, all, subset)).or_insert(0.0) += sign;
        }
    }
    coef
}

fn assemble(algebra: &NoiseBooleanAlgebra, coef: &BTreeMap<Elem, f64>) -> Result<LinearOperator> {
    let space = algebra.space();
    let n = space.len();
    let mut m = DMatrix::zeros(n, n);
    for (&z, &c) in coef {
        if c != 0.0 {
            m += LinearOperator::cond_exp(space, algebra.field(z))?.matrix().scale(c);
        }
    }
    Ok(LinearOperator::from_matrix(m))
}

/// Ascending eigenvalues of a `P`-self-adjoint operator.
pub fn operator_eigen(space: &FiniteProbabilitySpace, op: &LinearOperator) -> Vec<(f64, RandomVariable)> {
    let w = linalg::whiten(space.probs(), op.matrix());
    let sym = (&w + w.transpose()).scale(0.5);
    let sq: Vec<f64> = space.probs().iter().map(|p| p.sqrt()).collect();
    linalg::symmetric_eigen(&sym)
        .into_iter()
        .map(|(l, v)| (l, RandomVariable::new(v.iter().zip(&sq).map(|(a, s)| a / s).collect())))
        .collect()
}

pub fn quadratic_form(space: &FiniteProbabilitySpace, op: &LinearOperator, f: &RandomVariable) -> f64 {
    space.inner(f, &op.apply(f))
}

fn check_tuple(algebra: &NoiseBooleanAlgebra, xs: &[Elem]) -> Result<()> {
    if xs.len() > MAX_TUPLE {
        return Err(Error::CapExceeded { count: xs.len(), cap: MAX_TUPLE });
    }
    if xs.iter().any(|x| x.0 > algebra.top().0) {
        return Err(Error::NotAnElement);
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct BonferroniReport {
    #[serde(skip)]
    pub operator: LinearOperator,
    pub n: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub equality_everywhere: bool,
    pub equality_on_low_chaos: bool,
    /// Largest `‖O e‖` over the basis of the low chaos checked.
    pub low_chaos_residual: f64,
    pub containment_witness: Option<usize>,
}

impl BonferroniReport {
    pub fn is_positive(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
    }
}

fn report(
    res: &SpectralResolution,
    xs: &[Elem],
    operator: LinearOperator,
    containment_witness: Option<usize>,
    tol: f64,
) -> BonferroniReport {
    let space = res.space();
    let eig = operator_eigen(space, &operator);
    let b_atoms = res.algebra().generated_subalgebra(xs);
    let n = xs.len();
    let mut low_chaos_residual: f64 = 0.0;
    for s in res.points().filter(|&s| counting_in(&b_atoms, s) < n) {
        for e in res.basis(s) {
            low_chaos_residual = low_chaos_residual.max(space.norm_sq(&operator.apply(e)).sqrt());
        }
    }
    BonferroniReport {
        n,
        min_eigenvalue: eig.first().map_or(0.0, |e| e.0),
        max_eigenvalue: eig.last().map_or(0.0, |e| e.0),
        equality_everywhere: linalg::max_abs(operator.matrix()) <= tol,
        equality_on_low_chaos: low_chaos_residual <= tol,
        low_chaos_residual,
        containment_witness,
        operator,
    }
}

/// The operator `P_{∨x} + Σ_{k≥1} (-1)^k Σ_{|J|=k} P_{z_J}` with its
/// spectrum and equality diagnostics.
pub fn bonferroni_operator(res: &SpectralResolution, xs: &[Elem]) -> Result<BonferroniReport> {
    let algebra = res.algebra();
    check_tuple(algebra, xs)?;
    let mut coef = alternating_terms(xs, |_| true);
    *coef.entry(join_of(xs, (1u32 << xs.len()) - 1)).or_insert(0.0) += 1.0;
    let op = assemble(algebra, &coef)?;
    let full = (1u32 << xs.len()) - 1;
    let witness = (0..xs.len()).find(|&i| xs[i].0 & !join_of(xs, full & !(1 << i)).0 == 0);
    Ok(report(res, xs, op, witness, algebra.space().tol().max(1e-9)))
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedReport {
    pub m: usize,
    pub max_eigenvalue: f64,
    pub holds: bool,
}

/// Sign check `(-1)^m Σ_{k>m} (-1)^k Σ_{|J|=k} P_{z_J} ⪯ 0`.
pub fn bonferroni_truncated(res: &SpectralResolution, xs: &[Elem], m: usize) -> Result<TruncatedReport> {
    let algebra = res.algebra();
    check_tuple(algebra, xs)?;
    if m > xs.len() {
        return Err(Error::OutOfRange { what: "m", value: m as f64 });
    }
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let coef: BTreeMap<Elem, f64> = alternating_terms(xs, |k| k > m).into_iter().map(|(z, c)| (z, sign * c)).collect();
    let op = assemble(algebra, &coef)?;
    let max_eigenvalue = operator_eigen(algebra.space(), &op).last().map_or(0.0, |e| e.0);
    Ok(TruncatedReport { m, max_eigenvalue, holds: max_eigenvalue <= 1e-9 })
}

/// The partial sum `P_{∨x} + Σ_{k=1}^m (-1)^k Σ_{|J|=k} P_{z_J}` and
/// explicit vectors on which its quadratic form is negative and positive.
#[derive(Clone, Debug, Serialize)]
pub struct PartialSumWitness {
    pub m: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub negative: Option<RandomVariable>,
    pub positive: Option<RandomVariable>,
}

impl PartialSumWitness {
    pub fn fails_both_ways(&self) -> bool {
        self.negative.is_some() && self.positive.is_some()
    }
}

pub fn bonferroni_partial(res: &SpectralResolution, xs: &[Elem], m: usize) -> Result<PartialSumWitness> {
    let algebra = res.algebra();
    check_tuple(algebra, xs)?;
    let mut coef = alternating_terms(xs, |k| k <= m);
    *coef.entry(join_of(xs, (1u32 << xs.len()) - 1)).or_insert(0.0) += 1.0;
    let op = assemble(algebra, &coef)?;
    let eig = operator_eigen(algebra.space(), &op);
    let (lo, hi) = (eig.first().cloned(), eig.last().cloned());
    let tol = 1e-9;
    Ok(PartialSumWitness {
        m,
        min_eigenvalue: lo.as_ref().map_or(0.0, |e| e.0),
        max_eigenvalue: hi.as_ref().map_or(0.0, |e| e.0),
        negative: lo.filter(|e| e.0 < -tol).map(|e| e.1),
        positive: hi.filter(|e| e.0 > tol).map(|e| e.1),
    })
}

/// `(-1)^n Σ_{k=0}^n (-1)^k Σ_{|J|=k} P_{∨_J x}` for an independency.
pub fn bonferroni_independent(res: &SpectralResolution, xs: &[Elem]) -> Result<BonferroniReport> {
    let algebra = res.algebra();
    check_tuple(algebra, xs)?;
    let fields: Vec<&SigmaField> = xs.iter().map(|&x| algebra.field(x)).collect();
    if !algebra.space().are_independent(&fields)? {
        return Err(Error::NotIndependent);
    }
    let n = xs.len();
    let mut coef = BTreeMap::new();
    for subset in 0u32..(1u32 << n) {
        let k = subset.count_ones() as usize;
        let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        *coef.entry(join_of(xs, subset)).or_insert(0.0) += sign;
    }
    let op = assemble(algebra, &coef)?;
    let witness = xs.iter().position(|x| x.is_zero());
    Ok(report(res, xs, op, witness, algebra.space().tol().max(1e-9)))
}

#[derive(Clone, Debug, Serialize)]
pub struct InfluenceReport {
    pub min_eigenvalue: f64,
    pub holds: bool,
    /// `(3 · min pair influence, var + 3 · max single influence)` per basis
    /// function, when the tuple is a three-part partition of unity.
    pub three_partition: Vec<(f64, f64)>,
    pub three_partition_holds: bool,
}

/// `Σ_{k≥1} (-1)^{k+1} Σ_{|J|=k} Inf_{z_J′} - Inf_{(∨x)′} ⪰ 0` where
/// `Inf_y = I - P_{y′}`, plus the scalar three-part consequence.
pub fn influence_inequality_check(res: &SpectralResolution, xs: &[Elem]) -> Result<InfluenceReport> {
    let algebra = res.algebra();
    check_tuple(algebra, xs)?;
    let space = algebra.space();
    let n = space.len();
    let id = DMatrix::<f64>::identity(n, n);
    let all = join_of(xs, (1u32 << xs.len()) - 1);
    // I - P_{(y′)′} = I - P_y
    let inf_matrix = |y: Elem| -> Result<DMatrix<f64>> {
        Ok(&id - LinearOperator::cond_exp(space, algebra.field(y))?.matrix())
    };
    let mut m = -inf_matrix(all)?;
    for subset in 1u32..(1u32 << xs.len()) {
        let sign = if subset.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        m += inf_matrix(bonferroni_index(xs, all, subset))?.scale(sign);
    }
    let op = LinearOperator::from_matrix(m);
    let min_eigenvalue = operator_eigen(space, &op).first().map_or(0.0, |e| e.0);
    let mut three_partition = Vec::new();
    if xs.len() == 3 && algebra.is_partition_of_unity(xs) {
        for s in res.points() {
            for f in res.basis(s) {
                three_partition.push(three_partition_bound(algebra, xs, f)?);
            }
        }
    }
    let three_partition_holds = three_partition.iter().all(|(l, r)| *l <= r + 1e-9);
    Ok(InfluenceReport { min_eigenvalue, holds: min_eigenvalue >= -1e-9, three_partition, three_partition_holds })
}

/// `(3 · min_{i<j} inf_{p_i∨p_j}(f), var(f) + 3 · max_i inf_{p_i}(f))`.
pub fn three_partition_bound(algebra: &NoiseBooleanAlgebra, parts: &[Elem], f: &RandomVariable) -> Result<(f64, f64)> {
    let mut pair_min = f64::INFINITY;
    let mut single_max: f64 = 0.0;
    for i in 0..parts.len() {
        single_max = single_max.max(influence(algebra, parts[i], f)?);
        for j in i + 1..parts.len() {
            pair_min = pair_min.min(influence(algebra, parts[i].join(parts[j]), f)?);
        }
    }
    Ok((3.0 * pair_min, algebra.space().variance(f) + 3.0 * single_max))
}

/// The four-point demonstration that the inequality needs a common noise
/// Boolean algebra.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    /// `E[E[ξ₂|x₁∨x₂]²] + E[E[ξ₂|x₁∧x₂]²]`.
    pub lhs: f64,
    /// `E[E[ξ₂|x₁]²] + E[E[ξ₂|x₂]²]`.
    pub rhs: f64,
    pub deficit: f64,
    pub failed_axioms: Vec<String>,
    /// Deficit with `x₁` replaced by `σ(ξ₁)`.
    pub noise_pair_deficit: f64,
    /// Deficit of the variant with the coordinates swapped.
    pub swapped_deficit: f64,
}

fn pair_deficit(space: &FiniteProbabilitySpace, x1: &SigmaField, x2: &SigmaField, f: &RandomVariable) -> Result<f64> {
    let e = |x: &SigmaField| -> Result<f64> { Ok(space.norm_sq(&space.cond_exp(f, x)?)) };
    Ok(e(&x1.join(x2)?)? + e(&x1.meet(x2)?)? - e(x1)? - e(x2)?)
}

pub fn counterexample_harness() -> Result<CounterexampleReport> {
    // outcomes (1,1), (1,-1), (-1,1), (-1,-1)
    let space = FiniteProbabilitySpace::with_labels(
        ["(1,1)", "(1,-1)", "(-1,1)", "(-1,-1)"].iter().map(|s| s.to_string()).collect(),
        vec![0.25; 4],
    )?;
    let xi1 = RandomVariable::new(vec![1.0, 1.0, -1.0, -1.0]);
    let xi2 = RandomVariable::new(vec![1.0, -1.0, 1.0, -1.0]);
    let x1 = SigmaField::from_blocks(4, &[vec![0, 1], vec![2], vec![3]])?;
    let x2 = space.sigma_of(&[&xi2])?;
    let e = |x: &SigmaField| -> Result<f64> { Ok(space.norm_sq(&space.cond_exp(&xi2, x)?)) };
    let lhs = e(&x1.join(&x2)?)? + e(&x1.meet(&x2)?)?;
    let rhs = e(&x1)? + e(&x2)?;
    let closure = lattice_closure(&space, &[x1.clone(), x2.clone()], 64)?;
    let verdict = verify_axioms(&space, &closure);
    let failed_axioms = verdict.failed_axioms().into_iter().map(String::from).collect();
    let noise_pair_deficit = pair_deficit(&space, &space.sigma_of(&[&xi1])?, &x2, &xi2)?;
    let swapped_x1 = SigmaField::from_blocks(4, &[vec![0, 2], vec![1], vec![3]])?;
    let swapped_deficit = pair_deficit(&space, &swapped_x1, &space.sigma_of(&[&xi1])?, &xi1)?;
    Ok(CounterexampleReport { lhs, rhs, deficit: lhs - rhs, failed_axioms, noise_pair_deficit, swapped_deficit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(n: usize) -> (SpectralResolution, Vec<RandomVariable>) {
        let space = FiniteProbabilitySpace::uniform(1 << n).unwrap();
        let xis: Vec<RandomVariable> = (0..n)
            .map(|i| RandomVariable::new((0..1usize << n).map(|w| if w >> (n - 1 - i) & 1 == 0 { 1.0 } else { -1.0 }).collect()))
            .collect();
        let fields: Vec<SigmaField> = xis.iter().map(|x| space.sigma_of(&[x]).unwrap()).collect();
        let b = NoiseBooleanAlgebra::from_independency(&space, &fields).unwrap();
        (SpectralResolution::resolve(&b).unwrap(), xis)
    }

    #[test]
    fn single_element_is_jensen() {
        let (res, _) = signs(2);
        let r = bonferroni_operator(&res, &[Elem::atom(0)]).unwrap();
        assert!(r.is_positive(1e-9));
        assert!(!r.equality_everywhere);
        assert!(r.equality_on_low_chaos);
        let z = bonferroni_operator(&res, &[Elem::ZERO]).unwrap();
        assert!(z.equality_everywhere);
        assert_eq!(z.containment_witness, Some(0));
    }

    #[test]
    fn pair_forms() {
        let (res, xi) = signs(2);
        let r = bonferroni_operator(&res, &[Elem::atom(0), Elem::atom(1)]).unwrap();
        let space = res.space();
        assert!(quadratic_form(space, &r.operator, &(&xi[0] + &xi[1])).abs() < 1e-12);
        assert!((quadratic_form(space, &r.operator, &(&xi[0] * &xi[1])) - 1.0).abs() < 1e-12);
        assert!(r.equality_on_low_chaos && !r.equality_everywhere);
    }

    #[test]
    fn truncations_and_odd_witness() {
        let (res, _) = signs(2);
        let xs = [Elem::atom(0), Elem::atom(1)];
        for m in 0..=2 {
            assert!(bonferroni_truncated(&res, &xs, m).unwrap().holds);
        }
        assert!(bonferroni_truncated(&res, &xs, 2).unwrap().max_eigenvalue.abs() < 1e-12);
        let w = bonferroni_partial(&res, &xs, 1).unwrap();
        assert!(w.fails_both_ways());
        assert!((w.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!((w.max_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_form() {
        let (res, xi) = signs(2);
        let r = bonferroni_independent(&res, &[Elem::atom(0), Elem::atom(1)]).unwrap();
        assert!((quadratic_form(res.space(), &r.operator, &(&xi[0] * &xi[1])) - 1.0).abs() < 1e-12);
        assert!(bonferroni_independent(&res, &[Elem::atom(0), Elem(3)]).is_err());
    }

    #[test]
    fn influence_forms() {
        let (res, xi) = signs(3);
        let atoms = res.algebra().atom_elems();
        let r = influence_inequality_check(&res, &atoms).unwrap();
        assert!(r.holds && r.three_partition_holds);
        let f = &(&xi[0] * &xi[1]) * &xi[2];
        let (l, rhs) = three_partition_bound(res.algebra(), &atoms, &f).unwrap();
        assert!((l - 3.0).abs() < 1e-12 && (rhs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn counterexample_numbers() {
        let c = counterexample_harness().unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-15);
        assert!((c.rhs - 1.5).abs() < 1e-15);
        assert!((c.deficit + 0.5).abs() < 1e-15);
        assert!(!c.failed_axioms.is_empty());
        assert!(c.noise_pair_deficit >= -1e-15);
        assert!(c.swapped_deficit < 0.0);
    }
}
