//! Noise semigroup, multiplier operators, self-joinings, multiplicative
//! integrals and spectral-independence probabilities.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noisebool::{Elem, NoiseBooleanAlgebra};
use crate::probspace::{FiniteProbabilitySpace, RandomVariable, SigmaField};
use crate::spectral::{SpectralMeasure, SpectralResolution};

/// Default cap on `|Ω|²` for an explicit self-joining table.
pub const DEFAULT_JOINING_CAP: usize = 1 << 22;
/// Pointwise tolerance for the multiplicative-integral test.
pub const MULTIPLICATIVE_TOL: f64 = 1e-8;

/// A dense operator on functions of a finite space.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
}

impl LinearOperator {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator matrix must be square");
        Self { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    /// `f ↦ E[f | x]`.
    pub fn cond_exp(space: &FiniteProbabilitySpace, x: &SigmaField) -> Result<Self> {
        space.check_field(x)?;
        let n = space.len();
        let bp = space.block_probs(x);
        let p = space.probs();
        Ok(Self::from_matrix(DMatrix::from_fn(n, n, |i, j| {
            let b = x.block_of(i);
            if b == x.block_of(j) {
                p[j] / bp[b]
            } else {
                0.0
            }
        })))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &RandomVariable) -> RandomVariable {
        assert_eq!(f.len(), self.dim(), "random variable lives on another space");
        let v = &self.matrix * nalgebra::DVector::from_column_slice(f.values());
        RandomVariable::new(v.iter().copied().collect())
    }

    pub fn compose(&self, other: &LinearOperator) -> LinearOperator {
        Self::from_matrix(&self.matrix * &other.matrix)
    }

    pub fn max_abs_diff(&self, other: &LinearOperator) -> f64 {
        (&self.matrix - &other.matrix).iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Self-adjointness in `L²(P)`: `p_i M_ij = p_j M_ji`.
    pub fn is_self_adjoint(&self, probs: &[f64], tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (probs[i] * self.matrix[(i, j)] - probs[j] * self.matrix[(j, i)]).abs() <= tol))
    }
}

/// The operator acting as `m(s)` on each `H_s`.
pub fn multiplier_operator(res: &SpectralResolution, m: impl Fn(Elem) -> f64) -> LinearOperator {
    let n = res.space().len();
    let p = res.space().probs();
    let mut matrix = DMatrix::zeros(n, n);
    for s in res.points() {
        let w = m(s);
        if w == 0.0 {
            continue;
        }
        for e in res.basis(s) {
            let e = e.values();
            for i in 0..n {
                let ei = w * e[i];
                for j in 0..n {
                    matrix[(i, j)] += ei * e[j] * p[j];
                }
            }
        }
    }
    LinearOperator::from_matrix(matrix)
}

fn decay_weight(t: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        (-t * k as f64).exp()
    }
}

/// `U_t = e^{-tk}` on `H^(k)`; `t = ∞` gives the expectation operator.
pub fn noise_operator(res: &SpectralResolution, t: f64) -> Result<LinearOperator> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::OutOfRange { what: "t", value: t });
    }
    Ok(multiplier_operator(res, |s| decay_weight(t, s.count())))
}

/// `U_t` as the mixture of conditional expectations over the element that
/// keeps each atom independently with probability `e^{-t}`.
pub fn noise_operator_bernoulli(algebra: &NoiseBooleanAlgebra, t: f64) -> Result<LinearOperator> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::OutOfRange { what: "t", value: t });
    }
    let space = algebra.space();
    let n = space.len();
    let keep = (-t).exp();
    let atoms = algebra.n_atoms() as i32;
    let mut matrix = DMatrix::zeros(n, n);
    for x in algebra.elems() {
        let k = x.count() as i32;
        let w = keep.powi(k) * (1.0 - keep).powi(atoms - k);
        if w != 0.0 {
            matrix += LinearOperator::cond_exp(space, algebra.field(x))?.matrix.scale(w);
        }
    }
    Ok(LinearOperator::from_matrix(matrix))
}

fn check_rho(algebra: &NoiseBooleanAlgebra, parts: &[Elem], rho: &[f64]) -> Result<()> {
    if !algebra.is_partition_of_unity(parts) {
        return Err(Error::NotPartitionOfUnity(format!("{parts:?}")));
    }
    if parts.len() != rho.len() {
        return Err(Error::Precondition(format!("{} parts but {} correlations", parts.len(), rho.len())));
    }
    if let Some(&r) = rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::OutOfRange { what: "rho", value: r });
    }
    Ok(())
}

/// `m(s) = ∏_p ρ(p)^{K(s ∧ p)}`, with `0^0 = 1`.
pub fn generalized_multiplier(parts: &[Elem], rho: &[f64], s: Elem) -> f64 {
    parts.iter().zip(rho).map(|(p, r)| r.powi(s.meet(*p).count() as i32)).product()
}

pub fn generalized_operator(res: &SpectralResolution, parts: &[Elem], rho: &[f64]) -> Result<LinearOperator> {
    check_rho(res.algebra(), parts, rho)?;
    Ok(multiplier_operator(res, |s| generalized_multiplier(parts, rho, s)))
}

/// `t ↦ ⟨f, U_t f⟩` on a grid, from the spectral measure.
pub fn decay_curve(res: &SpectralResolution, f: &RandomVariable, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mu = res.spectral_measure(f)?;
    Ok(ts.iter().map(|&t| (t, mu.integrate(|s| decay_weight(t, s.count())))).collect())
}

/// A symmetric self-joining: an exact joint law on `Ω × Ω`.
#[derive(Clone, Debug)]
pub struct SelfJoining {
    pub parts: Vec<Elem>,
    pub rho: Vec<f64>,
    n: usize,
    joint: Vec<f64>,
}

fn mixture_weight(rho: &[f64], chosen: u32) -> f64 {
    rho.iter()
        .enumerate()
        .map(|(i, r)| if chosen >> i & 1 == 1 { *r } else { 1.0 - r })
        .product()
}

/// Copy probability of each atom: `ρ` of the part containing it.
fn atom_rho(algebra: &NoiseBooleanAlgebra, parts: &[Elem], rho: &[f64]) -> Vec<f64> {
    (0..algebra.n_atoms())
        .map(|a| parts.iter().position(|p| p.contains(Elem::atom(a))).map_or(1.0, |i| rho[i]))
        .collect()
}

pub fn self_joining(algebra: &NoiseBooleanAlgebra, parts: &[Elem], rho: &[f64]) -> Result<SelfJoining> {
    self_joining_capped(algebra, parts, rho, DEFAULT_JOINING_CAP)
}

/// Mixture over sets `T` of atoms, each atom kept independently with the
/// `ρ` of its part, of the coupling that agrees on `∨T` and is
/// conditionally independent given it.
pub fn self_joining_capped(algebra: &NoiseBooleanAlgebra, parts: &[Elem], rho: &[f64], cap: usize) -> Result<SelfJoining> {
    check_rho(algebra, parts, rho)?;
    let space = algebra.space();
    let n = space.len();
    if n.saturating_mul(n) > cap {
        return Err(Error::CapExceeded { count: n * n, cap });
    }
    let p = space.probs();
    let keep = atom_rho(algebra, parts, rho);
    let mut joint = vec![0.0; n * n];
    for chosen in 0..(1u32 << keep.len()) {
        let w = mixture_weight(&keep, chosen);
        if w == 0.0 {
            continue;
        }
        let y = algebra.field(Elem(chosen));
        let bp = space.block_probs(y);
        for i in 0..n {
            let b = y.block_of(i);
            let scale = w * p[i] / bp[b];
            for j in 0..n {
                if y.block_of(j) == b {
                    joint[i * n + j] += scale * p[j];
                }
            }
        }
    }
    Ok(SelfJoining { parts: parts.to_vec(), rho: rho.to_vec(), n, joint })
}

impl SelfJoining {
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        self.joint[i * self.n + j]
    }

    pub fn total(&self) -> f64 {
        self.joint.iter().sum()
    }

    pub fn left_marginal(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.joint(i, j)).sum()).collect()
    }

    pub fn right_marginal(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.joint(i, j)).sum()).collect()
    }

    /// Largest deviation from symmetry under swapping the coordinates.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.joint(i, j) - self.joint(j, i)).abs());
            }
        }
        worst
    }
}

/// `Σ f(ω₁) g(ω₂) Q(ω₁, ω₂)`.
pub fn joining_correlation(j: &SelfJoining, f: &RandomVariable, g: &RandomVariable) -> f64 {
    assert_eq!(f.len(), j.n, "random variable lives on another space");
    assert_eq!(g.len(), j.n, "random variable lives on another space");
    let (fv, gv) = (f.values(), g.values());
    (0..j.n).map(|a| fv[a] * (0..j.n).map(|b| j.joint(a, b) * gv[b]).sum::<f64>()).sum()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Outcomes of one block and a sampler over them.
type BlockSampler = (Vec<usize>, WeightedIndex<f64>);

/// Seeded Monte-Carlo estimate of the joining correlation, for spaces
/// too large for the explicit table.
pub fn joining_correlation_mc(
    algebra: &NoiseBooleanAlgebra,
    parts: &[Elem],
    rho: &[f64],
    f: &RandomVariable,
    g: &RandomVariable,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_rho(algebra, parts, rho)?;
    let space = algebra.space();
    space.check_rv(f)?;
    space.check_rv(g)?;
    if samples < 2 {
        return Err(Error::OutOfRange { what: "samples", value: samples as f64 });
    }
    let p = space.probs();
    let outer = WeightedIndex::new(p).map_err(|e| Error::Precondition(e.to_string()))?;
    // per chosen subset: for each block, its outcomes and a sampler
    let mut samplers: HashMap<u32, Vec<BlockSampler>> = HashMap::new();
    let keep = atom_rho(algebra, parts, rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let w1 = outer.sample(&mut rng);
        let chosen = keep
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, r)| if rng.gen::<f64>() < *r { acc | 1 << i } else { acc });
        let field = algebra.field(Elem(chosen));
        let blocks = samplers.entry(chosen).or_insert_with(|| {
            field
                .blocks()
                .into_iter()
                .map(|b| {
                    let w: Vec<f64> = b.iter().map(|&i| p[i]).collect();
                    (b, WeightedIndex::new(w).expect("positive block"))
                })
                .collect()
        });
        let (members, sampler) = &blocks[field.block_of(w1)];
        let w2 = members[sampler.sample(&mut rng)];
        let v = f.values()[w1] * g.values()[w2];
        sum += v;
        sum_sq += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(MonteCarloEstimate { mean, std_error: (var / m).sqrt(), samples, seed })
}

/// `E[f] = 0` and `f = E[f|x] + E[f|x′]` for every `x`.
pub fn is_additive_integral(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Result<bool> {
    let space = algebra.space();
    space.check_rv(f)?;
    let tol = space.tol();
    if space.expect(f).abs() > tol {
        return Ok(false);
    }
    for x in algebra.elems() {
        let sum = &algebra.cond_exp(f, x)? + &algebra.cond_exp(f, algebra.complement_elem(x))?;
        if sum.max_abs_diff(f) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `E[f] = 1` and `f = E[f|x] · E[f|x′]` for every `x`.
pub fn is_multiplicative_integral(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Result<bool> {
    let space = algebra.space();
    space.check_rv(f)?;
    if (space.expect(f) - 1.0).abs() > MULTIPLICATIVE_TOL {
        return Ok(false);
    }
    for x in algebra.elems() {
        let prod = &algebra.cond_exp(f, x)? * &algebra.cond_exp(f, algebra.complement_elem(x))?;
        if prod.max_abs_diff(f) > MULTIPLICATIVE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `∏_a (1 + h_a)` where `h_a = E[h|a]` are the atom components of a
/// first-chaos `h`.
pub fn exp_map(res: &SpectralResolution, h: &RandomVariable) -> Result<RandomVariable> {
    let space = res.space();
    space.check_rv(h)?;
    let first = res.project_points(&res.level(1), h)?;
    let residual = first.max_abs_diff(h);
    if residual > space.tol() * (1.0 + space.norm_sq(h).sqrt()) {
        return Err(Error::NotFirstChaos(residual));
    }
    let algebra = res.algebra();
    let mut f = RandomVariable::constant(h.len(), 1.0);
    for a in algebra.atom_elems() {
        let ha = algebra.cond_exp(h, a)?;
        f = &f * &ha.map(|v| 1.0 + v);
    }
    Ok(f)
}

/// Inverse of [`exp_map`]: `h_a = E[f|a] - 1`, summed over the atoms.
pub fn recover_exponent(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Result<RandomVariable> {
    let mut h = RandomVariable::zeros(f.len());
    for a in algebra.atom_elems() {
        h.axpy(1.0, &algebra.cond_exp(f, a)?.map(|v| v - 1.0));
    }
    Ok(h)
}

/// A probability on the spectral space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralProbability {
    mass: Vec<f64>,
}

impl SpectralProbability {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if let Some(m) = mass.iter().find(|m| m.is_nan() || **m < -1e-12 || !m.is_finite()) {
            return Err(Error::NotAProbability(format!("negative mass {m}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotAProbability(format!("total mass {total}")));
        }
        Ok(Self { mass: mass.into_iter().map(|m| m.max(0.0)).collect() })
    }

    pub fn dirac_zero(points: usize) -> Self {
        let mut mass = vec![0.0; points];
        mass[0] = 1.0;
        Self { mass }
    }

    /// Includes atom `a` independently with probability `q[a]`.
    pub fn from_inclusion(q: &[f64]) -> Result<Self> {
        if let Some(&v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange { what: "inclusion probability", value: v });
        }
        let mass = (0..1u32 << q.len())
            .map(|s| q.iter().enumerate().map(|(a, p)| if s >> a & 1 == 1 { *p } else { 1.0 - p }).product())
            .collect();
        Ok(Self { mass })
    }

    pub fn from_measure(mu: &SpectralMeasure) -> Result<Self> {
        let mass = mu.normalized().ok_or_else(|| Error::Precondition("zero random variable".into()))?;
        Self::new(mass)
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass(&self, s: Elem) -> f64 {
        self.mass[s.index()]
    }

    /// `ν(a ⊆ s)` per atom.
    pub fn inclusion_probabilities(&self, n_atoms: usize) -> Vec<f64> {
        (0..n_atoms)
            .map(|a| self.mass.iter().enumerate().filter(|(s, _)| s >> a & 1 == 1).map(|(_, m)| m).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &SpectralProbability) -> f64 {
        self.mass.iter().zip(&other.mass).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// `ν({0}) > 0`, `ν` charges only points with `H_s ≠ {0}`, and `pr_x`,
/// `pr_x′` are `ν`-independent for every `x`.
pub fn spectral_independence_check(res: &SpectralResolution, nu: &SpectralProbability, tol: f64) -> Result<bool> {
    let algebra = res.algebra();
    if nu.mass.len() != algebra.len() {
        return Err(Error::SpaceMismatch { expected: algebra.len(), found: nu.mass.len() });
    }
    if nu.mass[0] <= 0.0 {
        return Ok(false);
    }
    if res.points().any(|s| res.dim(s) == 0 && nu.mass(s) > tol) {
        return Ok(false);
    }
    for x in algebra.elems() {
        let xc = algebra.complement_elem(x);
        if xc.0 < x.0 {
            continue;
        }
        let mut left: HashMap<Elem, f64> = HashMap::new();
        let mut right: HashMap<Elem, f64> = HashMap::new();
        for s in algebra.elems() {
            *left.entry(s.meet(x)).or_default() += nu.mass(s);
            *right.entry(s.meet(xc)).or_default() += nu.mass(s);
        }
        for u in x.subsets() {
            for v in xc.subsets() {
                let lhs = nu.mass(u.join(v));
                let rhs = left.get(&u).copied().unwrap_or(0.0) * right.get(&v).copied().unwrap_or(0.0);
                if (lhs - rhs).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `μ_{f/‖f‖}`.
pub fn spectral_independence_from_integral(res: &SpectralResolution, f: &RandomVariable) -> Result<SpectralProbability> {
    SpectralProbability::from_measure(&res.spectral_measure(f)?)
}

/// A multiplicative integral `f` with `μ_{f/‖f‖}` including atom `a`
/// independently with probability `q[a]`: `f = ∏_a (1 + g_a)` with
/// `g_a ∈ H_a` of squared norm `q_a / (1 - q_a)`.
pub fn reconstruct_from_inclusion(res: &SpectralResolution, q: &[f64]) -> Result<RandomVariable> {
    let algebra = res.algebra();
    if q.len() != algebra.n_atoms() {
        return Err(Error::SpaceMismatch { expected: algebra.n_atoms(), found: q.len() });
    }
    let mut f = RandomVariable::constant(res.space().len(), 1.0);
    for (i, &qa) in q.iter().enumerate() {
        if !(0.0..1.0).contains(&qa) {
            return Err(Error::OutOfRange { what: "inclusion probability", value: qa });
        }
        let unit = res.basis(Elem::atom(i)).first().ok_or(Error::Precondition("atom with trivial H".into()))?;
        let factor = unit.scale((qa / (1.0 - qa)).sqrt()).map(|v| 1.0 + v);
        f = &f * &factor;
    }
    Ok(f)
}

/// A fully supported spectral-independence probability together with the
/// multiplicative integral realizing it (each atom included with
/// probability one half).
pub fn equivalent_spectral_independence(res: &SpectralResolution) -> Result<(RandomVariable, SpectralProbability)> {
    let q = vec![0.5; res.algebra().n_atoms()];
    let f = reconstruct_from_inclusion(res, &q)?;
    let nu = spectral_independence_from_integral(res, &f)?;
    Ok((f, nu))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TailBound {
    pub m: usize,
    pub p0: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `ν(K ≤ m) ≥ p₀ Σ_{l≤m} (-ln p₀)^l / l!` with `p₀ = ν({0})`.
pub fn tail_bound_check(res: &SpectralResolution, nu: &SpectralProbability, m: usize) -> Result<TailBound> {
    if !spectral_independence_check(res, nu, 1e-9)? {
        return Err(Error::Precondition("not a spectral independence probability".into()));
    }
    let p0 = nu.mass[0];
    let lambda = -p0.ln();
    let mut term = 1.0;
    let mut series = 1.0;
    for l in 1..=m {
        term *= lambda / l as f64;
        series += term;
    }
    let rhs = p0 * series;
    let lhs: f64 = res.points().filter(|s| s.count() <= m).map(|s| nu.mass(s)).sum();
    Ok(TailBound { m, p0, lhs, rhs, holds: lhs >= rhs - 1e-12 })
}
