//! Spectral resolution of a finite noise Boolean algebra.
//!
//! For finite `B` the spectral space is `B` itself. The point `x` carries
//! `H_x`, the functions measurable w.r.t. `x` that are orthogonal to every
//! function measurable w.r.t. a strictly smaller element. Bases are built in
//! increasing rank order by pivoted Gram–Schmidt.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::noisebool::{set_partitions, Elem, NoiseBooleanAlgebra};
use crate::probspace::{FiniteProbabilitySpace, RandomVariable, SigmaField};

/// Default cap on `|Ω|` for [`SpectralResolution::resolve`].
pub const DEFAULT_RESOLVE_CAP: usize = 4096;

/// Kernel threshold for [`first_chaos_additive`].
const KERNEL_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct SpectralResolution {
    algebra: NoiseBooleanAlgebra,
    bases: Vec<Vec<RandomVariable>>,
}

impl SpectralResolution {
    pub fn resolve(algebra: &NoiseBooleanAlgebra) -> Result<Self> {
        Self::resolve_capped(algebra, DEFAULT_RESOLVE_CAP)
    }

    pub fn resolve_capped(algebra: &NoiseBooleanAlgebra, cap: usize) -> Result<Self> {
        let space = algebra.space();
        if space.len() > cap {
            return Err(Error::CapExceeded { count: space.len(), cap });
        }
        let probs = space.probs();
        let mut bases: Vec<Vec<RandomVariable>> = vec![Vec::new(); algebra.len()];
        for x in algebra.elems_by_rank() {
            let existing: Vec<&[f64]> = x
                .subsets()
                .filter(|&y| y != x)
                .flat_map(|y| bases[y.index()].iter().map(|e| e.values()))
                .collect();
            let field = algebra.field(x);
            let candidates: Vec<Vec<f64>> =
                (0..field.n_blocks()).map(|b| RandomVariable::indicator(field, b).into_values()).collect();
            let found = linalg::extend_orthonormal(probs, &existing, candidates, space.tol())
                .map_err(|a| Error::RankAmbiguity { element: x.index(), residual: a.residual })?;
            bases[x.index()] = found.into_iter().map(RandomVariable::new).collect();
        }
        Ok(Self { algebra: algebra.clone(), bases })
    }

    pub fn algebra(&self) -> &NoiseBooleanAlgebra {
        &self.algebra
    }

    pub fn space(&self) -> &FiniteProbabilitySpace {
        self.algebra.space()
    }

    /// Spectral points, in mask order.
    pub fn points(&self) -> impl Iterator<Item = Elem> + '_ {
        self.algebra.elems()
    }

    /// Orthonormal basis of `H_s`.
    pub fn basis(&self, s: Elem) -> &[RandomVariable] {
        &self.bases[s.index()]
    }

    pub fn dim(&self, s: Elem) -> usize {
        self.bases[s.index()].len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }

    /// `K(s)`: the number of atoms below `s`.
    pub fn counting(&self, s: Elem) -> usize {
        s.count()
    }

    /// `K` at every point, in mask order.
    pub fn counting_map(&self) -> Vec<usize> {
        self.points().map(Elem::count).collect()
    }

    /// `S_x = {s : s ⊆ x}`.
    pub fn spectral_set(&self, x: Elem) -> Vec<Elem> {
        x.subsets().collect()
    }

    /// Points with `K = k`.
    pub fn level(&self, k: usize) -> Vec<Elem> {
        self.points().filter(|s| s.count() == k).collect()
    }

    /// Orthonormal basis of the chaos space `H^(k)`.
    pub fn chaos_space(&self, k: usize) -> Vec<RandomVariable> {
        self.level(k).into_iter().flat_map(|s| self.basis(s).iter().cloned()).collect()
    }

    /// Orthogonal projection of `f` onto the sum of `H_s` over `points`.
    pub fn project_points(&self, points: &[Elem], f: &RandomVariable) -> Result<RandomVariable> {
        self.space().check_rv(f)?;
        let probs = self.space().probs();
        let mut out = RandomVariable::zeros(f.len());
        for &s in points {
            out.axpy(1.0, &RandomVariable::new(linalg::project(probs, self.basis(s), f.values())));
        }
        Ok(out)
    }

    /// Components `f_k ∈ H^(k)` for `k = 0..=n_atoms`, summing to `f`.
    pub fn chaos_decompose(&self, f: &RandomVariable) -> Result<Vec<RandomVariable>> {
        (0..=self.algebra.n_atoms()).map(|k| self.project_points(&self.level(k), f)).collect()
    }

    pub fn spectral_measure(&self, f: &RandomVariable) -> Result<SpectralMeasure> {
        self.space().check_rv(f)?;
        let probs = self.space().probs();
        let mass = self
            .bases
            .iter()
            .map(|basis| linalg::coefficients(probs, basis, f.values()).iter().map(|c| c * c).sum())
            .collect();
        Ok(SpectralMeasure { mass })
    }

    /// `pr_x` as a table over the spectral points: `s ↦ s ∧ x`.
    pub fn noise_projection(&self, x: Elem) -> Result<Vec<Elem>> {
        if x.0 > self.algebra.top().0 {
            return Err(Error::NotAnElement);
        }
        Ok(self.points().map(|s| s.meet(x)).collect())
    }

    pub fn noise_projection_of(&self, x: &SigmaField) -> Result<Vec<Elem>> {
        self.noise_projection(self.algebra.elem(x)?)
    }

    /// Per-point dimensions and `K`, for export.
    pub fn summary(&self) -> Vec<PointSummary> {
        self.points()
            .map(|s| PointSummary { element: s.0, atoms: s.atom_indices().collect(), k: s.count(), dim: self.dim(s) })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PointSummary {
    pub element: u32,
    pub atoms: Vec<usize>,
    pub k: usize,
    pub dim: usize,
}

/// The spectral measure `μ_f`: a mass per spectral point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralMeasure {
    mass: Vec<f64>,
}

impl SpectralMeasure {
    pub fn from_masses(mass: Vec<f64>) -> Self {
        Self { mass }
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass(&self, s: Elem) -> f64 {
        self.mass[s.index()]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn of_set(&self, points: impl IntoIterator<Item = Elem>) -> f64 {
        points.into_iter().map(|s| self.mass(s)).sum()
    }

    /// `μ_f(S_x)`.
    pub fn below(&self, x: Elem) -> f64 {
        self.of_set(x.subsets())
    }

    pub fn integrate(&self, g: impl Fn(Elem) -> f64) -> f64 {
        self.mass.iter().enumerate().map(|(i, m)| m * g(Elem(i as u32))).sum()
    }

    /// Normalized copy (total mass one). Returns `None` for the zero
    /// measure.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let t = self.total();
        (t > 0.0).then(|| self.mass.iter().map(|m| m / t).collect())
    }

    /// CSV rows `element,atoms_below,k,mass`; atoms are `|`-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element,atoms_below,k,mass\n");
        for (i, m) in self.mass.iter().enumerate() {
            let s = Elem(i as u32);
            let atoms: Vec<String> = s.atom_indices().map(|a| a.to_string()).collect();
            writeln!(out, "{},{},{},{:.16e}", s.0, atoms.join("|"), s.count(), m).expect("write to string");
        }
        out
    }
}

/// `b̲(s)`: the least element of the subalgebra with atoms `b_atoms` that
/// contains `s`.
pub fn lower_bound_in(b_atoms: &[Elem], s: Elem) -> Elem {
    b_atoms.iter().filter(|a| !a.meet(s).is_zero()).fold(Elem::ZERO, |acc, &a| acc.join(a))
}

/// `K_b(s)`: the number of atoms of `b` meeting `s`.
pub fn counting_in(b_atoms: &[Elem], s: Elem) -> usize {
    b_atoms.iter().filter(|a| !a.meet(s).is_zero()).count()
}

/// `P_b(y)`: points of `S_y` outside every `S_z` with `z ⊊ y` in `b`.
pub fn partition_set(b_atoms: &[Elem], y: Elem) -> Vec<Elem> {
    y.subsets().filter(|&s| lower_bound_in(b_atoms, s) == y).collect()
}

/// Orthonormal basis of the additive integrals: mean-zero `f` with
/// `f = E[f|x] + E[f|x′]` for every `x`. Computed independently of the
/// spectral resolution as the kernel of the stacked constraints.
pub fn first_chaos_additive(algebra: &NoiseBooleanAlgebra) -> Result<Vec<RandomVariable>> {
    let space = algebra.space();
    let n = space.len();
    if n > DEFAULT_RESOLVE_CAP {
        return Err(Error::CapExceeded { count: n, cap: DEFAULT_RESOLVE_CAP });
    }
    let probs = space.probs();
    let sq: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    // whitened conditional expectation onto x
    let whitened_cond = |x: &SigmaField| {
        let bp = space.block_probs(x);
        DMatrix::from_fn(n, n, |i, j| {
            let b = x.block_of(i);
            if b == x.block_of(j) {
                sq[i] * sq[j] / bp[b]
            } else {
                0.0
            }
        })
    };
    let mean = DMatrix::from_fn(n, n, |i, j| sq[i] * sq[j]);
    let mut gram = mean.clone();
    for x in algebra.elems() {
        let xc = algebra.complement_elem(x);
        if xc.0 < x.0 {
            continue;
        }
        // M = I − E_x − E_x′ is symmetric and E_x E_x′ = E_0 for
        // independent complements, so MᵀM = I − E_x − E_x′ + 2 E_0.
        gram += DMatrix::identity(n, n) - whitened_cond(algebra.field(x)) - whitened_cond(algebra.field(xc))
            + mean.scale(2.0);
    }
    let out = linalg::symmetric_eigen(&gram)
        .into_iter()
        .filter(|(l, _)| l.abs() < KERNEL_TOL)
        .map(|(_, v)| RandomVariable::new(v.iter().zip(&sq).map(|(a, s)| a / s).collect()))
        .collect();
    Ok(out)
}

/// `inf_x(f) = E[var(f | x′)]`.
pub fn influence(algebra: &NoiseBooleanAlgebra, x: Elem, f: &RandomVariable) -> Result<f64> {
    let space = algebra.space();
    let g = algebra.cond_exp(f, algebra.complement_elem(x))?;
    Ok((space.norm_sq(f) - space.norm_sq(&g)).max(0.0))
}

/// `E[√var(f | x′)]`.
pub fn sqrt_influence(algebra: &NoiseBooleanAlgebra, x: Elem, f: &RandomVariable) -> Result<f64> {
    let space = algebra.space();
    let xc = algebra.complement_elem(x);
    let m1 = algebra.cond_exp(f, xc)?;
    let m2 = algebra.cond_exp(&(f * f), xc)?;
    let sd = RandomVariable::new(m2.values().iter().zip(m1.values()).map(|(a, b)| (a - b * b).max(0.0).sqrt()).collect());
    Ok(space.expect(&sd))
}

/// `J(f)`: minimum over groupings of the atoms of the sum of squared
/// square-root influences of the groups.
pub fn functional_j(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Result<f64> {
    let mut best = f64::INFINITY;
    for groups in set_partitions(algebra.n_atoms()) {
        let mut total = 0.0;
        for g in groups {
            let e = Elem(g.iter().fold(0, |m, &i| m | 1 << i));
            total += sqrt_influence(algebra, e, f)?.powi(2);
        }
        best = best.min(total);
    }
    Ok(if best.is_finite() { best } else { 0.0 })
}

/// `H1(f) = Σ_a var(E[f|a])` over the atoms.
pub fn functional_h1(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Result<f64> {
    let space = algebra.space();
    algebra.atom_elems().into_iter().try_fold(0.0, |acc, a| Ok(acc + space.variance(&algebra.cond_exp(f, a)?)))
}

pub fn functionals_jh1(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Result<(f64, f64)> {
    Ok((functional_j(algebra, f)?, functional_h1(algebra, f)?))
}

/// The stable sigma-field: generated by the first chaos.
pub fn stable_field(res: &SpectralResolution) -> Result<SigmaField> {
    let basis = res.chaos_space(1);
    let refs: Vec<&RandomVariable> = basis.iter().collect();
    res.space().sigma_of(&refs)
}

/// Per-point comparison of `μ_f` under a coarse algebra and a refinement.
#[derive(Clone, Debug, Serialize)]
pub struct RefineComparison {
    /// `(point of the coarse algebra, coarse mass, refined mass)`.
    pub rows: Vec<(Elem, f64, f64)>,
    pub holds: bool,
}

/// Checks `μ̃_f({x}) ≤ μ_f({x})` at every point `x` of the coarse algebra.
pub fn refine_compare(coarse: &SpectralResolution, fine: &SpectralResolution, f: &RandomVariable) -> Result<RefineComparison> {
    let tol = coarse.space().tol();
    let mu = coarse.spectral_measure(f)?;
    let mu_fine = fine.spectral_measure(f)?;
    let mut rows = Vec::new();
    for x in coarse.points() {
        let y = fine
            .algebra()
            .index_of(coarse.algebra().field(x))
            .ok_or_else(|| Error::Precondition("coarse algebra is not contained in the refinement".into()))?;
        rows.push((x, mu.mass(x), mu_fine.mass(y)));
    }
    let holds = rows.iter().all(|&(_, c, r)| r <= c + tol);
    Ok(RefineComparison { rows, holds })
}
