//! Finite probability spaces, random variables and sigma-fields.
//!
//! On a finite space with full support a (complete) sub-sigma-field is the
//! same thing as a partition of the outcome set, so [`SigmaField`] stores a
//! canonical block label per outcome. Conditioning is block averaging and the
//! lattice operations are common refinement (join) and finest common
//! coarsening (meet).

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for numeric comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default cap on the number of outcomes of a constructed space.
pub const DEFAULT_OUTCOME_CAP: usize = 65536;

const RENORMALIZE_WINDOW: f64 = 1e-12;
const NORMALIZATION_SLACK: f64 = 1e-9;

/// A finite outcome set with strictly positive probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteProbabilitySpace {
    labels: Vec<String>,
    probs: Vec<f64>,
    tol: f64,
}

impl FiniteProbabilitySpace {
    /// Builds a space with generated labels `w0, w1, ...`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| format!("w{i}")).collect();
        Self::with_labels(labels, probs)
    }

    pub fn with_labels(labels: Vec<String>, mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySpace);
        }
        if labels.len() != probs.len() {
            return Err(Error::SpaceMismatch { expected: probs.len(), found: labels.len() });
        }
        for (index, &value) in probs.iter().enumerate() {
            if value.is_nan() || value <= 0.0 || !value.is_finite() {
                return Err(Error::NonPositiveProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::NotNormalized { sum });
        }
        if (sum - 1.0).abs() > RENORMALIZE_WINDOW {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels, probs, tol: DEFAULT_TOL })
    }

    /// Uniform space on `n` outcomes.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The trivial sigma-field `0_P` (one block).
    pub fn trivial(&self) -> SigmaField {
        SigmaField { labels: vec![0; self.len()], n_blocks: 1 }
    }

    /// The full sigma-field `1_P` (all singletons).
    pub fn full(&self) -> SigmaField {
        SigmaField { labels: (0..self.len() as u32).collect(), n_blocks: self.len() }
    }

    pub(crate) fn check_rv(&self, f: &RandomVariable) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::SpaceMismatch { expected: self.len(), found: f.len() });
        }
        Ok(())
    }

    pub(crate) fn check_field(&self, x: &SigmaField) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::SpaceMismatch { expected: self.len(), found: x.len() });
        }
        Ok(())
    }

    /// `E[f]`. Panics on length mismatch.
    pub fn expect(&self, f: &RandomVariable) -> f64 {
        assert_eq!(f.len(), self.len(), "random variable lives on another space");
        self.probs.iter().zip(&f.values).map(|(p, v)| p * v).sum()
    }

    /// `E[fg]`.
    pub fn inner(&self, f: &RandomVariable, g: &RandomVariable) -> f64 {
        assert_eq!(f.len(), self.len(), "random variable lives on another space");
        assert_eq!(g.len(), self.len(), "random variable lives on another space");
        self.probs
            .iter()
            .zip(f.values.iter().zip(&g.values))
            .map(|(p, (a, b))| p * a * b)
            .sum()
    }

    /// `E[f^2]`.
    pub fn norm_sq(&self, f: &RandomVariable) -> f64 {
        self.inner(f, f)
    }

    pub fn variance(&self, f: &RandomVariable) -> f64 {
        let m = self.expect(f);
        (self.norm_sq(f) - m * m).max(0.0)
    }

    /// Probability of each block of `x`, indexed by block label.
    pub fn block_probs(&self, x: &SigmaField) -> Vec<f64> {
        let mut out = vec![0.0; x.n_blocks];
        for (p, &l) in self.probs.iter().zip(&x.labels) {
            out[l as usize] += p;
        }
        out
    }

    /// The sigma-field generated by the given random variables: the
    /// partition into joint level sets. Values closer than the space
    /// tolerance are treated as equal.
    pub fn sigma_of(&self, fs: &[&RandomVariable]) -> Result<SigmaField> {
        let mut acc = self.trivial();
        for f in fs {
            self.check_rv(f)?;
            acc = acc.join(&level_sets(&f.values, self.tol))?;
        }
        Ok(acc)
    }

    /// Conditional expectation `E[f | x]`: block averages.
    pub fn cond_exp(&self, f: &RandomVariable, x: &SigmaField) -> Result<RandomVariable> {
        self.check_rv(f)?;
        self.check_field(x)?;
        let mut mass = vec![0.0; x.n_blocks];
        let mut weighted = vec![0.0; x.n_blocks];
        for ((p, v), &l) in self.probs.iter().zip(&f.values).zip(&x.labels) {
            mass[l as usize] += p;
            weighted[l as usize] += p * v;
        }
        let avg: Vec<f64> = weighted.iter().zip(&mass).map(|(w, m)| w / m).collect();
        Ok(RandomVariable::new(x.labels.iter().map(|&l| avg[l as usize]).collect()))
    }

    /// Whether the sigma-fields are jointly independent. The empty list is
    /// independent.
    pub fn are_independent(&self, xs: &[&SigmaField]) -> Result<bool> {
        for x in xs {
            self.check_field(x)?;
        }
        if xs.len() < 2 {
            return Ok(true);
        }
        let expected_cells: usize = xs.iter().try_fold(1usize, |acc, x| acc.checked_mul(x.n_blocks)).unwrap_or(usize::MAX);
        if expected_cells > self.len() {
            return Ok(false);
        }
        let marginals: Vec<Vec<f64>> = xs.iter().map(|x| self.block_probs(x)).collect();
        let mut cells: HashMap<Vec<u32>, f64> = HashMap::new();
        for (w, p) in self.probs.iter().enumerate() {
            let key: Vec<u32> = xs.iter().map(|x| x.labels[w]).collect();
            *cells.entry(key).or_insert(0.0) += p;
        }
        // full support: an empty cell has probability 0 < product of marginals
        if cells.len() != expected_cells {
            return Ok(false);
        }
        Ok(cells.iter().all(|(key, &p)| {
            let prod: f64 = key.iter().zip(&marginals).map(|(&l, m)| m[l as usize]).product();
            (p - prod).abs() <= self.tol
        }))
    }
}

fn level_sets(values: &[f64], tol: f64) -> SigmaField {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cluster = vec![0u32; values.len()];
    let mut current = 0u32;
    for w in order.windows(2) {
        if values[w[1]] - values[w[0]] > tol {
            current += 1;
        }
        cluster[w[1]] = current;
    }
    SigmaField::from_labels(&cluster)
}

/// A sub-sigma-field of a finite full-support space, stored as a canonical
/// partition: block labels are assigned in order of the least outcome of
/// each block, so equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SigmaField {
    labels: Vec<u32>,
    n_blocks: usize,
}

impl SigmaField {
    /// Canonicalizes arbitrary per-outcome labels.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(raw: &[L]) -> Self {
        let mut map: HashMap<L, u32> = HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let next = map.len() as u32;
            labels.push(*map.entry(r).or_insert(next));
        }
        Self { n_blocks: map.len(), labels }
    }

    /// Builds the partition of `{0..n}` with the given blocks (any order).
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &w in block {
                if w >= n {
                    return Err(Error::InvalidPartition(format!("outcome {w} out of range 0..{n}")));
                }
                if raw[w] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("outcome {w} appears twice")));
                }
                raw[w] = b;
            }
        }
        if let Some(w) = raw.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("outcome {w} is not covered")));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn block_of(&self, outcome: usize) -> usize {
        self.labels[outcome] as usize
    }

    pub fn is_trivial(&self) -> bool {
        self.n_blocks <= 1
    }

    pub fn is_full(&self) -> bool {
        self.n_blocks == self.labels.len()
    }

    /// Canonical blocks: each sorted, ordered by least element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (w, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(w);
        }
        out
    }

    fn check_same(&self, other: &SigmaField) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::SpaceMismatch { expected: self.len(), found: other.len() });
        }
        Ok(())
    }

    /// `self ⊆ other` as sigma-fields: every block of `other` lies inside a
    /// block of `self`.
    pub fn is_subfield_of(&self, other: &SigmaField) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut image = vec![u32::MAX; other.n_blocks];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            let slot = &mut image[b as usize];
            if *slot == u32::MAX {
                *slot = a;
            } else if *slot != a {
                return false;
            }
        }
        true
    }

    /// Common refinement.
    pub fn join(&self, other: &SigmaField) -> Result<SigmaField> {
        self.check_same(other)?;
        let pairs: Vec<(u32, u32)> = self.labels.iter().copied().zip(other.labels.iter().copied()).collect();
        Ok(SigmaField::from_labels(&pairs))
    }

    /// Finest common coarsening: connected components of the block-overlap
    /// graph.
    pub fn meet(&self, other: &SigmaField) -> Result<SigmaField> {
        self.check_same(other)?;
        let offset = self.n_blocks;
        let mut uf = UnionFind::new(offset + other.n_blocks);
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            uf.union(a as usize, offset + b as usize);
        }
        let roots: Vec<usize> = self.labels.iter().map(|&a| uf.find(a as usize)).collect();
        Ok(SigmaField::from_labels(&roots))
    }

    /// Join of a list; `trivial` of the given length for the empty list.
    pub fn join_all<'a>(n: usize, xs: impl IntoIterator<Item = &'a SigmaField>) -> Result<SigmaField> {
        let mut acc = SigmaField { labels: vec![0; n], n_blocks: 1.min(n) };
        for x in xs {
            acc = acc.join(x)?;
        }
        Ok(acc)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// A real value per outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// Indicator of a block of `x`.
    pub fn indicator(x: &SigmaField, block: usize) -> Self {
        Self { values: x.labels.iter().map(|&l| if l as usize == block { 1.0 } else { 0.0 }).collect() }
    }

    /// Lifts a function of the block label of `x`.
    pub fn from_blocks(x: &SigmaField, per_block: &[f64]) -> Self {
        Self { values: x.labels.iter().map(|&l| per_block[l as usize]).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &RandomVariable) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn max_abs_diff(&self, other: &RandomVariable) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Whether the function is constant on every block of `x`.
    pub fn is_measurable(&self, x: &SigmaField, tol: f64) -> bool {
        let mut rep = vec![f64::NAN; x.n_blocks()];
        self.values.iter().zip(x.labels()).all(|(&v, &l)| {
            let r = &mut rep[l as usize];
            if r.is_nan() {
                *r = v;
                true
            } else {
                (*r - v).abs() <= tol
            }
        })
    }
}

impl AsRef<[f64]> for RandomVariable {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

macro_rules! pointwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&RandomVariable> for &RandomVariable {
            type Output = RandomVariable;
            fn $method(self, rhs: &RandomVariable) -> RandomVariable {
                assert_eq!(self.len(), rhs.len(), "random variables live on different spaces");
                RandomVariable { values: self.values.iter().zip(&rhs.values).map(|(a, b)| a $op b).collect() }
            }
        }
    };
}

pointwise!(Add, add, +);
pointwise!(Sub, sub, -);
pointwise!(Mul, mul, *);

/// A product of finite spaces together with its factor structure.
#[derive(Clone, Debug)]
pub struct ProductSpace {
    pub space: FiniteProbabilitySpace,
    sizes: Vec<usize>,
}

/// Product of the given spaces; outcome index is mixed-radix with the first
/// factor most significant.
pub fn product_space(spaces: &[FiniteProbabilitySpace], cap: usize) -> Result<ProductSpace> {
    if spaces.is_empty() {
        return Err(Error::EmptySpace);
    }
    let count = spaces.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len())).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let sizes: Vec<usize> = spaces.iter().map(|s| s.len()).collect();
    let mut probs = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for w in 0..count {
        let coords = decompose(w, &sizes);
        probs.push(coords.iter().zip(spaces).map(|(&c, s)| s.probs[c]).product());
        labels.push(coords.iter().zip(spaces).map(|(&c, s)| s.labels[c].as_str()).collect::<Vec<_>>().join(","));
    }
    let tol = spaces.iter().map(|s| s.tol).fold(f64::INFINITY, f64::min);
    let space = FiniteProbabilitySpace::with_labels(labels, probs)?.with_tolerance(tol);
    Ok(ProductSpace { space, sizes })
}

fn decompose(mut w: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &s) in out.iter_mut().zip(sizes).rev() {
        *slot = w % s;
        w /= s;
    }
    out
}

impl ProductSpace {
    pub fn factor_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Coordinate of `outcome` in factor `i`.
    pub fn coordinate(&self, i: usize, outcome: usize) -> usize {
        decompose(outcome, &self.sizes)[i]
    }

    pub fn lift_rv(&self, i: usize, f: &RandomVariable) -> Result<RandomVariable> {
        if f.len() != self.sizes[i] {
            return Err(Error::SpaceMismatch { expected: self.sizes[i], found: f.len() });
        }
        Ok(RandomVariable::new((0..self.space.len()).map(|w| f.values[self.coordinate(i, w)]).collect()))
    }

    pub fn lift_field(&self, i: usize, x: &SigmaField) -> Result<SigmaField> {
        if x.len() != self.sizes[i] {
            return Err(Error::SpaceMismatch { expected: self.sizes[i], found: x.len() });
        }
        let raw: Vec<u32> = (0..self.space.len()).map(|w| x.labels[self.coordinate(i, w)]).collect();
        Ok(SigmaField::from_labels(&raw))
    }

    /// The sigma-field of factor `i`.
    pub fn factor_field(&self, i: usize) -> SigmaField {
        let raw: Vec<usize> = (0..self.space.len()).map(|w| self.coordinate(i, w)).collect();
        SigmaField::from_labels(&raw)
    }
}
