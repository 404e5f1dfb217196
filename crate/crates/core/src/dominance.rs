//! Sums of independent indicators, a variance-halving averaging step, and
//! the exploration of spectral points along a nested chain of subalgebras.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noisebool::Elem;
use crate::operators::SpectralProbability;
use crate::spectral::{counting_in, SpectralResolution};

const CDF_TOL: f64 = 1e-12;

/// A probability mass function on `{0, …, n}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn masses(&self) -> &[f64] {
        &self.0
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(k, m)| k as f64 * m).sum()
    }
}

/// Law of `Σ 1_{A_i}` for independent events with `P(A_i) = p_i`.
pub fn binomial_convolution(p: &[f64]) -> Result<Pmf> {
    let mut pmf = vec![1.0];
    for &q in p {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::OutOfRange { what: "probability", value: q });
        }
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, m) in pmf.iter().enumerate() {
            next[k] += m * (1.0 - q);
            next[k + 1] += m * q;
        }
        pmf = next;
    }
    Ok(Pmf(pmf))
}

pub fn geometric_mean(p: &[f64]) -> f64 {
    if p.is_empty() {
        return 1.0;
    }
    if p.contains(&0.0) {
        return 0.0;
    }
    (p.iter().map(|q| q.ln()).sum::<f64>() / p.len() as f64).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct FosdReport {
    pub pmf: Pmf,
    pub dominated_pmf: Pmf,
    pub geometric_mean: f64,
    pub pass: bool,
}

/// Whether `Bin(p)` first-order dominates the binomial law with the same
/// number of trials and success probability the geometric mean of `p`.
pub fn fosd_check(p: &[f64]) -> Result<FosdReport> {
    let pmf = binomial_convolution(p)?;
    let g = geometric_mean(p);
    let dominated_pmf = binomial_convolution(&vec![g; p.len()])?;
    let pass = pmf.cdf().iter().zip(dominated_pmf.cdf()).all(|(a, b)| *a <= b + CDF_TOL);
    Ok(FosdReport { pmf, dominated_pmf, geometric_mean: g, pass })
}

fn population_variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AveragingStep {
    /// The entry kept (closest to the mean, lowest index on ties).
    pub index: usize,
    pub output: Vec<f64>,
    pub variance_in: f64,
    pub variance_out: f64,
    pub halves: bool,
}

impl AveragingStep {
    pub fn ratio(&self) -> f64 {
        if self.variance_in == 0.0 {
            0.0
        } else {
            self.variance_out / self.variance_in
        }
    }
}

/// Keeps the entry nearest the mean and replaces all others by their
/// average.
pub fn averaging_step(x: &[f64]) -> Result<AveragingStep> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Precondition(format!("averaging needs at least 3 entries, got {n}")));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut index = 0;
    for i in 1..n {
        if (x[i] - mean).abs() < (x[index] - mean).abs() {
            index = i;
        }
    }
    let rest = (x.iter().sum::<f64>() - x[index]) / (n - 1) as f64;
    let output: Vec<f64> = (0..n).map(|i| if i == index { x[index] } else { rest }).collect();
    let variance_in = population_variance(x);
    let variance_out = population_variance(&output);
    let halves = variance_out <= variance_in / 2.0 + 1e-12;
    Ok(AveragingStep { index, output, variance_in, variance_out, halves })
}

/// Iterates [`averaging_step`] until all entries are within `tol` of the
/// mean; returns the final vector and the number of steps taken.
pub fn iterate_averaging(x: &[f64], tol: f64, max_steps: usize) -> Result<(Vec<f64>, usize)> {
    let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
    let mut cur = x.to_vec();
    for step in 0..=max_steps {
        if cur.iter().all(|v| (v - mean).abs() <= tol) {
            return Ok((cur, step));
        }
        if step == max_steps {
            break;
        }
        cur = averaging_step(&cur)?.output;
    }
    Err(Error::Precondition(format!("no convergence within {max_steps} steps")))
}

/// Inclusion labels `1{s ∧ a ≠ 0}` for every spectral point `s` and every
/// atom `a` of every level of a nested chain.
#[derive(Clone, Debug, Serialize)]
pub struct ExplorationLabels {
    pub levels: Vec<Vec<Elem>>,
    /// `labels[s][level][node]`.
    pub labels: Vec<Vec<Vec<bool>>>,
}

impl ExplorationLabels {
    /// `|Γ_n(s)|`: included atoms at level `n`.
    pub fn included(&self, s: Elem, level: usize) -> usize {
        self.labels[s.index()][level].iter().filter(|&&b| b).count()
    }

    /// Children of node `i` at `level`: atoms of the next level below it.
    pub fn children(&self, level: usize, i: usize) -> Vec<usize> {
        let a = self.levels[level][i];
        self.levels
            .get(level + 1)
            .map(|next| (0..next.len()).filter(|&j| a.contains(next[j])).collect())
            .unwrap_or_default()
    }

    /// A node is excluded iff all its children are.
    pub fn monotone_exclusion_holds(&self) -> bool {
        self.labels.iter().all(|per_level| {
            (0..self.levels.len().saturating_sub(1)).all(|k| {
                (0..self.levels[k].len()).all(|i| {
                    let any_child = self.children(k, i).iter().any(|&j| per_level[k + 1][j]);
                    per_level[k][i] == any_child
                })
            })
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Exploration {
    pub labels: ExplorationLabels,
    /// Per level, the `ν`-law of the number of included atoms.
    pub included_law: Vec<Vec<f64>>,
    /// Whether `|Γ_n(s)| = K_{b_n}(s)` everywhere.
    pub counts_match: bool,
}

/// Checks that each level is a partition of unity refined by the next and
/// that the last level consists of the atoms of the algebra.
fn check_chain(res: &SpectralResolution, chain: &[Vec<Elem>]) -> Result<()> {
    let algebra = res.algebra();
    for (k, level) in chain.iter().enumerate() {
        if !algebra.is_partition_of_unity(level) {
            return Err(Error::NotNested(format!("level {k} is not a partition of unity")));
        }
        if let Some(next) = chain.get(k + 1) {
            if !next.iter().all(|c| level.iter().any(|a| a.contains(*c))) {
                return Err(Error::NotNested(format!("level {} does not refine level {k}", k + 1)));
            }
        }
    }
    match chain.last() {
        Some(last) if last.len() == algebra.n_atoms() => Ok(()),
        _ => Err(Error::NotNested("last level must be the atoms of the algebra".into())),
    }
}

pub fn exploration(res: &SpectralResolution, chain: &[Vec<Elem>], nu: &SpectralProbability) -> Result<Exploration> {
    check_chain(res, chain)?;
    if nu.masses().len() != res.algebra().len() {
        return Err(Error::SpaceMismatch { expected: res.algebra().len(), found: nu.masses().len() });
    }
    let labels: Vec<Vec<Vec<bool>>> = res
        .points()
        .map(|s| chain.iter().map(|level| level.iter().map(|a| !a.meet(s).is_zero()).collect()).collect())
        .collect();
    let labels = ExplorationLabels { levels: chain.to_vec(), labels };
    let counts_match =
        res.points().all(|s| (0..chain.len()).all(|k| labels.included(s, k) == counting_in(&chain[k], s)));
    let included_law = (0..chain.len())
        .map(|k| {
            let mut law = vec![0.0; chain[k].len() + 1];
            for s in res.points() {
                law[labels.included(s, k)] += nu.mass(s);
            }
            law
        })
        .collect();
    Ok(Exploration { labels, included_law, counts_match })
}

/// For one level: the largest deviation from independence of the inclusion
/// indicators under `ν`, and the product of the exclusion probabilities.
pub fn level_independence(res: &SpectralResolution, level: &[Elem], nu: &SpectralProbability) -> (f64, f64) {
    let excl: Vec<f64> = level
        .iter()
        .map(|a| res.points().filter(|s| s.meet(*a).is_zero()).map(|s| nu.mass(s)).sum())
        .collect();
    let mut worst: f64 = 0.0;
    for pattern in 0u32..(1u32 << level.len()) {
        let joint: f64 = res
            .points()
            .filter(|s| (0..level.len()).all(|i| (pattern >> i & 1 == 1) == !s.meet(level[i]).is_zero()))
            .map(|s| nu.mass(s))
            .sum();
        let prod: f64 = (0..level.len()).map(|i| if pattern >> i & 1 == 1 { 1.0 - excl[i] } else { excl[i] }).product();
        worst = worst.max((joint - prod).abs());
    }
    (worst, excl.iter().product())
}
