//! Desk-scale generators: independent signs, the pair-product algebra and
//! its variant with an extra tail sign, the hierarchical voter model,
//! split words and reverse filtrations with innovations.
//!
//! A [`Scenario`] round-trips through JSON of the form
//!
//! ```json
//! {"probs": [...], "fields": {"x": [[0, 1], [2, 3]]}, "rvs": {"f": [...]},
//!  "algebra": {"atoms": ["x", ...]}, "chain": [["root"], ["x", ...]]}
//! ```
//!
//! with optional `generator` and `outcomes` entries.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noisebool::{generated, Elem, NoiseBooleanAlgebra};
use crate::probspace::{FiniteProbabilitySpace, RandomVariable, SigmaField, DEFAULT_OUTCOME_CAP};
use crate::spectral::SpectralResolution;

/// Largest number of signs a sign-based generator accepts.
pub const MAX_SIGNS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub generator: Option<GeneratorSpec>,
    pub space: FiniteProbabilitySpace,
    pub fields: BTreeMap<String, SigmaField>,
    pub rvs: BTreeMap<String, RandomVariable>,
    pub atoms: Vec<String>,
    /// Atom names of each level of a nested chain, coarsest first.
    pub chain: Option<Vec<Vec<String>>>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraFile {
    atoms: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcomes: Option<Vec<String>>,
    probs: Vec<f64>,
    #[serde(default)]
    fields: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default)]
    rvs: BTreeMap<String, Vec<f64>>,
    algebra: AlgebraFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chain: Option<Vec<Vec<String>>>,
}

impl Scenario {
    pub fn algebra(&self) -> Result<NoiseBooleanAlgebra> {
        let atoms: Vec<SigmaField> = self.atoms.iter().map(|a| self.field(a).cloned()).collect::<Result<_>>()?;
        NoiseBooleanAlgebra::from_independency(&self.space, &atoms)
    }

    pub fn field(&self, name: &str) -> Result<&SigmaField> {
        self.fields.get(name).ok_or_else(|| Error::Format(format!("unknown field {name:?}")))
    }

    pub fn rv(&self, name: &str) -> Result<&RandomVariable> {
        self.rvs.get(name).ok_or_else(|| Error::Format(format!("unknown random variable {name:?}")))
    }

    /// Element of `algebra` for a named field.
    pub fn elem(&self, algebra: &NoiseBooleanAlgebra, name: &str) -> Result<Elem> {
        algebra.elem(self.field(name)?)
    }

    /// The chain as lists of elements of `algebra`.
    pub fn chain_elems(&self, algebra: &NoiseBooleanAlgebra) -> Result<Option<Vec<Vec<Elem>>>> {
        let Some(chain) = &self.chain else { return Ok(None) };
        chain
            .iter()
            .map(|level| level.iter().map(|n| self.elem(algebra, n)).collect())
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn validate(&self) -> Result<()> {
        for f in self.fields.values() {
            self.space.check_field(f)?;
        }
        for f in self.rvs.values() {
            self.space.check_rv(f)?;
        }
        for a in &self.atoms {
            self.field(a)?;
        }
        for level in self.chain.iter().flatten() {
            for a in level {
                self.field(a)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ScenarioFile {
            generator: self.generator.clone(),
            outcomes: Some(self.space.labels().to_vec()),
            probs: self.space.probs().to_vec(),
            fields: self.fields.iter().map(|(k, f)| (k.clone(), f.blocks())).collect(),
            rvs: self.rvs.iter().map(|(k, f)| (k.clone(), f.values().to_vec())).collect(),
            algebra: AlgebraFile { atoms: self.atoms.clone() },
            chain: self.chain.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let n = file.probs.len();
        if n > DEFAULT_OUTCOME_CAP {
            return Err(Error::CapExceeded { count: n, cap: DEFAULT_OUTCOME_CAP });
        }
        let space = match file.outcomes {
            Some(labels) => FiniteProbabilitySpace::with_labels(labels, file.probs)?,
            None => FiniteProbabilitySpace::new(file.probs)?,
        };
        let fields = file
            .fields
            .into_iter()
            .map(|(k, blocks)| Ok((k, SigmaField::from_blocks(n, &blocks)?)))
            .collect::<Result<_>>()?;
        let rvs = file.rvs.into_iter().map(|(k, v)| (k, RandomVariable::new(v))).collect();
        let scenario =
            Scenario { generator: file.generator, space, fields, rvs, atoms: file.algebra.atoms, chain: file.chain };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Uniform space on `{−1,1}^n` with the coordinate signs. Outcome labels
/// list the signs left to right.
pub fn sign_space(n: usize) -> Result<(FiniteProbabilitySpace, Vec<RandomVariable>)> {
    if n > 16 {
        return Err(Error::CapExceeded { count: n, cap: 16 });
    }
    let size = 1usize << n;
    let bit = |w: usize, i: usize| w >> (n - 1 - i) & 1 == 1;
    let labels = (0..size).map(|w| (0..n).map(|i| if bit(w, i) { '-' } else { '+' }).collect()).collect();
    let space = FiniteProbabilitySpace::with_labels(labels, vec![1.0 / size as f64; size])?;
    let signs = (0..n)
        .map(|i| RandomVariable::new((0..size).map(|w| if bit(w, i) { -1.0 } else { 1.0 }).collect()))
        .collect();
    Ok((space, signs))
}

fn spec(name: &str, params: &[(&str, usize)]) -> Option<GeneratorSpec> {
    Some(GeneratorSpec {
        name: name.into(),
        params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
    })
}

/// `n` independent fair signs with their own sigma-fields as atoms.
pub fn classical_signs(n: usize) -> Result<Scenario> {
    if !(1..=MAX_SIGNS).contains(&n) {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    let (space, xi) = sign_space(n)?;
    let mut fields = BTreeMap::new();
    let mut rvs = BTreeMap::new();
    let mut atoms = Vec::new();
    for (i, x) in xi.iter().enumerate() {
        fields.insert(format!("x{}", i + 1), space.sigma_of(&[x])?);
        rvs.insert(format!("xi{}", i + 1), x.clone());
        atoms.push(format!("x{}", i + 1));
    }
    Ok(Scenario { generator: spec("signs", &[("n", n)]), space, fields, rvs, atoms, chain: None })
}

fn pair_product_scenario(n: usize, total: usize, extra_tail_sign: bool) -> Result<Scenario> {
    if !(1 <= n && n < total && total <= MAX_SIGNS) {
        return Err(Error::OutOfRange { what: "n", value: n as f64 });
    }
    let bits = total + usize::from(extra_tail_sign);
    let (space, xi) = sign_space(bits)?;
    let mut fields = BTreeMap::new();
    let mut rvs = BTreeMap::new();
    let mut atoms = Vec::new();
    for (i, x) in xi.iter().enumerate().take(total) {
        rvs.insert(format!("xi{}", i + 1), x.clone());
    }
    if extra_tail_sign {
        rvs.insert("xi_inf".into(), xi[total].clone());
    }
    for i in 0..n {
        let eta = &xi[i] * &xi[i + 1];
        fields.insert(format!("y{}", i + 1), space.sigma_of(&[&eta])?);
        rvs.insert(format!("eta{}", i + 1), eta);
        atoms.push(format!("y{}", i + 1));
    }
    let tail: Vec<&RandomVariable> = xi[n..].iter().collect();
    fields.insert("tail".into(), space.sigma_of(&tail)?);
    atoms.push("tail".into());
    let name = if extra_tail_sign { "tweaked" } else { "nonclassical" };
    Ok(Scenario { generator: spec(name, &[("n", n), ("N", total)]), space, fields, rvs, atoms, chain: None })
}

/// Atoms `σ(ξ_iξ_{i+1})` for `i ≤ n` and the tail `σ(ξ_{n+1}, …, ξ_N)`.
pub fn simplest_nonclassical(n: usize, total: usize) -> Result<Scenario> {
    pair_product_scenario(n, total, false)
}

/// As [`simplest_nonclassical`] with an extra sign `ξ_∞` in the tail atom.
pub fn tweaked_nonclassical(n: usize, total: usize) -> Result<Scenario> {
    pair_product_scenario(n, total, true)
}

/// The Walsh character `∏_{i∈I} ξ_i` for a bitmask `I` over the signs.
pub fn character(signs: &[RandomVariable], mask: u64) -> RandomVariable {
    let len = signs.first().map_or(1, |s| s.len());
    signs
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .fold(RandomVariable::constant(len, 1.0), |acc, (_, s)| &acc * s)
}

/// Least element of the algebra with respect to which `f` is measurable.
pub fn minimal_carrier(algebra: &NoiseBooleanAlgebra, f: &RandomVariable) -> Option<Elem> {
    let tol = algebra.space().tol();
    let carrier = algebra
        .elems()
        .filter(|&e| f.is_measurable(algebra.field(e), tol))
        .fold(algebra.top(), Elem::meet);
    f.is_measurable(algebra.field(carrier), tol).then_some(carrier)
}

/// Checks that every Walsh character of the signs lies in `H_{y_I}` for its
/// minimal carrier `y_I`. Returns the carrier of each character.
pub fn character_carriers(res: &SpectralResolution, signs: &[RandomVariable]) -> Result<Vec<(u64, Elem)>> {
    let mut out = Vec::new();
    for mask in 0..(1u64 << signs.len()) {
        let chi = character(signs, mask);
        let carrier = minimal_carrier(res.algebra(), &chi)
            .ok_or_else(|| Error::Precondition(format!("character {mask:#b} has no carrier")))?;
        let inside = res.project_points(&[carrier], &chi)?;
        if inside.max_abs_diff(&chi) > 1e-9 {
            return Err(Error::Precondition(format!("character {mask:#b} not in its carrier's space")));
        }
        out.push((mask, carrier));
    }
    Ok(out)
}

/// A symmetric election rule `X^m → X` on `X = {0, …, r−1}`, stored as a
/// table indexed by the base-`r` digits of the votes (first vote most
/// significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoterRule {
    pub m: usize,
    pub r: usize,
    pub table: Vec<usize>,
}

fn digits(mut index: usize, r: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for d in out.iter_mut().rev() {
        *d = index % r;
        index /= r;
    }
    out
}

fn undigits(d: &[usize], r: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * r + x)
}

impl VoterRule {
    /// Validates symmetry and equal fiber sizes.
    pub fn new(m: usize, r: usize, table: Vec<usize>) -> Result<Self> {
        if m < 2 || r < 2 {
            return Err(Error::InvalidRule("need m ≥ 2 and r ≥ 2".into()));
        }
        let size = r.checked_pow(m as u32).filter(|s| *s <= DEFAULT_OUTCOME_CAP).ok_or(Error::CapExceeded {
            count: usize::MAX,
            cap: DEFAULT_OUTCOME_CAP,
        })?;
        if table.len() != size || table.iter().any(|&v| v >= r) {
            return Err(Error::InvalidRule(format!("table must have {size} entries in 0..{r}")));
        }
        for i in 0..size {
            let mut d = digits(i, r, m);
            d.sort_unstable();
            if table[undigits(&d, r)] != table[i] {
                return Err(Error::InvalidRule(format!("not symmetric at votes {:?}", digits(i, r, m))));
            }
        }
        let mut fibers = vec![0; r];
        table.iter().for_each(|&v| fibers[v] += 1);
        if fibers.iter().any(|&c| c != size / r) {
            return Err(Error::InvalidRule(format!("unequal fiber sizes {fibers:?}")));
        }
        Ok(Self { m, r, table })
    }

    /// Majority of `m` (odd) binary votes.
    pub fn majority(m: usize) -> Result<Self> {
        if m.is_multiple_of(2) {
            return Err(Error::InvalidRule("majority needs an odd number of voters".into()));
        }
        let table = (0..1usize << m).map(|i| usize::from(2 * i.count_ones() as usize > m)).collect();
        Self::new(m, 2, table)
    }

    pub fn apply(&self, votes: &[usize]) -> usize {
        self.table[undigits(votes, self.r)]
    }
}

/// Whether `f(rule(a)) = Σ g(a_i)` forces `f` constant: every vector in
/// the null space of the linear system has constant `f` part.
pub fn rigidity_check(rule: &VoterRule) -> bool {
    let (m, r) = (rule.m, rule.r);
    let rows = rule.table.len();
    let mut a = DMatrix::<f64>::zeros(rows, 2 * r);
    for i in 0..rows {
        a[(i, rule.table[i])] += 1.0;
        for d in digits(i, r, m) {
            a[(i, r + d)] -= 1.0;
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= 1e-10 * smax.max(1.0))
        .all(|k| {
            let f: Vec<f64> = (0..r).map(|j| vt[(k, j)]).collect();
            let mean = f.iter().sum::<f64>() / r as f64;
            f.iter().all(|v| (v - mean).abs() < 1e-9)
        })
}

/// Probability that a given voter is pivotal when the others vote
/// uniformly at random.
pub fn influential_vote_probability(rule: &VoterRule) -> f64 {
    let (m, r) = (rule.m, rule.r);
    let others = r.pow(m as u32 - 1);
    let pivotal = (0..others)
        .filter(|&o| {
            let rest = digits(o, r, m - 1);
            let outcomes: Vec<usize> = (0..r)
                .map(|x| {
                    let mut v = vec![x];
                    v.extend_from_slice(&rest);
                    rule.apply(&v)
                })
                .collect();
            outcomes.iter().any(|&y| y != outcomes[0])
        })
        .count();
    pivotal as f64 / others as f64
}

/// Leaves at `depth` vote uniformly; every inner node takes the rule of its
/// children. Node `j` of level `k` generates `n{k}_{j}` (the votes of the
/// leaves below it); the chain lists the levels `0..=depth`.
pub fn voter_model(rule: &VoterRule, depth: usize) -> Result<Scenario> {
    let (m, r) = (rule.m, rule.r);
    let leaves = m.checked_pow(depth as u32).ok_or(Error::CapExceeded { count: usize::MAX, cap: DEFAULT_OUTCOME_CAP })?;
    let size = r
        .checked_pow(leaves as u32)
        .filter(|s| *s <= DEFAULT_OUTCOME_CAP)
        .ok_or(Error::CapExceeded { count: usize::MAX, cap: DEFAULT_OUTCOME_CAP })?;
    let labels = (0..size).map(|w| digits(w, r, leaves).iter().map(|d| d.to_string()).collect()).collect();
    let space = FiniteProbabilitySpace::with_labels(labels, vec![1.0 / size as f64; size])?;
    // node values level by level, deepest first
    let mut values: Vec<Vec<Vec<usize>>> = vec![Vec::new(); depth + 1];
    values[depth] = (0..size).map(|w| digits(w, r, leaves)).collect();
    for k in (0..depth).rev() {
        values[k] = values[k + 1]
            .iter()
            .map(|below| below.chunks(m).map(|c| rule.apply(c)).collect())
            .collect();
    }
    let mut fields = BTreeMap::new();
    let mut rvs = BTreeMap::new();
    let mut chain = Vec::new();
    for k in 0..=depth {
        let width = m.pow((depth - k) as u32);
        let mut level = Vec::new();
        for j in 0..m.pow(k as u32) {
            let name = format!("n{k}_{j}");
            let keys: Vec<usize> = values[depth].iter().map(|leaf| undigits(&leaf[j * width..(j + 1) * width], r)).collect();
            fields.insert(name.clone(), SigmaField::from_labels(&keys));
            rvs.insert(format!("X{k}_{j}"), RandomVariable::new(values[k].iter().map(|v| v[j] as f64).collect()));
            level.push(name);
        }
        chain.push(level);
    }
    let root = RandomVariable::new(values[0].iter().map(|v| root_observable(v[0], r)).collect());
    rvs.insert("X_root".into(), root);
    let atoms = chain[depth].clone();
    let generator = Some(GeneratorSpec {
        name: "voter".into(),
        params: [("m", m), ("r", r), ("depth", depth)].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
    });
    Ok(Scenario { generator, space, fields, rvs, atoms, chain: Some(chain) })
}

/// Centered, unit-variance function of a uniform value in `0..r`; the
/// signs `∓1` when `r = 2`.
fn root_observable(v: usize, r: usize) -> f64 {
    let centered = v as f64 - (r as f64 - 1.0) / 2.0;
    let sd = ((r * r - 1) as f64 / 12.0).sqrt();
    centered / sd
}

/// `‖projection of X_root onto H^(1)‖²` for the leaf-level algebra,
/// computed as `Σ_leaves var(E[X_root | leaf])`.
pub fn first_chaos_decay(rule: &VoterRule, depth: usize) -> Result<f64> {
    let sc = voter_model(rule, depth)?;
    let algebra = sc.algebra()?;
    let f = sc.rv("X_root")?;
    let space = algebra.space();
    algebra.atom_elems().into_iter().try_fold(0.0, |acc, a| Ok(acc + space.variance(&algebra.cond_exp(f, a)?)))
}

/// Words of fair signs at level `depth` (length `L·2^{depth−1}`) and
/// embedding signs `σ_1..σ_{depth−1}`; `X_n(k)` is `X_{n+1}(2k−1)` when
/// `σ_n = −1` and `X_{n+1}(2k)` otherwise. Atoms are `σ(σ_i)` and the tail
/// `σ(X_depth)`.
pub fn split_words(depth: usize, word: usize) -> Result<Scenario> {
    if depth < 1 || word < 1 {
        return Err(Error::OutOfRange { what: "depth", value: depth as f64 });
    }
    let top_len = word << (depth - 1);
    let bits = top_len + depth - 1;
    if bits > 16 {
        return Err(Error::CapExceeded { count: bits, cap: 16 });
    }
    let (space, signs) = sign_space(bits)?;
    let sigma = &signs[top_len..];
    let mut fields = BTreeMap::new();
    let mut rvs = BTreeMap::new();
    let mut atoms = Vec::new();
    for (i, s) in sigma.iter().enumerate() {
        fields.insert(format!("y{}", i + 1), space.sigma_of(&[s])?);
        rvs.insert(format!("sigma{}", i + 1), s.clone());
        atoms.push(format!("y{}", i + 1));
    }
    let top: Vec<&RandomVariable> = signs[..top_len].iter().collect();
    fields.insert("tail".into(), space.sigma_of(&top)?);
    atoms.push("tail".into());
    // words[n-1][k-1] = X_n(k)
    let mut words: Vec<Vec<RandomVariable>> = vec![Vec::new(); depth];
    words[depth - 1] = signs[..top_len].to_vec();
    for n in (1..depth).rev() {
        let upper = &words[n];
        let s = sigma[n - 1].values();
        words[n - 1] = (0..upper.len() / 2)
            .map(|k| {
                let (odd, even) = (upper[2 * k].values(), upper[2 * k + 1].values());
                RandomVariable::new((0..space.len()).map(|w| if s[w] < 0.0 { odd[w] } else { even[w] }).collect())
            })
            .collect();
    }
    for (n, level) in words.iter().enumerate() {
        for (k, x) in level.iter().enumerate() {
            rvs.insert(format!("X{}_{}", n + 1, k + 1), x.clone());
        }
    }
    Ok(Scenario { generator: spec("split-words", &[("depth", depth), ("L", word)]), space, fields, rvs, atoms, chain: None })
}

/// Algebra generated by innovation sigma-fields and a tail field, each
/// given as the joint level sets of named random variables.
pub fn reverse_filtration(
    space: &FiniteProbabilitySpace,
    rvs: BTreeMap<String, RandomVariable>,
    innovations: &[Vec<String>],
    tail: &[String],
) -> Result<Scenario> {
    let sigma = |names: &[String]| -> Result<SigmaField> {
        let fs: Vec<&RandomVariable> = names
            .iter()
            .map(|n| rvs.get(n).ok_or_else(|| Error::Format(format!("unknown random variable {n:?}"))))
            .collect::<Result<_>>()?;
        space.sigma_of(&fs)
    };
    let mut fields = BTreeMap::new();
    let mut atoms = Vec::new();
    let mut parts = Vec::new();
    for (i, names) in innovations.iter().enumerate() {
        let f = sigma(names)?;
        fields.insert(format!("y{}", i + 1), f.clone());
        atoms.push(format!("y{}", i + 1));
        parts.push(f);
    }
    let t = sigma(tail)?;
    if !t.is_trivial() {
        fields.insert("tail".into(), t.clone());
        atoms.push("tail".into());
        parts.push(t);
    }
    generated(space, &parts)?;
    Ok(Scenario {
        generator: Some(GeneratorSpec { name: "reverse-filtration".into(), params: BTreeMap::new() }),
        space: space.clone(),
        fields,
        rvs,
        atoms,
        chain: None,
    })
}

/// The four-point space with `x1 = {{(1,1),(1,−1)},{(−1,1)},{(−1,−1)}}` and
/// `x2 = σ(ξ₂)`, which lie in no common noise Boolean algebra.
pub fn counterexample() -> Result<Scenario> {
    let (space, xi) = sign_space(2)?;
    let mut fields = BTreeMap::new();
    fields.insert("x1".into(), SigmaField::from_blocks(4, &[vec![0, 1], vec![2], vec![3]])?);
    fields.insert("x2".into(), space.sigma_of(&[&xi[1]])?);
    let rvs = [("xi1".to_string(), xi[0].clone()), ("xi2".to_string(), xi[1].clone())].into_iter().collect();
    Ok(Scenario {
        generator: spec("counterexample", &[]),
        space,
        fields,
        rvs,
        atoms: vec!["x1".into(), "x2".into()],
        chain: None,
    })
}

fn param(params: &BTreeMap<String, String>, key: &str, default: Option<usize>) -> Result<usize> {
    match params.get(key) {
        Some(v) => v.parse().map_err(|_| Error::Format(format!("parameter {key}={v:?} is not an integer"))),
        None => default.ok_or_else(|| Error::Format(format!("missing parameter {key}"))),
    }
}

/// Builds a scenario from a generator name and string parameters.
pub fn from_generator(name: &str, params: &BTreeMap<String, String>) -> Result<Scenario> {
    match name {
        "signs" => classical_signs(param(params, "n", None)?),
        "nonclassical" => simplest_nonclassical(param(params, "n", None)?, param(params, "N", None)?),
        "tweaked" => tweaked_nonclassical(param(params, "n", None)?, param(params, "N", None)?),
        "voter" => {
            let rule = VoterRule::majority(param(params, "m", Some(3))?)?;
            voter_model(&rule, param(params, "depth", Some(1))?)
        }
        "split-words" => split_words(param(params, "depth", None)?, param(params, "L", Some(1))?),
        "counterexample" => counterexample(),
        other => Err(Error::Format(format!("unknown generator {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_chaos_dims() {
        let sc = classical_signs(3).unwrap();
        let res = SpectralResolution::resolve(&sc.algebra().unwrap()).unwrap();
        let dims: Vec<usize> = (0..=3).map(|k| res.chaos_space(k).len()).collect();
        assert_eq!(dims, vec![1, 3, 3, 1]);
        assert_eq!(classical_signs(1).unwrap().algebra().unwrap().len(), 2);
        assert!(classical_signs(0).is_err());
    }

    #[test]
    fn pair_product_atoms() {
        let sc = simplest_nonclassical(2, 3).unwrap();
        let b = sc.algebra().unwrap();
        let res = SpectralResolution::resolve(&b).unwrap();
        assert_eq!(res.dims().iter().sum::<usize>(), 8);
        let y1 = sc.elem(&b, "y1").unwrap();
        assert_eq!(res.dim(y1), 1);
        let eta = sc.rv("eta1").unwrap();
        assert!(res.project_points(&[y1], eta).unwrap().max_abs_diff(eta) < 1e-12);
        let signs: Vec<RandomVariable> = (1..=3).map(|i| sc.rv(&format!("xi{i}")).unwrap().clone()).collect();
        assert_eq!(character_carriers(&res, &signs).unwrap().len(), 8);
        assert_eq!(res.chaos_space(1).len(), 2 + (1 << 1) - 1);
    }

    #[test]
    fn tweaked_tail_carries_extra_sign() {
        let sc = tweaked_nonclassical(1, 2).unwrap();
        let b = sc.algebra().unwrap();
        let res = SpectralResolution::resolve(&b).unwrap();
        let tail = sc.elem(&b, "tail").unwrap();
        let xi2 = sc.rv("xi2").unwrap();
        let xinf = sc.rv("xi_inf").unwrap();
        for f in [xi2.clone(), xinf.clone(), xi2 * xinf] {
            assert!(res.project_points(&[tail], &f).unwrap().max_abs_diff(&f) < 1e-12);
        }
    }

    #[test]
    fn majority_rule_facts() {
        let rule = VoterRule::majority(3).unwrap();
        assert!(rigidity_check(&rule));
        assert_eq!(influential_vote_probability(&rule), 0.5);
        assert!((first_chaos_decay(&rule, 1).unwrap() - 0.75).abs() < 1e-12);
        let parity = VoterRule::new(3, 2, (0..8usize).map(|i| i.count_ones() as usize % 2).collect()).unwrap();
        assert!(rigidity_check(&parity));
        assert_eq!(influential_vote_probability(&parity), 1.0);
        assert!(VoterRule::new(2, 2, vec![0, 1, 0, 1]).is_err());
    }

    #[test]
    fn split_words_shape() {
        let sc = split_words(3, 1).unwrap();
        assert_eq!(sc.space.len(), 64);
        assert_eq!(sc.atoms, vec!["y1", "y2", "tail"]);
        let x = sc.rv("X1_1").unwrap();
        assert!((sc.space.norm_sq(x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let sc = voter_model(&VoterRule::majority(3).unwrap(), 1).unwrap();
        let text = sc.to_json().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert!(matches!(Scenario::from_json("{"), Err(Error::Format(_))));
    }

    #[test]
    fn reverse_filtration_reproduces_pair_products() {
        let (space, xi) = sign_space(3).unwrap();
        let mut rvs = BTreeMap::new();
        for (i, x) in xi.iter().enumerate() {
            rvs.insert(format!("xi{}", i + 1), x.clone());
        }
        rvs.insert("eta1".into(), &xi[0] * &xi[1]);
        let sc = reverse_filtration(&space, rvs, &[vec!["eta1".into()]], &["xi2".into(), "xi3".into()]).unwrap();
        let reference = simplest_nonclassical(1, 3).unwrap();
        let mut a: Vec<SigmaField> = sc.algebra().unwrap().fields().to_vec();
        let mut b: Vec<SigmaField> = reference.algebra().unwrap().fields().to_vec();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
