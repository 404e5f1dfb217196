//! Finite noise Boolean algebras.
//!
//! A finite noise Boolean algebra is generated by its atoms, which form a
//! partition of unity (an independency of nontrivial sigma-fields joining to
//! `1_P`). Elements are therefore addressed by bitmasks over the atoms:
//! join is bitwise or, meet is bitwise and, the complement flips all bits.
//! [`verify_axioms`] checks the axioms directly on arbitrary families of
//! sigma-fields without assuming that structure.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probspace::{FiniteProbabilitySpace, RandomVariable, SigmaField};

/// Default cap on the number of atoms.
pub const DEFAULT_ATOM_CAP: usize = 12;

/// An element of a finite noise Boolean algebra, as the set of atoms below
/// it.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Elem(pub u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);

    pub fn atom(i: usize) -> Elem {
        Elem(1 << i)
    }

    pub fn join(self, other: Elem) -> Elem {
        Elem(self.0 | other.0)
    }

    pub fn meet(self, other: Elem) -> Elem {
        Elem(self.0 & other.0)
    }

    /// `other ⊆ self`.
    pub fn contains(self, other: Elem) -> bool {
        other.0 & !self.0 == 0
    }

    /// Number of atoms below the element (the counting map).
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Indices of the atoms below the element.
    pub fn atom_indices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// All elements below `self` (including zero and `self`).
    pub fn subsets(self) -> impl Iterator<Item = Elem> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some(((cur | !full).wrapping_add(1)) & full) };
            Some(Elem(cur))
        })
    }
}

/// A finite noise Boolean algebra on a finite probability space.
#[derive(Clone, Debug)]
pub struct NoiseBooleanAlgebra {
    space: FiniteProbabilitySpace,
    atoms: Vec<SigmaField>,
    elements: Vec<SigmaField>,
    index: HashMap<SigmaField, Elem>,
}

impl NoiseBooleanAlgebra {
    /// The classical algebra of all joins of a generating independency.
    pub fn from_independency(space: &FiniteProbabilitySpace, xs: &[SigmaField]) -> Result<Self> {
        Self::from_independency_capped(space, xs, DEFAULT_ATOM_CAP)
    }

    pub fn from_independency_capped(space: &FiniteProbabilitySpace, xs: &[SigmaField], cap: usize) -> Result<Self> {
        if xs.len() > cap || xs.len() > 30 {
            return Err(Error::CapExceeded { count: xs.len(), cap });
        }
        for x in xs {
            space.check_field(x)?;
            if x.is_trivial() {
                return Err(Error::TrivialGenerator);
            }
        }
        let refs: Vec<&SigmaField> = xs.iter().collect();
        if !space.are_independent(&refs)? {
            return Err(Error::NotIndependent);
        }
        let n = xs.len();
        let mut elements = Vec::with_capacity(1 << n);
        elements.push(space.trivial());
        for mask in 1u32..(1u32 << n) {
            let low = mask.trailing_zeros() as usize;
            let rest = (mask & (mask - 1)) as usize;
            let e = elements[rest].join(&xs[low])?;
            elements.push(e);
        }
        if !elements.last().expect("nonempty").is_full() {
            return Err(Error::NotGenerating);
        }
        let index = elements.iter().enumerate().map(|(m, f)| (f.clone(), Elem(m as u32))).collect();
        Ok(Self { space: space.clone(), atoms: xs.to_vec(), elements, index })
    }

    /// Builds the algebra from an extensional family of sigma-fields,
    /// after checking the axioms and that the family is exactly the set of
    /// joins of its atoms.
    pub fn from_fields(space: &FiniteProbabilitySpace, fields: &[SigmaField]) -> Result<Self> {
        let report = verify_axioms(space, fields);
        if !report.passes() {
            return Err(Error::AxiomFailure(report.summary()));
        }
        let set = report.fields;
        let nonzero: Vec<&SigmaField> = set.iter().filter(|f| !f.is_trivial()).collect();
        let atoms: Vec<SigmaField> = nonzero
            .iter()
            .filter(|a| !nonzero.iter().any(|b| b != *a && b.is_subfield_of(a)))
            .map(|a| (*a).clone())
            .collect();
        let algebra = Self::from_independency_capped(space, &atoms, DEFAULT_ATOM_CAP)?;
        if algebra.len() != set.len() || set.iter().any(|f| algebra.index_of(f).is_none()) {
            return Err(Error::AxiomFailure("family is not the set of joins of its atoms".into()));
        }
        Ok(algebra)
    }

    pub fn space(&self) -> &FiniteProbabilitySpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[SigmaField] {
        &self.atoms
    }

    pub fn atom_elems(&self) -> Vec<Elem> {
        (0..self.atoms.len()).map(Elem::atom).collect()
    }

    pub fn top(&self) -> Elem {
        Elem((self.elements.len() - 1) as u32)
    }

    pub fn bottom(&self) -> Elem {
        Elem::ZERO
    }

    pub fn is_degenerate(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All elements in mask order.
    pub fn elems(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.elements.len() as u32).map(Elem)
    }

    /// Elements in increasing refinement order (by number of atoms, then
    /// mask).
    pub fn elems_by_rank(&self) -> Vec<Elem> {
        let mut v: Vec<Elem> = self.elems().collect();
        v.sort_by_key(|e| (e.count(), e.0));
        v
    }

    pub fn field(&self, e: Elem) -> &SigmaField {
        &self.elements[e.index()]
    }

    pub fn fields(&self) -> &[SigmaField] {
        &self.elements
    }

    pub fn index_of(&self, x: &SigmaField) -> Option<Elem> {
        self.index.get(x).copied()
    }

    pub fn elem(&self, x: &SigmaField) -> Result<Elem> {
        self.index_of(x).ok_or(Error::NotAnElement)
    }

    pub fn complement_elem(&self, e: Elem) -> Elem {
        Elem(self.top().0 ^ e.0)
    }

    /// The unique independent complement of `x` in the algebra.
    pub fn complement(&self, x: &SigmaField) -> Result<SigmaField> {
        let e = self.elem(x)?;
        Ok(self.field(self.complement_elem(e)).clone())
    }

    pub fn cond_exp(&self, f: &RandomVariable, e: Elem) -> Result<RandomVariable> {
        self.space.cond_exp(f, self.field(e))
    }

    /// Every partition of unity: all groupings of the atoms into disjoint
    /// nonempty joins. The degenerate algebra has exactly one, the empty
    /// partition.
    pub fn partitions_of_unity(&self) -> Vec<Vec<Elem>> {
        set_partitions(self.atoms.len())
            .into_iter()
            .map(|groups| groups.into_iter().map(|g| Elem(g.iter().fold(0, |m, &i| m | 1 << i))).collect())
            .collect()
    }

    /// Whether `parts` is a partition of unity of this algebra.
    pub fn is_partition_of_unity(&self, parts: &[Elem]) -> bool {
        let mut acc = 0u32;
        for p in parts {
            if p.is_zero() || p.0 & acc != 0 || p.0 > self.top().0 {
                return false;
            }
            acc |= p.0;
        }
        acc == self.top().0
    }

    /// Atoms of the Boolean subalgebra generated by `xs` inside this
    /// algebra (the complement of the join is adjoined automatically).
    pub fn generated_subalgebra(&self, xs: &[Elem]) -> Vec<Elem> {
        let mut cells: Vec<(u64, u32)> = Vec::new();
        for i in 0..self.atoms.len() {
            let signature = xs.iter().enumerate().fold(0u64, |s, (j, x)| s | ((x.0 >> i & 1) as u64) << j);
            match cells.iter_mut().find(|(sig, _)| *sig == signature) {
                Some((_, mask)) => *mask |= 1 << i,
                None => cells.push((signature, 1 << i)),
            }
        }
        let mut atoms: Vec<Elem> = cells.into_iter().map(|(_, m)| Elem(m)).collect();
        atoms.sort();
        atoms
    }

    /// `B_x = {y ∈ B : y ⊆ x}` realized on the quotient space whose
    /// outcomes are the blocks of `x`.
    pub fn subalgebra(&self, x: &SigmaField) -> Result<Subalgebra> {
        let e = self.elem(x)?;
        let probs = self.space.block_probs(x);
        let labels = (0..probs.len()).map(|b| format!("b{b}")).collect();
        let quotient = FiniteProbabilitySpace::with_labels(labels, probs)?.with_tolerance(self.space.tol());
        let reps: Vec<usize> = x.blocks().iter().map(|b| b[0]).collect();
        let parent_atoms: Vec<usize> = e.atom_indices().collect();
        let atoms: Vec<SigmaField> = parent_atoms
            .iter()
            .map(|&i| SigmaField::from_labels(&reps.iter().map(|&w| self.atoms[i].labels()[w]).collect::<Vec<_>>()))
            .collect();
        let algebra = Self::from_independency(&quotient, &atoms)?;
        Ok(Subalgebra { algebra, parent_atoms, element: e, blocks: x.labels().to_vec() })
    }
}

/// A subalgebra `B_x` on its quotient space, with the maps back to the
/// parent algebra.
#[derive(Clone, Debug)]
pub struct Subalgebra {
    pub algebra: NoiseBooleanAlgebra,
    /// Parent atom index of each atom of the subalgebra.
    pub parent_atoms: Vec<usize>,
    pub element: Elem,
    blocks: Vec<u32>,
}

impl Subalgebra {
    pub fn parent_elem(&self, e: Elem) -> Elem {
        Elem(e.atom_indices().fold(0, |m, i| m | 1 << self.parent_atoms[i]))
    }

    /// Pulls a function on the quotient back to the parent space.
    pub fn lift(&self, f: &RandomVariable) -> RandomVariable {
        RandomVariable::new(self.blocks.iter().map(|&b| f.values()[b as usize]).collect())
    }
}

/// The algebra generated by a partition of unity `parts`.
pub fn generated(space: &FiniteProbabilitySpace, parts: &[SigmaField]) -> Result<NoiseBooleanAlgebra> {
    let refs: Vec<&SigmaField> = parts.iter().collect();
    if !space.are_independent(&refs)? {
        return Err(Error::NotIndependent);
    }
    if !SigmaField::join_all(space.len(), parts)?.is_full() {
        return Err(Error::NoCompletion);
    }
    NoiseBooleanAlgebra::from_independency(space, parts)
}

/// As [`generated`], completing the independency with a supplied
/// complement of its join.
pub fn generated_with_complement(
    space: &FiniteProbabilitySpace,
    parts: &[SigmaField],
    complement: &SigmaField,
) -> Result<NoiseBooleanAlgebra> {
    let mut all = parts.to_vec();
    if !complement.is_trivial() {
        all.push(complement.clone());
    }
    generated(space, &all)
}

/// Restricted-growth enumeration of the set partitions of `{0..n}`.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, n: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for g in 0..current.len() {
            current[g].push(i);
            rec(i + 1, n, current, out);
            current[g].pop();
        }
        current.push(vec![i]);
        rec(i + 1, n, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// One failed axiom with the indices (into [`VerificationReport::fields`])
/// of the sigma-fields witnessing it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomFailure {
    pub axiom: String,
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    /// The checked family, deduplicated and canonically ordered.
    #[serde(skip)]
    pub fields: Vec<SigmaField>,
    pub failures: Vec<AxiomFailure>,
}

impl VerificationReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut names: Vec<&str> = self.failures.iter().map(|f| f.axiom.as_str()).collect();
        names.dedup();
        names.join(", ")
    }

    pub fn failed_axioms(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.failures.iter().map(|f| f.axiom.as_str()).collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Checks the noise Boolean algebra axioms on a family of sigma-fields:
/// the bounds, closure under join and meet, existence and uniqueness of an
/// independent complement, and distributivity. Failures are collected with
/// witnesses rather than returned as errors.
pub fn verify_axioms(space: &FiniteProbabilitySpace, fields: &[SigmaField]) -> VerificationReport {
    let mut set: Vec<SigmaField> = fields.to_vec();
    set.sort();
    set.dedup();
    let mut failures = Vec::new();
    if let Some(i) = set.iter().position(|f| f.len() != space.len()) {
        failures.push(AxiomFailure { axiom: "space".into(), witnesses: vec![i] });
        return VerificationReport { fields: set, failures };
    }
    let lookup: HashMap<&SigmaField, usize> = set.iter().enumerate().map(|(i, f)| (f, i)).collect();
    if !lookup.contains_key(&space.trivial()) {
        failures.push(AxiomFailure { axiom: "contains-zero".into(), witnesses: vec![] });
    }
    if !lookup.contains_key(&space.full()) {
        failures.push(AxiomFailure { axiom: "contains-one".into(), witnesses: vec![] });
    }
    let n = set.len();
    let mut meets = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let join = set[i].join(&set[j]).expect("same space");
            if !lookup.contains_key(&join) {
                failures.push(AxiomFailure { axiom: "closure-join".into(), witnesses: vec![i, j] });
            }
            let meet = set[i].meet(&set[j]).expect("same space");
            if !lookup.contains_key(&meet) {
                failures.push(AxiomFailure { axiom: "closure-meet".into(), witnesses: vec![i, j] });
            }
            meets[i][j] = lookup.get(&meet).copied();
            meets[j][i] = meets[i][j];
        }
    }
    let full = space.full();
    let mut complements = vec![None; n];
    for i in 0..n {
        let candidates: Vec<usize> = (0..n)
            .filter(|&j| {
                set[i].join(&set[j]).expect("same space") == full
                    && space.are_independent(&[&set[i], &set[j]]).expect("same space")
            })
            .collect();
        match candidates.as_slice() {
            [j] => complements[i] = Some(*j),
            [] => failures.push(AxiomFailure { axiom: "complement-existence".into(), witnesses: vec![i] }),
            many => {
                let mut w = vec![i];
                w.extend_from_slice(many);
                failures.push(AxiomFailure { axiom: "complement-uniqueness".into(), witnesses: w });
            }
        }
    }
    for x in 0..n {
        let Some(xc) = complements[x] else { continue };
        for y in 0..n {
            let distributes = match (meets[y][x], meets[y][xc]) {
                (Some(a), Some(b)) => set[a].join(&set[b]).expect("same space") == set[y],
                _ => {
                    let a = set[y].meet(&set[x]).expect("same space");
                    let b = set[y].meet(&set[xc]).expect("same space");
                    a.join(&b).expect("same space") == set[y]
                }
            };
            if !distributes {
                failures.push(AxiomFailure { axiom: "distributivity".into(), witnesses: vec![x, y] });
            }
        }
    }
    VerificationReport { fields: set, failures }
}

/// Closure of a family under join and meet, together with `0_P` and `1_P`.
pub fn lattice_closure(space: &FiniteProbabilitySpace, fields: &[SigmaField], limit: usize) -> Result<Vec<SigmaField>> {
    let mut set: Vec<SigmaField> = fields.to_vec();
    set.push(space.trivial());
    set.push(space.full());
    set.sort();
    set.dedup();
    loop {
        let mut added = Vec::new();
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                for f in [set[i].join(&set[j])?, set[i].meet(&set[j])?] {
                    if set.binary_search(&f).is_err() && !added.contains(&f) {
                        added.push(f);
                    }
                }
            }
        }
        if added.is_empty() {
            return Ok(set);
        }
        set.extend(added);
        set.sort();
        if set.len() > limit {
            return Err(Error::CapExceeded { count: set.len(), cap: limit });
        }
    }
}
