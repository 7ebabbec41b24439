//! NPA moment relaxation for Bell scenarios with dichotomic observables.
//!
//! Operators of different parties commute and every operator squares to the
//! identity. Moments are taken real, so `⟨w⟩` and `⟨w reversed⟩` share a
//! class. The perfect-correlation premise of the key rounds pins moment
//! classes to one; rows that are then forced equal are merged before the SDP
//! is assembled, which keeps the reduced moment matrix strictly feasible.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mabk::{mabk_explicit, BellExpression};
use crate::sdp::{check_certificate, solve, CertificateCheck, SdpProblem, SdpSolution, SymSparse};

/// Dichotomic operator `input` of `party`; party 0 is Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperatorLetter {
    pub party: u8,
    pub input: u8,
}

impl OperatorLetter {
    pub fn new(party: u8, input: u8) -> Self {
        Self { party, input }
    }
}

impl fmt::Display for OperatorLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.party == 0 {
            write!(f, "A{}", self.input)
        } else {
            write!(f, "B{}_{}", self.party, self.input)
        }
    }
}

/// Canonical operator word: party-sorted, no two equal adjacent letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(Vec<OperatorLetter>);

impl Monomial {
    pub fn identity() -> Self {
        Monomial(Vec::new())
    }

    pub fn letters(&self) -> &[OperatorLetter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Reduces a word: letters of different parties commute, `O·O = 1`.
pub fn canonicalize(word: &[OperatorLetter]) -> Monomial {
    let mut current = word.to_vec();
    loop {
        let mut sorted = current.clone();
        sorted.sort_by_key(|l| l.party);
        let mut out: Vec<OperatorLetter> = Vec::with_capacity(sorted.len());
        for l in sorted {
            if out.last() == Some(&l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        if out == current {
            return Monomial(out);
        }
        current = out;
    }
}

/// Class representative of `⟨word⟩` under the real-moment identification
/// `⟨w⟩ = ⟨w reversed⟩`.
pub fn moment_key(word: &[OperatorLetter]) -> Monomial {
    let forward = canonicalize(word);
    let mut rev = forward.0.clone();
    rev.reverse();
    let backward = canonicalize(&rev);
    forward.min(backward)
}

/// Number of inputs per party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    inputs: Vec<usize>,
}

impl Scenario {
    pub fn new(inputs: Vec<usize>) -> Result<Self> {
        if inputs.is_empty() || inputs.iter().any(|&k| k == 0 || k > u8::MAX as usize) {
            return Err(Error::InvalidArgument(format!(
                "bad input counts {inputs:?}"
            )));
        }
        if inputs.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument("too many parties".into()));
        }
        Ok(Self { inputs })
    }

    /// Alice with inputs `{0,1}`, `n - 1` Bobs with inputs `{0,1,2}`.
    pub fn conference(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPartyCount {
                n,
                reason: "the conference scenario needs at least two parties",
            });
        }
        let mut inputs = vec![2];
        inputs.extend(std::iter::repeat_n(3, n - 1));
        Self::new(inputs)
    }

    pub fn n_parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn letters(&self) -> Vec<OperatorLetter> {
        self.inputs
            .iter()
            .enumerate()
            .flat_map(|(p, &k)| (0..k).map(move |x| OperatorLetter::new(p as u8, x as u8)))
            .collect()
    }

    /// Input used in key-generation rounds: Alice 0, every Bob 2.
    pub fn key_letters(&self) -> Vec<OperatorLetter> {
        (0..self.n_parties())
            .map(|p| OperatorLetter::new(p as u8, if p == 0 { 0 } else { 2 }))
            .collect()
    }
}

/// All canonical monomials of length `≤ level`, identity first, then by
/// length, then in order of discovery over lexicographic letter words.
pub fn generate_monomials(scenario: &Scenario, level: usize) -> Vec<Monomial> {
    let letters = scenario.letters();
    let mut out = vec![Monomial::identity()];
    let mut seen: std::collections::HashSet<Monomial> = out.iter().cloned().collect();
    let mut frontier: Vec<Vec<OperatorLetter>> = vec![Vec::new()];
    for len in 1..=level {
        let mut next = Vec::new();
        for word in &frontier {
            for &l in &letters {
                let mut w = word.clone();
                w.push(l);
                let c = canonicalize(&w);
                if c.len() == len {
                    next.push(c.0.clone());
                    if seen.insert(c.clone()) {
                        out.push(c);
                    }
                }
            }
        }
        next.sort();
        next.dedup();
        frontier = next;
    }
    out
}

/// Moment matrix indexed by a monomial basis, entry `(u, v)` holding the
/// class of `⟨u† v⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrixStructure {
    basis: Vec<Monomial>,
    class_of: Vec<usize>,
    representatives: Vec<Monomial>,
    lookup: HashMap<Monomial, usize>,
}

impl MomentMatrixStructure {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn class(&self, row: usize, col: usize) -> usize {
        self.class_of[row * self.basis.len() + col]
    }

    pub fn n_classes(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[Monomial] {
        &self.representatives
    }

    /// Class id of `⟨word⟩`, if it occurs in the matrix.
    pub fn class_of_word(&self, word: &[OperatorLetter]) -> Option<usize> {
        self.lookup.get(&moment_key(word)).copied()
    }

    pub fn identity_class(&self) -> usize {
        self.lookup[&Monomial::identity()]
    }
}

pub fn build_moment_structure(monomials: &[Monomial]) -> Result<MomentMatrixStructure> {
    if !monomials.iter().any(Monomial::is_identity) {
        return Err(Error::InvalidArgument(
            "monomial basis must contain the identity".into(),
        ));
    }
    let d = monomials.len();
    let mut lookup = HashMap::new();
    let mut representatives = Vec::new();
    let mut class_of = vec![0; d * d];
    for (i, u) in monomials.iter().enumerate() {
        let mut u_dag = u.0.clone();
        u_dag.reverse();
        for (j, v) in monomials.iter().enumerate() {
            let mut word = u_dag.clone();
            word.extend_from_slice(&v.0);
            let key = moment_key(&word);
            let id = *lookup.entry(key.clone()).or_insert_with(|| {
                representatives.push(key);
                representatives.len() - 1
            });
            class_of[i * d + j] = id;
        }
    }
    Ok(MomentMatrixStructure {
        basis: monomials.to_vec(),
        class_of,
        representatives,
        lookup,
    })
}

/// Linear functional `Σ coeff · ⟨class⟩` over moment classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentFunctional {
    pub coeffs: Vec<(usize, f64)>,
}

impl MomentFunctional {
    pub fn evaluate(&self, class_value: impl Fn(usize) -> f64) -> f64 {
        self.coeffs.iter().map(|&(c, v)| v * class_value(c)).sum()
    }

    pub fn negated(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&(c, v)| (c, -v)).collect(),
        }
    }
}

/// Maps a Bell expression onto moment classes; party `i` with input `x_i`
/// becomes the letter `(i, x_i)`.
pub fn encode_objective(
    expr: &BellExpression,
    structure: &MomentMatrixStructure,
) -> Result<MomentFunctional> {
    let mut coeffs: Vec<(usize, f64)> = Vec::new();
    for t in expr.terms() {
        let word: Vec<OperatorLetter> = t
            .inputs
            .iter()
            .enumerate()
            .map(|(p, &x)| OperatorLetter::new(p as u8, x))
            .collect();
        let class = structure
            .class_of_word(&word)
            .ok_or_else(|| Error::MissingMonomial(canonicalize(&word).to_string()))?;
        match coeffs.iter_mut().find(|(c, _)| *c == class) {
            Some(entry) => entry.1 += t.coefficient.to_f64(),
            None => coeffs.push((class, t.coefficient.to_f64())),
        }
    }
    Ok(MomentFunctional { coeffs })
}

/// `tr(𝒞ρ) = 1` for `𝒞 = ⊗_i O_i^+ + ⊗_i O_i^-` over the key-round
/// observables `O_i`.
///
/// With `O^± = (1 ± O)/2`, `tr(𝒞ρ) = 2^{1-N} Σ_{|S| even} ⟨Π_{i∈S} O_i⟩`;
/// odd subsets cancel between the two products. There are `2^{N-1}` even
/// subsets and every correlator is at most one, so `tr(𝒞ρ) = 1` forces each
/// of them to one. The pairwise correlators generate the rest, so those are
/// the emitted equalities (three for `N = 3`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationConstraint {
    /// `tr(𝒞ρ) = Σ coefficient · ⟨monomial⟩`.
    pub expansion: Vec<(Monomial, f64)>,
    /// Monomials whose expectation is pinned to one.
    pub equalities: Vec<Monomial>,
}

impl CorrelationConstraint {
    /// `tr(𝒞ρ)` given expectation values.
    pub fn trace_value(&self, moment: impl Fn(&Monomial) -> f64) -> f64 {
        self.expansion.iter().map(|(m, c)| c * moment(m)).sum()
    }
}

pub fn encode_perfect_correlation(scenario: &Scenario) -> CorrelationConstraint {
    let key = scenario.key_letters();
    let n = key.len();
    let mut expansion = Vec::new();
    for mask in 0usize..1 << n {
        // (Π(1+O) + Π(1-O)) / 2^N: subset S gets (1 + (-1)^{|S|}) / 2^N
        let size = mask.count_ones();
        let coefficient = (1.0 + if size % 2 == 0 { 1.0 } else { -1.0 }) / (n as f64).exp2();
        if coefficient != 0.0 {
            let word: Vec<_> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| key[i])
                .collect();
            expansion.push((canonicalize(&word), coefficient));
        }
    }
    let mut equalities = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            equalities.push(canonicalize(&[key[i], key[j]]));
        }
    }
    CorrelationConstraint {
        expansion,
        equalities,
    }
}

/// How a moment class of the full structure enters the reduced SDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClassBinding {
    Pinned(f64),
    Variable(usize),
}

/// Assembled SDP for a Bell expression over a moment structure.
#[derive(Debug, Clone, PartialEq)]
pub struct NpaInstance {
    pub structure: MomentMatrixStructure,
    pub objective: MomentFunctional,
    pub constraint: Option<CorrelationConstraint>,
    /// Rows of the full moment matrix kept after merging equal rows.
    pub kept_rows: Vec<usize>,
    /// Binding of every class of `structure`.
    pub bindings: Vec<ClassBinding>,
    /// Constant part of the objective from pinned classes.
    pub objective_offset: f64,
    pub problem: SdpProblem,
}

struct ClassUnion {
    parent: Vec<usize>,
}

impl ClassUnion {
    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Merges two classes; the smaller root id survives so the identity
    /// class stays its own root. Returns true if anything changed.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
        true
    }
}

impl NpaInstance {
    pub fn build(
        expr: &BellExpression,
        structure: MomentMatrixStructure,
        constraint: Option<CorrelationConstraint>,
    ) -> Result<Self> {
        let objective = encode_objective(expr, &structure)?;
        let d = structure.dim();
        let n_classes = structure.n_classes();
        let identity = structure.identity_class();
        let mut uf = ClassUnion {
            parent: (0..n_classes).collect(),
        };
        // the identity class must be the smallest root for `union` to keep it
        if identity != 0 {
            return Err(Error::InvalidArgument(
                "identity must be the first basis monomial".into(),
            ));
        }

        if let Some(c) = &constraint {
            for m in &c.equalities {
                let class = structure
                    .class_of_word(m.letters())
                    .ok_or_else(|| Error::MissingMonomial(m.to_string()))?;
                uf.union(class, identity);
            }
        }

        // Rows u, v with diagonal one and ⟨u†v⟩ = 1 are equal vectors, so
        // their entries against every other row agree.
        let mut duplicate_of: Vec<Option<usize>> = vec![None; d];
        loop {
            let mut changed = false;
            for a in 0..d {
                for b in a + 1..d {
                    if uf.find(structure.class(a, b)) != identity {
                        continue;
                    }
                    for w in 0..d {
                        changed |= uf.union(structure.class(w, a), structure.class(w, b));
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for b in 0..d {
            if let Some(a) = (0..b)
                .find(|&a| duplicate_of[a].is_none() && uf.find(structure.class(a, b)) == identity)
            {
                duplicate_of[b] = Some(a);
            }
        }
        let kept_rows: Vec<usize> = (0..d).filter(|&r| duplicate_of[r].is_none()).collect();

        // one variable per non-identity root present in the kept block
        let mut var_of_root: HashMap<usize, usize> = HashMap::new();
        let mut root_order = Vec::new();
        for &r in &kept_rows {
            for &c in &kept_rows {
                let root = uf.find(structure.class(r, c));
                if root != identity && !var_of_root.contains_key(&root) {
                    var_of_root.insert(root, root_order.len());
                    root_order.push(root);
                }
            }
        }
        let bindings: Vec<ClassBinding> = (0..n_classes)
            .map(|c| {
                let root = uf.find(c);
                if root == identity {
                    ClassBinding::Pinned(1.0)
                } else {
                    var_of_root
                        .get(&root)
                        .map(|&v| ClassBinding::Variable(v))
                        .unwrap_or(ClassBinding::Pinned(f64::NAN))
                }
            })
            .collect();

        let dim = kept_rows.len();
        let mut constant = SymSparse::new();
        let mut basis = vec![SymSparse::new(); root_order.len()];
        for (i, &r) in kept_rows.iter().enumerate() {
            for (j, &c) in kept_rows.iter().enumerate().skip(i) {
                match bindings[structure.class(r, c)] {
                    ClassBinding::Pinned(v) => constant.push(i, j, v),
                    ClassBinding::Variable(k) => basis[k].push(i, j, 1.0),
                }
            }
        }
        let mut obj = vec![0.0; root_order.len()];
        let mut objective_offset = 0.0;
        for &(class, coef) in &objective.coeffs {
            match bindings[class] {
                ClassBinding::Pinned(v) if v.is_finite() => objective_offset += coef * v,
                ClassBinding::Pinned(_) => {
                    return Err(Error::MissingMonomial(
                        structure.representatives()[class].to_string(),
                    ))
                }
                ClassBinding::Variable(k) => obj[k] += coef,
            }
        }
        let problem = SdpProblem::new(dim, constant, basis, obj)?;
        Ok(Self {
            structure,
            objective,
            constraint,
            kept_rows,
            bindings,
            objective_offset,
            problem,
        })
    }

    /// Value of a class of the full structure at the SDP point `y`.
    pub fn class_value(&self, class: usize, y: &[f64]) -> f64 {
        match self.bindings[class] {
            ClassBinding::Pinned(v) => v,
            ClassBinding::Variable(k) => y[k],
        }
    }

    /// SDP point for per-class moment values of the full structure (for
    /// feasibility witnesses). Uses the first class bound to each variable.
    pub fn point_from_class_values(&self, values: &[f64]) -> Vec<f64> {
        let mut y = vec![f64::NAN; self.problem.n_vars()];
        for (class, b) in self.bindings.iter().enumerate() {
            if let ClassBinding::Variable(k) = *b {
                if y[k].is_nan() {
                    y[k] = values[class];
                }
            }
        }
        y
    }

    /// Same instance maximizing the negated objective.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.objective = self.objective.negated();
        out.objective_offset = -self.objective_offset;
        out.problem = self.problem.scaled_objective(-1.0);
        out
    }

    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<NpaBound> {
        let solution = solve(&self.problem, tol, max_iter)?;
        let certificate = check_certificate(&self.problem, &solution);
        Ok(NpaBound {
            bound: solution.bound + self.objective_offset,
            primal_value: solution.primal_objective + self.objective_offset,
            certificate,
            moment_matrix_dim: self.problem.dim(),
            n_variables: self.problem.n_vars(),
            solution,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpaBound {
    /// Certified upper bound on the objective.
    pub bound: f64,
    /// Objective at the returned moment point.
    pub primal_value: f64,
    pub certificate: CertificateCheck,
    pub moment_matrix_dim: usize,
    pub n_variables: usize,
    pub solution: SdpSolution,
}

/// Default iteration cap for NPA solves.
pub const NPA_MAX_ITER: usize = 200;

/// Builds the tripartite MK₃ instance at `level`, optionally with the
/// perfect-correlation constraint.
pub fn mabk3_instance(level: usize, with_constraint: bool) -> Result<NpaInstance> {
    if level < 1 {
        return Err(Error::InvalidArgument(
            "hierarchy level must be at least 1".into(),
        ));
    }
    let scenario = Scenario::conference(3)?;
    let structure = build_moment_structure(&generate_monomials(&scenario, level))?;
    let constraint = with_constraint.then(|| encode_perfect_correlation(&scenario));
    NpaInstance::build(&mabk_explicit(3)?, structure, constraint)
}

/// Certified upper bound on `tr(MK₃ ρ)` over all tripartite quantum
/// strategies, at NPA `level`.
///
/// Only `+MK₃` is maximized: negating every observable of every party maps
/// `MK₃` to `-MK₃` and leaves the pairwise key correlators unchanged, so the
/// maximum of `|tr(MK₃ρ)|` equals the maximum of `tr(MK₃ρ)`.
pub fn npa_upper_bound(level: usize, with_constraint: bool, tol: f64) -> Result<NpaBound> {
    if level < 2 {
        return Err(Error::InvalidArgument(
            "MK3 needs hierarchy level >= 2 so three-body moments appear".into(),
        ));
    }
    mabk3_instance(level, with_constraint)?.solve(tol, NPA_MAX_ITER)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A0: OperatorLetter = OperatorLetter { party: 0, input: 0 };
    const A1: OperatorLetter = OperatorLetter { party: 0, input: 1 };
    const B10: OperatorLetter = OperatorLetter { party: 1, input: 0 };
    const B12: OperatorLetter = OperatorLetter { party: 1, input: 2 };

    #[test]
    fn canonical_forms() {
        assert_eq!(canonicalize(&[B10, A0]), Monomial(vec![A0, B10]));
        assert_eq!(canonicalize(&[A0, A0]), Monomial::identity());
        assert_eq!(canonicalize(&[A0, A1, A1, B12]), Monomial(vec![A0, B12]));
        assert_eq!(canonicalize(&[A0, B10, A0]), Monomial(vec![B10]));
        assert_eq!(canonicalize(&[A0, B10, A1, B10]), Monomial(vec![A0, A1]));
    }

    #[test]
    fn monomial_counts() {
        let s = Scenario::conference(3).unwrap();
        assert_eq!(generate_monomials(&s, 0).len(), 1);
        assert_eq!(generate_monomials(&s, 1).len(), 9);
        assert_eq!(generate_monomials(&s, 2).len(), 44);
        assert_eq!(generate_monomials(&s, 3).len(), 160);
        assert!(generate_monomials(&s, 2)[0].is_identity());
    }

    #[test]
    fn level_two_count_matches_combinatorics() {
        // 1 + letters + same-party ordered pairs + cross-party pairs
        let s = Scenario::conference(3).unwrap();
        let k = s.inputs();
        let letters: usize = k.iter().sum();
        let same: usize = k.iter().map(|&x| x * (x - 1)).sum();
        let cross: usize = (0..k.len())
            .flat_map(|i| (i + 1..k.len()).map(move |j| (i, j)))
            .map(|(i, j)| k[i] * k[j])
            .sum();
        assert_eq!(1 + letters + same + cross, generate_monomials(&s, 2).len());
    }

    #[test]
    fn structure_entries() {
        let s = Scenario::conference(3).unwrap();
        let basis = generate_monomials(&s, 2);
        let st = build_moment_structure(&basis).unwrap();
        let idx = |m: &[OperatorLetter]| basis.iter().position(|b| b.letters() == m).unwrap();
        for i in 0..st.dim() {
            assert_eq!(st.class(i, i), st.identity_class());
            for j in 0..st.dim() {
                assert_eq!(st.class(i, j), st.class(j, i));
            }
        }
        let b2 = OperatorLetter::new(1, 2);
        assert_eq!(
            st.class(idx(&[A0]), idx(&[b2])),
            st.class_of_word(&[A0, b2]).unwrap()
        );
        assert_eq!(
            st.class(idx(&[A0, A1]), idx(&[A0])),
            st.class_of_word(&[A1]).unwrap()
        );
        assert_eq!(st.n_classes(), 313);
    }

    #[test]
    fn objective_encoding() {
        let s = Scenario::conference(3).unwrap();
        let st = build_moment_structure(&generate_monomials(&s, 2)).unwrap();
        let f = encode_objective(&mabk_explicit(3).unwrap(), &st).unwrap();
        let w = |a, b, c| {
            st.class_of_word(&[
                OperatorLetter::new(0, a),
                OperatorLetter::new(1, b),
                OperatorLetter::new(2, c),
            ])
            .unwrap()
        };
        let mut got = f.coeffs.clone();
        got.sort_by_key(|e| e.0);
        let mut expected = vec![
            (w(1, 0, 0), 0.5),
            (w(0, 1, 0), 0.5),
            (w(0, 0, 1), 0.5),
            (w(1, 1, 1), -0.5),
        ];
        expected.sort_by_key(|e| e.0);
        assert_eq!(got, expected);

        let empty = BellExpression::from_terms(3, Default::default(), 2).unwrap();
        assert!(encode_objective(&empty, &st).unwrap().coeffs.is_empty());

        let level1 = build_moment_structure(&generate_monomials(&s, 1)).unwrap();
        assert!(matches!(
            encode_objective(&mabk_explicit(3).unwrap(), &level1),
            Err(Error::MissingMonomial(_))
        ));
    }

    #[test]
    fn objective_follows_party_relabeling() {
        let s = Scenario::new(vec![2, 2, 2]).unwrap();
        let st = build_moment_structure(&generate_monomials(&s, 2)).unwrap();
        let mk3 = mabk_explicit(3).unwrap();
        let perm = [1, 2, 0];
        let permuted = encode_objective(&mk3.permute_parties(&perm).unwrap(), &st).unwrap();
        for t in mk3.terms() {
            let word: Vec<_> = perm
                .iter()
                .enumerate()
                .map(|(p, &src)| OperatorLetter::new(p as u8, t.inputs[src]))
                .collect();
            let class = st.class_of_word(&word).unwrap();
            let coef = permuted.coeffs.iter().find(|e| e.0 == class).unwrap().1;
            assert_eq!(coef, t.coefficient.to_f64());
        }
    }

    #[test]
    fn perfect_correlation_expansion() {
        let c = encode_perfect_correlation(&Scenario::conference(3).unwrap());
        assert_eq!(c.equalities.len(), 3);
        // identity plus the three pairs, each with weight 1/4; triple term cancels
        assert_eq!(c.expansion.len(), 4);
        assert!(c
            .expansion
            .iter()
            .all(|(m, w)| *w == 0.25 && m.len() % 2 == 0));
        assert_eq!(c.trace_value(|_| 1.0), 1.0);
        assert_eq!(
            c.trace_value(|m| if m.is_identity() { 1.0 } else { 0.0 }),
            0.25
        );
    }

    #[test]
    fn facial_reduction_shrinks_constrained_instance() {
        let free = mabk3_instance(2, false).unwrap();
        assert_eq!(free.problem.dim(), 44);
        assert_eq!(free.problem.n_vars(), 312);
        assert!(free.problem.has_disjoint_supports());

        let pinned = mabk3_instance(2, true).unwrap();
        assert_eq!(pinned.problem.dim(), 29);
        assert_eq!(pinned.problem.n_vars(), 123);
        assert!(pinned.problem.has_disjoint_supports());
        // strictly feasible at y = 0
        let m = pinned
            .problem
            .moment_matrix(&vec![0.0; pinned.problem.n_vars()]);
        assert!(m.symmetric_eigenvalues().min() > 0.5);
    }

    #[test]
    fn level_one_is_rejected() {
        assert!(npa_upper_bound(1, false, 1e-8).is_err());
    }
}
