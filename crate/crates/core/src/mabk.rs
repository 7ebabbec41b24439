//! MABK Bell expressions.
//!
//! Odd `N` uses the closed form over the index set `L_N`; even `N` applies one
//! recursion step to the odd expression below it. Coefficients are exact
//! dyadic rationals, so explicit and recursive constructions can be compared
//! for equality.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational `num / 2^log2_den`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i64,
    log2_den: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic {
        num: 0,
        log2_den: 0,
    };

    pub fn new(num: i64, log2_den: u32) -> Self {
        let mut d = Dyadic { num, log2_den };
        d.reduce();
        d
    }

    pub fn from_int(num: i64) -> Self {
        Self::new(num, 0)
    }

    fn reduce(&mut self) {
        if self.num == 0 {
            self.log2_den = 0;
            return;
        }
        while self.log2_den > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.log2_den -= 1;
        }
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn log2_denominator(&self) -> u32 {
        self.log2_den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn abs(self) -> Self {
        Dyadic {
            num: self.num.abs(),
            ..self
        }
    }

    pub fn half(self) -> Self {
        Self::new(self.num, self.log2_den + 1)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (self.log2_den as f64).exp2()
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        let den = self.log2_den.max(rhs.log2_den);
        let a = self.num << (den - self.log2_den);
        let b = rhs.num << (den - rhs.log2_den);
        Dyadic::new(a + b, den)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            ..self
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log2_den == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.log2_den)
        }
    }
}

/// One correlator `coefficient · ⊗_i P^i_{x_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellTerm {
    pub coefficient: Dyadic,
    pub inputs: Vec<u8>,
}

/// Signed sum of product correlators, one term per distinct input string.
///
/// Stored coefficients already include the `1/𝒩_N` normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellExpression {
    n_parties: usize,
    terms: Vec<BellTerm>,
    normalization: u64,
}

impl BellExpression {
    /// Builds an expression from `inputs → coefficient`, dropping zero terms.
    /// Terms are kept sorted by input string.
    pub fn from_terms(
        n_parties: usize,
        terms: BTreeMap<Vec<u8>, Dyadic>,
        normalization: u64,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (inputs, coefficient) in terms {
            if inputs.len() != n_parties || inputs.iter().any(|&b| b > 1) {
                return Err(Error::InvalidArgument(format!(
                    "input string {inputs:?} is not a bit string of length {n_parties}"
                )));
            }
            if !coefficient.is_zero() {
                out.push(BellTerm {
                    coefficient,
                    inputs,
                });
            }
        }
        Ok(Self {
            n_parties,
            terms: out,
            normalization,
        })
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    pub fn normalization(&self) -> u64 {
        self.normalization
    }

    pub fn coefficient(&self, inputs: &[u8]) -> Dyadic {
        self.terms
            .binary_search_by(|t| t.inputs.as_slice().cmp(inputs))
            .map(|i| self.terms[i].coefficient)
            .unwrap_or(Dyadic::ZERO)
    }

    /// `Σ_x c_x f(x)` for a correlator oracle `f`.
    pub fn evaluate(&self, mut correlator: impl FnMut(&[u8]) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient.to_f64() * correlator(&t.inputs))
            .sum()
    }

    pub fn l1_norm(&self) -> Dyadic {
        self.terms
            .iter()
            .fold(Dyadic::ZERO, |acc, t| acc + t.coefficient.abs())
    }

    /// The primed expression: inputs 0 and 1 exchanged on every party.
    pub fn swap_inputs(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| (t.inputs.iter().map(|b| 1 - b).collect(), t.coefficient))
            .collect();
        Self::from_terms(self.n_parties, terms, self.normalization).expect("bit strings stay valid")
    }

    pub fn negated(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| (t.inputs.clone(), -t.coefficient))
            .collect();
        Self::from_terms(self.n_parties, terms, self.normalization).expect("bit strings stay valid")
    }

    /// Relabels parties: party `i` of the result is party `perm[i]` of `self`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_parties];
        if perm.len() != self.n_parties
            || perm
                .iter()
                .any(|&p| p >= self.n_parties || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation"
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| (perm.iter().map(|&p| t.inputs[p]).collect(), t.coefficient))
            .collect();
        Self::from_terms(self.n_parties, terms, self.normalization)
    }

    /// Checks `E_N = 2^{2⌊N/2⌋}` distinct terms, `𝒩_N = 2^{⌊N/2⌋}`, and
    /// `|c_x| = 1/𝒩_N` for every term.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_parties;
        let expected_terms = expected_term_count(n);
        let expected_norm = expected_normalization(n);
        if self.normalization != expected_norm {
            return Err(Error::InvariantViolation(format!(
                "normalization {} != 2^floor(N/2) = {expected_norm}",
                self.normalization
            )));
        }
        if self.terms.len() as u64 != expected_terms {
            return Err(Error::InvariantViolation(format!(
                "{} terms != E_N = {expected_terms}",
                self.terms.len()
            )));
        }
        let unit = Dyadic::new(1, n as u32 / 2);
        if let Some(t) = self.terms.iter().find(|t| t.coefficient.abs() != unit) {
            return Err(Error::InvariantViolation(format!(
                "coefficient {} on {:?} is not ±1/{expected_norm}",
                t.coefficient, t.inputs
            )));
        }
        if self.terms.windows(2).any(|w| w[0].inputs >= w[1].inputs) {
            return Err(Error::InvariantViolation(
                "input strings not distinct".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for BellExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            let c = t.coefficient;
            let sign = if c.numerator() < 0 {
                "-"
            } else if k == 0 {
                ""
            } else {
                "+"
            };
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{sign}{} ", c.abs())?;
            for b in &t.inputs {
                write!(f, "P{b}")?;
            }
        }
        Ok(())
    }
}

/// `E_N = 2^{2⌊N/2⌋}`.
pub fn expected_term_count(n: usize) -> u64 {
    1u64 << (2 * (n / 2))
}

/// `𝒩_N = 2^{⌊N/2⌋}`.
pub fn expected_normalization(n: usize) -> u64 {
    1u64 << (n / 2)
}

pub fn hamming_weight(x: &[u8]) -> usize {
    x.iter().filter(|&&b| b == 1).count()
}

fn check_odd(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "the explicit MABK form needs an odd N >= 3",
        });
    }
    if n > 31 {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "too many parties to enumerate",
        });
    }
    Ok(())
}

/// `L_N`: bit strings whose Hamming weight has the parity of `(N-1)/2`.
pub fn mabk_index_set(n: usize) -> Result<Vec<Vec<u8>>> {
    check_odd(n)?;
    let parity = (n - 1) / 2 % 2;
    Ok((0..1usize << n)
        .map(|idx| crate::stabilizer::index_bits(idx, n))
        .filter(|x| hamming_weight(x) % 2 == parity)
        .collect())
}

/// `(-1)^{ξ_N(x)}` with `ξ_N(x) = (N-1)/4 - H(x)/2`.
pub fn mabk_sign(n: usize, x: &[u8]) -> Result<i8> {
    check_odd(n)?;
    if x.len() != n || x.iter().any(|&b| b > 1) {
        return Err(Error::NotInIndexSet(x.to_vec()));
    }
    // 4ξ = N - 1 - 2H must be divisible by 4
    let four_xi = n as i64 - 1 - 2 * hamming_weight(x) as i64;
    if four_xi % 4 != 0 {
        return Err(Error::NotInIndexSet(x.to_vec()));
    }
    Ok(if (four_xi / 4).rem_euclid(2) == 0 {
        1
    } else {
        -1
    })
}

/// Closed-form MABK operator for odd `N`.
pub fn mabk_explicit(n: usize) -> Result<BellExpression> {
    let norm = expected_normalization(n);
    let log2_norm = n as u32 / 2;
    let mut terms = BTreeMap::new();
    for x in mabk_index_set(n)? {
        let sign = mabk_sign(n, &x)? as i64;
        terms.insert(x, Dyadic::new(sign, log2_norm));
    }
    let expr = BellExpression::from_terms(n, terms, norm)?;
    expr.validate()?;
    Ok(expr)
}

/// The CHSH-type two-party seed `½[P0P0 + P0P1 + P1P0 - P1P1]`.
pub fn chsh_seed() -> BellExpression {
    let terms = [
        (vec![0, 0], 1),
        (vec![0, 1], 1),
        (vec![1, 0], 1),
        (vec![1, 1], -1),
    ]
    .into_iter()
    .map(|(x, s)| (x, Dyadic::new(s, 1)))
    .collect();
    BellExpression::from_terms(2, terms, 2).expect("seed is well formed")
}

/// `MK_N = ½[MK_{N-1} ⊗ (P0 + P1) + MK'_{N-1} ⊗ (P0 - P1)]`.
pub fn mabk_recursion_step(expr: &BellExpression) -> Result<BellExpression> {
    let n = expr.n_parties() + 1;
    let primed = expr.swap_inputs();
    let mut terms: BTreeMap<Vec<u8>, Dyadic> = BTreeMap::new();
    for (source, last_sign) in [(expr, [1, 1]), (&primed, [1, -1])] {
        for t in source.terms() {
            for (last, s) in [0u8, 1].into_iter().zip(last_sign) {
                let mut x = t.inputs.clone();
                x.push(last);
                let c = if s > 0 {
                    t.coefficient.half()
                } else {
                    -t.coefficient.half()
                };
                let entry = terms.entry(x).or_insert(Dyadic::ZERO);
                *entry = *entry + c;
            }
        }
    }
    let out = BellExpression::from_terms(n, terms, expected_normalization(n))?;
    out.validate()?;
    Ok(out)
}

/// MABK expression for any `N ≥ 2`.
pub fn mabk_expression(n: usize) -> Result<BellExpression> {
    match n {
        0 | 1 => Err(Error::InvalidPartyCount {
            n,
            reason: "MABK expressions need N >= 2",
        }),
        2 => Ok(chsh_seed()),
        n if n % 2 == 1 => mabk_explicit(n),
        n => mabk_recursion_step(&mabk_explicit(n - 1)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(num: i64, log2_den: u32) -> Dyadic {
        Dyadic::new(num, log2_den)
    }

    #[test]
    fn dyadic_arithmetic() {
        assert_eq!(d(2, 2), d(1, 1));
        assert_eq!(d(1, 1) + d(1, 1), Dyadic::from_int(1));
        assert_eq!(d(1, 2) + d(-1, 2), Dyadic::ZERO);
        assert_eq!(d(3, 2).half(), d(3, 3));
        assert_eq!(d(-3, 3).to_f64(), -0.375);
    }

    #[test]
    fn hamming() {
        assert_eq!(hamming_weight(&[0, 0, 0]), 0);
        assert_eq!(hamming_weight(&[1, 0, 1]), 2);
        assert_eq!(hamming_weight(&[1, 1, 1, 1, 1]), 5);
    }

    #[test]
    fn index_sets() {
        let l3 = mabk_index_set(3).unwrap();
        assert_eq!(l3.len(), 4);
        for x in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]] {
            assert!(l3.contains(&x.to_vec()));
        }
        assert!(!l3.contains(&vec![1, 1, 0]));
        assert_eq!(mabk_index_set(5).unwrap().len(), 16);
        assert!(mabk_index_set(4).is_err());
        assert!(mabk_index_set(1).is_err());
        for n in [3, 5, 7, 9] {
            let set = mabk_index_set(n).unwrap();
            assert_eq!(set.len(), 1 << (n - 1));
            assert!(set.iter().all(|x| mabk_sign(n, x).is_ok()));
        }
    }

    #[test]
    fn signs() {
        assert_eq!(mabk_sign(3, &[1, 0, 0]).unwrap(), 1);
        assert_eq!(mabk_sign(3, &[1, 1, 1]).unwrap(), -1);
        assert_eq!(mabk_sign(5, &[1, 1, 0, 0, 0]).unwrap(), 1);
        assert_eq!(mabk_sign(5, &[0, 0, 0, 0, 0]).unwrap(), -1);
        assert!(matches!(
            mabk_sign(3, &[1, 1, 0]),
            Err(Error::NotInIndexSet(_))
        ));
    }

    #[test]
    fn explicit_mermin() {
        let mk3 = mabk_explicit(3).unwrap();
        let expected: BTreeMap<_, _> = [
            (vec![1, 0, 0], d(1, 1)),
            (vec![0, 1, 0], d(1, 1)),
            (vec![0, 0, 1], d(1, 1)),
            (vec![1, 1, 1], d(-1, 1)),
        ]
        .into_iter()
        .collect();
        assert_eq!(mk3, BellExpression::from_terms(3, expected, 2).unwrap());
        assert_eq!(mk3.terms().iter().filter(|t| t.inputs[0] == 0).count(), 2);

        let mk5 = mabk_explicit(5).unwrap();
        assert_eq!(mk5.terms().len(), 16);
        assert_eq!(mk5.normalization(), 4);
        assert!(mabk_explicit(4).is_err());
    }

    #[test]
    fn recursion_from_seed_and_between_odd_orders() {
        assert_eq!(
            mabk_recursion_step(&chsh_seed()).unwrap(),
            mabk_explicit(3).unwrap()
        );
        let mk4 = mabk_recursion_step(&mabk_explicit(3).unwrap()).unwrap();
        assert_eq!(mk4.terms().len(), 16);
        assert_eq!(mk4.normalization(), 4);
        for n in [5, 7] {
            let twice =
                mabk_recursion_step(&mabk_recursion_step(&mabk_explicit(n - 2).unwrap()).unwrap())
                    .unwrap();
            assert_eq!(twice, mabk_explicit(n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn term_counts_follow_floor_rule() {
        for n in 2..=8 {
            let e = mabk_expression(n).unwrap();
            e.validate().unwrap();
            assert_eq!(e.terms().len() as u64, expected_term_count(n));
            assert_eq!(e.normalization(), expected_normalization(n));
            assert_eq!(e.l1_norm(), Dyadic::from_int(1 << (n / 2)));
        }
        assert_eq!(mabk_expression(3).unwrap().terms().len(), 4);
        assert_eq!(mabk_expression(7).unwrap().terms().len(), 64);
        assert_eq!(mabk_expression(7).unwrap().normalization(), 8);
        assert!(mabk_expression(1).is_err());
    }

    #[test]
    fn validate_rejects_wrong_counts() {
        let mut terms: BTreeMap<_, _> = mabk_explicit(3)
            .unwrap()
            .terms()
            .iter()
            .map(|t| (t.inputs.clone(), t.coefficient))
            .collect();
        terms.remove(&vec![1, 1, 1]);
        let broken = BellExpression::from_terms(3, terms, 2).unwrap();
        assert!(matches!(
            broken.validate(),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn classical_bound_for_three_parties() {
        // Deterministic strategies: party i outputs a_i(x_i) ∈ {±1}.
        let mk3 = mabk_explicit(3).unwrap();
        let mut best: f64 = 0.0;
        for strategy in 0u32..64 {
            let out = |party: usize, input: u8| -> f64 {
                if strategy >> (2 * party + input as usize) & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            };
            let v = mk3.evaluate(|x| (0..3).map(|p| out(p, x[p])).product());
            best = best.max(v.abs());
        }
        assert_eq!(best, 1.0);
    }

    #[test]
    fn permute_and_display() {
        let mk3 = mabk_explicit(3).unwrap();
        assert_eq!(mk3.permute_parties(&[2, 0, 1]).unwrap(), mk3);
        assert!(mk3.permute_parties(&[0, 0, 1]).is_err());
        assert_eq!(
            mk3.to_string(),
            "1/2 P0P0P1 +1/2 P0P1P0 +1/2 P1P0P0 -1/2 P1P1P1"
        );
    }
}
