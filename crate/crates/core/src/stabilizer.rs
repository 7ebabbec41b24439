//! GHZ state as the normalized sum of its stabilizer group.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliLetter, PauliString, DENSE_QUBIT_LIMIT};

/// Stabilizer description of `|GHZ_N⟩ = (|0…0⟩ + |1…1⟩)/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhzStabilizer {
    n_parties: usize,
    generators: Vec<PauliString>,
    expansion: Vec<PauliString>,
}

impl GhzStabilizer {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            n_parties: n,
            generators: ghz_generators(n)?,
            expansion: ghz_expansion(n)?,
        })
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// All `2^N` group elements, indexed by the bit string `s` read with
    /// `s_1` as the most significant bit.
    pub fn expansion(&self) -> &[PauliString] {
        &self.expansion
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "a GHZ state needs at least two parties",
        });
    }
    Ok(())
}

/// `G_1 = X^{⊗N}` and `G_j = Z_{j-1} Z_j` for `j = 2..N` (1-based qubits).
pub fn ghz_generators(n: usize) -> Result<Vec<PauliString>> {
    check_n(n)?;
    let mut gens = vec![PauliString::uniform(n, PauliLetter::X)];
    for j in 1..n {
        let mut letters = vec![PauliLetter::I; n];
        letters[j - 1] = PauliLetter::Z;
        letters[j] = PauliLetter::Z;
        gens.push(PauliString::new(0, letters));
    }
    Ok(gens)
}

/// Group element for bit string `s = (s_1, …, s_N)`:
/// `(X^{s_1})^{⊗N} · (Z^{s_2} ⊗ Z^{s_2+s_3} ⊗ … ⊗ Z^{s_{N-1}+s_N} ⊗ Z^{s_N})`.
pub fn ghz_expansion_element(s: &[u8]) -> Result<PauliString> {
    let n = s.len();
    check_n(n)?;
    let x_part = if s[0] & 1 == 1 {
        PauliString::uniform(n, PauliLetter::X)
    } else {
        PauliString::identity(n)
    };
    let z_letters = (0..n)
        .map(|q| {
            // exponent of Z on qubit q (0-based), reduced mod 2
            let e = match q {
                0 => s[1],
                q if q == n - 1 => s[n - 1],
                q => s[q] ^ s[q + 1],
            };
            if e & 1 == 1 {
                PauliLetter::Z
            } else {
                PauliLetter::I
            }
        })
        .collect();
    x_part.mul(&PauliString::new(0, z_letters))
}

/// The `2^N` stabilizer elements of `|GHZ_N⟩`.
pub fn ghz_expansion(n: usize) -> Result<Vec<PauliString>> {
    check_n(n)?;
    if n >= usize::BITS as usize - 1 {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "stabilizer expansion too large to enumerate",
        });
    }
    (0..1usize << n)
        .map(|idx| ghz_expansion_element(&index_bits(idx, n)))
        .collect()
}

/// Bits of `idx` as a string of length `n`, most significant first.
pub fn index_bits(idx: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((idx >> (n - 1 - i)) & 1) as u8).collect()
}

/// State vector of `|GHZ_N⟩`.
pub fn ghz_vector(n: usize) -> Result<DVector<Complex64>> {
    check_n(n)?;
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::DimensionTooLarge {
            qubits: n,
            limit: DENSE_QUBIT_LIMIT,
        });
    }
    let dim = 1usize << n;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v[0] = amp;
    v[dim - 1] = amp;
    Ok(v)
}

/// Dense projector `|GHZ_N⟩⟨GHZ_N|`.
pub fn ghz_dense(n: usize) -> Result<DMatrix<Complex64>> {
    let v = ghz_vector(n)?;
    Ok(&v * v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn generators() {
        assert_eq!(
            ghz_generators(3).unwrap(),
            vec![ps("XXX"), ps("ZZI"), ps("IZZ")]
        );
        assert_eq!(ghz_generators(2).unwrap(), vec![ps("XX"), ps("ZZ")]);
        assert_eq!(ghz_generators(5).unwrap()[3], ps("IIZZI"));
        assert!(ghz_generators(1).is_err());
    }

    #[test]
    fn expansion_elements() {
        assert_eq!(ghz_expansion_element(&[1, 0, 0]).unwrap(), ps("+XXX"));
        assert_eq!(ghz_expansion_element(&[1, 1, 1]).unwrap(), ps("-YXY"));
        assert_eq!(ghz_expansion_element(&[0, 0, 0]).unwrap(), ps("+III"));
        assert_eq!(ghz_expansion(3).unwrap().len(), 8);
    }

    #[test]
    fn expansion_stabilizes_ghz_vector() {
        for n in 2..=6 {
            let v = ghz_vector(n).unwrap();
            for s in ghz_expansion(n).unwrap() {
                let sv = s.dense_matrix().unwrap() * &v;
                let err = (sv - &v).norm();
                assert!(err < 1e-12, "{s} does not stabilize GHZ_{n}");
            }
        }
    }

    #[test]
    fn expansion_phases_real_and_squares_to_identity() {
        for n in 2..=7 {
            for s in ghz_expansion(n).unwrap() {
                assert!(s.is_hermitian(), "{s}");
                assert_eq!(s.mul(&s).unwrap(), PauliString::identity(n));
            }
        }
    }

    #[test]
    fn expansion_is_a_group() {
        for n in 2..=5 {
            let exp = ghz_expansion(n).unwrap();
            let set: BTreeSet<_> = exp.iter().cloned().collect();
            assert_eq!(set.len(), 1 << n);
            for a in &exp {
                for b in &exp {
                    assert!(set.contains(&a.mul(b).unwrap()));
                }
            }
        }
    }

    #[test]
    fn generator_subsets_reproduce_expansion() {
        for n in 2..=6 {
            let gens = ghz_generators(n).unwrap();
            let mut products = BTreeSet::new();
            for mask in 0..1usize << n {
                let mut acc = PauliString::identity(n);
                for (j, g) in gens.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        acc = acc.mul(g).unwrap();
                    }
                }
                products.insert(acc);
            }
            let expansion: BTreeSet<_> = ghz_expansion(n).unwrap().into_iter().collect();
            assert_eq!(products, expansion);
        }
    }

    #[test]
    fn dense_projector() {
        let rho = ghz_dense(2).unwrap();
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho[(r, c)].re - 0.5).abs() < 1e-15);
        }
        assert!((rho[(1, 1)]).norm() < 1e-15);

        let rho3 = ghz_dense(3).unwrap();
        assert!((rho3.trace().re - 1.0).abs() < 1e-12);
        assert!(((&rho3 * &rho3).trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_projector_equals_stabilizer_sum() {
        for n in 2..=6 {
            let dim = 1usize << n;
            let mut sum = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
            for s in ghz_expansion(n).unwrap() {
                sum += s.dense_matrix().unwrap();
            }
            sum /= Complex64::from(dim as f64);
            let rho = ghz_dense(n).unwrap();
            let worst = (sum - rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "n = {n}: {worst}");
        }
    }
}
