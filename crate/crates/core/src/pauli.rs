//! Exact Pauli algebra with phases tracked as powers of `i`.
//!
//! A [`PauliString`] represents the operator `i^k · P_1 ⊗ … ⊗ P_N` with
//! `k ∈ {0,1,2,3}`. Multiplication never touches floating point, so signs of
//! stabilizer elements stay exact. Dense matrices are provided as a test
//! oracle only.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count for which dense matrices are built (2^12 = 4096 rows).
pub const DENSE_QUBIT_LIMIT: usize = 12;

/// Tolerance on `|b|^2 - 1` accepted for a Bloch vector.
pub const BLOCH_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [
        PauliLetter::I,
        PauliLetter::X,
        PauliLetter::Y,
        PauliLetter::Z,
    ];

    pub fn is_identity(self) -> bool {
        self == PauliLetter::I
    }

    /// 2x2 matrix of the letter.
    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliLetter::I => Matrix2::new(l, o, o, l),
            PauliLetter::X => Matrix2::new(o, l, l, o),
            PauliLetter::Y => Matrix2::new(o, -i, i, o),
            PauliLetter::Z => Matrix2::new(l, o, o, -l),
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

impl fmt::Display for PauliLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Product of two single-qubit Pauli letters: `a·b = i^k · c`.
///
/// Follows `σ_j σ_k = δ_jk 𝟙 + i Σ_l ε_jkl σ_l`.
pub fn letter_mul(a: PauliLetter, b: PauliLetter) -> (u8, PauliLetter) {
    use PauliLetter::*;
    match (a, b) {
        (I, p) | (p, I) => (0, p),
        (p, q) if p == q => (0, I),
        (X, Y) => (1, Z),
        (Y, Z) => (1, X),
        (Z, X) => (1, Y),
        (Y, X) => (3, Z),
        (Z, Y) => (3, X),
        (X, Z) => (3, Y),
        _ => unreachable!(),
    }
}

/// Phase-tracked tensor product of Pauli letters; qubit `j` is position `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    phase_power: u8,
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(phase_power: u8, letters: Vec<PauliLetter>) -> Self {
        assert!(!letters.is_empty(), "pauli string needs at least one qubit");
        Self {
            phase_power: phase_power % 4,
            letters,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(0, vec![PauliLetter::I; n])
    }

    /// `letter` on every qubit.
    pub fn uniform(n: usize, letter: PauliLetter) -> Self {
        Self::new(0, vec![letter; n])
    }

    pub fn phase_power(&self) -> u8 {
        self.phase_power
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|l| l.is_identity())
    }

    /// True when the string is Hermitian, i.e. carries a real phase.
    pub fn is_hermitian(&self) -> bool {
        self.phase_power.is_multiple_of(2)
    }

    /// Real sign of a Hermitian string, `None` for phases `±i`.
    pub fn sign(&self) -> Option<i8> {
        match self.phase_power {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Operator product `self · other` with composed phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let mut phase = self.phase_power as u32 + other.phase_power as u32;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (k, c) = letter_mul(a, b);
                phase += k as u32;
                c
            })
            .collect();
        Ok(PauliString::new((phase % 4) as u8, letters))
    }

    /// `tr(self)`: `i^k · 2^N` for an identity word, zero otherwise.
    ///
    /// Fails when the trace would be imaginary, which cannot happen for
    /// products of Hermitian stabilizer elements.
    pub fn trace_coeff(&self) -> Result<f64> {
        if !self.is_identity() {
            return Ok(0.0);
        }
        let scale = (self.len() as f64).exp2();
        match self.phase_power {
            0 => Ok(scale),
            2 => Ok(-scale),
            _ => Err(Error::NonRealTrace(self.to_string())),
        }
    }

    /// Dense `2^N × 2^N` matrix.
    ///
    /// Qubit 0 is the leftmost Kronecker factor, so it owns the most
    /// significant bit of the basis index. Storage is nalgebra's column-major
    /// layout.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.len() > DENSE_QUBIT_LIMIT {
            return Err(Error::DimensionTooLarge {
                qubits: self.len(),
                limit: DENSE_QUBIT_LIMIT,
            });
        }
        let mut acc = DMatrix::from_element(1, 1, phase_value(self.phase_power));
        for letter in &self.letters {
            let m = letter.matrix();
            acc = acc.kronecker(&DMatrix::from_iterator(2, 2, m.iter().copied()));
        }
        Ok(acc)
    }
}

/// `i^k` as a complex number.
pub fn phase_value(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase_power as usize];
        f.write_str(prefix)?;
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional phase prefix (`+`, `-`, `i`, `+i`, `-i`) followed by
    /// letters from `IXYZ`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else {
            (0, s)
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(PauliLetter::I),
                'X' => Ok(PauliLetter::X),
                'Y' => Ok(PauliLetter::Y),
                'Z' => Ok(PauliLetter::Z),
                _ => Err(Error::Parse(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse(s.to_string()));
        }
        Ok(PauliString::new(phase, letters))
    }
}

/// Unit Bloch vector `b` of the dichotomic qubit observable `b·σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub const SIGMA_X: BlochVector = BlochVector {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const SIGMA_Y: BlochVector = BlochVector {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const SIGMA_Z: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// Rejects vectors whose squared norm differs from one by more than
    /// [`BLOCH_NORM_TOL`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm_sq = x * x + y * y + z * z;
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > BLOCH_NORM_TOL {
            return Err(Error::NotNormalized { x, y, z, norm_sq });
        }
        Ok(Self { x, y, z })
    }

    /// Spherical parameterization `(sinθ cosφ, sinθ sinφ, cosθ)`; unit norm
    /// up to rounding for every input.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Coefficient of `letter` in `b·σ`; zero for the identity.
    pub fn component(&self, letter: PauliLetter) -> f64 {
        match letter {
            PauliLetter::I => 0.0,
            PauliLetter::X => self.x,
            PauliLetter::Y => self.y,
            PauliLetter::Z => self.z,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn is_sigma_z(&self) -> bool {
        *self == Self::SIGMA_Z
    }

    /// `b·σ` as a 2x2 matrix.
    pub fn observable(&self) -> Matrix2<Complex64> {
        PauliLetter::X.matrix() * Complex64::from(self.x)
            + PauliLetter::Y.matrix() * Complex64::from(self.y)
            + PauliLetter::Z.matrix() * Complex64::from(self.z)
    }
}

/// Kronecker product of single-qubit observables, qubit 0 leftmost.
pub fn dense_product(observables: &[Matrix2<Complex64>]) -> Result<DMatrix<Complex64>> {
    if observables.len() > DENSE_QUBIT_LIMIT {
        return Err(Error::DimensionTooLarge {
            qubits: observables.len(),
            limit: DENSE_QUBIT_LIMIT,
        });
    }
    let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for m in observables {
        acc = acc.kronecker(&DMatrix::from_iterator(2, 2, m.iter().copied()));
    }
    Ok(acc)
}
