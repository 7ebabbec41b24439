//! Correlators of product observables on GHZ states and MABK values.
//!
//! Expectations are evaluated through the stabilizer expansion:
//! `⟨⊗_j b_j·σ⟩ = 2^{-N} Σ_S tr(S ⊗_j b_j·σ)`. Every observable is traceless,
//! so only group elements without identity letters contribute, and each of
//! those contributes `sign(S) · Π_j b_j[S_j]`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mabk::BellExpression;
use crate::pauli::{dense_product, BlochVector, PauliLetter};
use crate::stabilizer::{ghz_dense, ghz_expansion};

/// Two dichotomic observables per party; party 0 is Alice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    alice: [BlochVector; 2],
    bobs: Vec<[BlochVector; 2]>,
    honest: bool,
}

impl MeasurementSettings {
    pub fn new(alice: [BlochVector; 2], bobs: Vec<[BlochVector; 2]>) -> Result<Self> {
        if bobs.is_empty() {
            return Err(Error::InvalidPartyCount {
                n: 1,
                reason: "settings need at least one Bob",
            });
        }
        Ok(Self {
            alice,
            bobs,
            honest: false,
        })
    }

    /// Honest-implementation settings: `A_0 = σ_z`, the rest free.
    pub fn honest(alice_1: BlochVector, bobs: Vec<[BlochVector; 2]>) -> Result<Self> {
        let mut s = Self::new([BlochVector::SIGMA_Z, alice_1], bobs)?;
        s.honest = true;
        Ok(s)
    }

    /// Every party measures `first` on input 0 and `second` on input 1.
    pub fn uniform(n: usize, first: BlochVector, second: BlochVector) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPartyCount {
                n,
                reason: "settings need at least two parties",
            });
        }
        Self::new([first, second], vec![[first, second]; n - 1])
    }

    pub fn n_parties(&self) -> usize {
        self.bobs.len() + 1
    }

    pub fn is_honest(&self) -> bool {
        self.honest
    }

    pub fn alice(&self) -> &[BlochVector; 2] {
        &self.alice
    }

    pub fn bobs(&self) -> &[[BlochVector; 2]] {
        &self.bobs
    }

    pub fn observable(&self, party: usize, input: u8) -> BlochVector {
        let pair = if party == 0 {
            &self.alice
        } else {
            &self.bobs[party - 1]
        };
        pair[input as usize]
    }

    /// Observables selected by an input string, one per party.
    pub fn select(&self, inputs: &[u8]) -> Vec<BlochVector> {
        inputs
            .iter()
            .enumerate()
            .map(|(p, &x)| self.observable(p, x))
            .collect()
    }

    /// Negates both observables of `party`. Negating Alice drops the honest flag.
    pub fn negate_party(&self, party: usize) -> Self {
        let mut out = self.clone();
        let pair = if party == 0 {
            &mut out.alice
        } else {
            &mut out.bobs[party - 1]
        };
        *pair = [pair[0].negated(), pair[1].negated()];
        if party == 0 {
            out.honest = false;
        }
        out
    }
}

/// Stabilizer elements of `|GHZ_N⟩` with no identity letter, as
/// `(sign, letters)`.
#[derive(Debug, Clone)]
pub struct GhzCorrelator {
    n: usize,
    elements: Vec<(f64, Vec<PauliLetter>)>,
}

impl GhzCorrelator {
    pub fn new(n: usize) -> Result<Self> {
        let elements = ghz_expansion(n)?
            .into_iter()
            .filter(|s| s.letters().iter().all(|l| !l.is_identity()))
            .map(|s| {
                let sign = s.sign().expect("GHZ stabilizer elements are Hermitian") as f64;
                (sign, s.letters().to_vec())
            })
            .collect();
        Ok(Self { n, elements })
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    /// Number of contributing stabilizer elements.
    pub fn support_size(&self) -> usize {
        self.elements.len()
    }

    /// `⟨GHZ_N| ⊗_j b_j·σ |GHZ_N⟩`; `observables.len()` must equal `N`.
    pub fn expectation(&self, observables: &[BlochVector]) -> f64 {
        debug_assert_eq!(observables.len(), self.n);
        self.elements
            .iter()
            .map(|(sign, letters)| {
                sign * letters
                    .iter()
                    .zip(observables)
                    .map(|(&l, b)| b.component(l))
                    .product::<f64>()
            })
            .sum()
    }

    /// Signed value `Σ_x c_x ⟨⊗_i P^i_{x_i}⟩`.
    pub fn signed_mabk(&self, expr: &BellExpression, settings: &MeasurementSettings) -> f64 {
        expr.evaluate(|x| self.expectation(&settings.select(x)))
    }
}

fn check_len(n: usize, observables: &[BlochVector]) -> Result<()> {
    if observables.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} observables given for {n} parties",
            observables.len()
        )));
    }
    Ok(())
}

/// Expectation of `⊗_j O_j` on `|GHZ_n⟩` via the stabilizer expansion.
pub fn ghz_expectation(n: usize, observables: &[BlochVector]) -> Result<f64> {
    check_len(n, observables)?;
    Ok(GhzCorrelator::new(n)?.expectation(observables))
}

/// Same quantity summed over the full expansion, every term computed from
/// 2x2 matrix traces with no skipping.
pub fn ghz_expectation_full_sum(n: usize, observables: &[BlochVector]) -> Result<f64> {
    check_len(n, observables)?;
    let mats: Vec<Matrix2<Complex64>> = observables.iter().map(|b| b.observable()).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for s in ghz_expansion(n)? {
        let mut term = crate::pauli::phase_value(s.phase_power());
        for (l, m) in s.letters().iter().zip(&mats) {
            term *= (l.matrix() * m).trace();
        }
        total += term;
    }
    Ok(total.re / (n as f64).exp2())
}

/// Dense-matrix oracle `tr(ρ_GHZ ⊗_j O_j)`.
pub fn ghz_expectation_dense(observables: &[BlochVector]) -> Result<f64> {
    let rho = ghz_dense(observables.len())?;
    let mats: Vec<_> = observables.iter().map(|b| b.observable()).collect();
    let op = dense_product(&mats)?;
    Ok((rho * op).trace().re)
}

/// `⟨σ_z ⊗ B^{(1)} ⊗ … ⊗ B^{(N-1)}⟩ = Π_k β_z^{(k)}` for even `N`.
pub fn honest_even_formula(n: usize, bob_bloch_z: &[f64]) -> Result<f64> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "the product formula holds for even N only",
        });
    }
    if bob_bloch_z.len() != n - 1 {
        return Err(Error::InvalidArgument(format!(
            "{} Bob components given for {n} parties",
            bob_bloch_z.len()
        )));
    }
    Ok(bob_bloch_z.iter().product())
}

/// `2^{(m-1)/2}`: the MABK bound for states with at most `m` entangled parties.
pub fn gme_bound(n: usize, m: usize) -> Result<f64> {
    if m < 1 || m > n {
        return Err(Error::InvalidArgument(format!(
            "entanglement depth {m} outside 1..={n}"
        )));
    }
    Ok(((m as f64 - 1.0) / 2.0).exp2())
}

/// `(E_N/𝒩_N)/2 = 2^{(N-3)/2}` for odd `N`.
pub fn theorem1_bound(n: usize) -> Result<f64> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "the honest-implementation bound applies to odd N >= 3",
        });
    }
    let e_n = crate::mabk::expected_term_count(n) as f64;
    let norm = crate::mabk::expected_normalization(n) as f64;
    Ok(e_n / norm / 2.0)
}

/// Uniformly distributed unit Bloch vector.
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    BlochVector::from_angles(z.clamp(-1.0, 1.0).acos(), phi)
}

/// Largest deviation found by [`scan_honest_correlators`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HonestCorrelatorScan {
    pub n_parties: usize,
    pub trials: usize,
    pub seed: u64,
    /// Number of correlators evaluated.
    pub evaluated: usize,
    /// `max |⟨σ_z ⊗ B…⟩ - target|`, target `0` for odd `N` and `Π β_z`
    /// for even `N`.
    pub max_residual: f64,
}

/// Draws `trials` random Bob settings (two observables per Bob) and checks
/// every correlator with Alice measuring `σ_z` against its predicted value.
pub fn scan_honest_correlators(n: usize, trials: usize, seed: u64) -> Result<HonestCorrelatorScan> {
    if n < 2 {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "need Alice and at least one Bob",
        });
    }
    let corr = GhzCorrelator::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated = 0;
    let mut max_residual = 0.0f64;
    for _ in 0..trials {
        let bobs: Vec<[BlochVector; 2]> = (1..n)
            .map(|_| [random_bloch(&mut rng), random_bloch(&mut rng)])
            .collect();
        for combo in 0..1usize << (n - 1) {
            let mut obs = vec![BlochVector::SIGMA_Z];
            obs.extend(bobs.iter().enumerate().map(|(k, b)| b[combo >> k & 1]));
            let target = if n.is_multiple_of(2) {
                obs[1..].iter().map(|b| b.z()).product()
            } else {
                0.0
            };
            max_residual = max_residual.max((corr.expectation(&obs) - target).abs());
            evaluated += 1;
        }
    }
    Ok(HonestCorrelatorScan {
        n_parties: n,
        trials,
        seed,
        evaluated,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorReport {
    /// `(inputs, ⟨⊗ P_{x_i}⟩)` in the expression's term order.
    pub expectations: Vec<(Vec<u8>, f64)>,
    pub signed_value: f64,
    pub mabk_value: f64,
    /// `2^{(N-2)/2}`: exceeding it certifies genuine N-partite entanglement.
    pub bound_gme: f64,
    /// `2^{(N-3)/2}` for odd `N`, `None` for even `N`.
    pub bound_theorem1: Option<f64>,
}

/// Evaluates `|tr(MK_N ρ_GHZ)|` term by term.
pub fn mabk_value(
    expr: &BellExpression,
    settings: &MeasurementSettings,
) -> Result<CorrelatorReport> {
    let n = expr.n_parties();
    if settings.n_parties() != n {
        return Err(Error::InvalidArgument(format!(
            "expression has {n} parties, settings have {}",
            settings.n_parties()
        )));
    }
    let corr = GhzCorrelator::new(n)?;
    let expectations: Vec<_> = expr
        .terms()
        .iter()
        .map(|t| {
            (
                t.inputs.clone(),
                corr.expectation(&settings.select(&t.inputs)),
            )
        })
        .collect();
    let signed_value = expr
        .terms()
        .iter()
        .zip(&expectations)
        .map(|(t, (_, e))| t.coefficient.to_f64() * e)
        .sum::<f64>();
    Ok(CorrelatorReport {
        expectations,
        signed_value,
        mabk_value: signed_value.abs(),
        bound_gme: gme_bound(n, n - 1)?,
        bound_theorem1: theorem1_bound(n).ok(),
    })
}
