//! Multistart maximization of the MABK value on `|GHZ_N⟩` over measurement
//! directions.
//!
//! Each observable is parameterized by spherical angles `(θ, φ)`, so every
//! candidate is a unit Bloch vector. The absolute value is handled by ascending
//! `+f` and `-f` separately from the same start and keeping the larger result.
//! Gradients are central finite differences; steps are quasi-Newton (BFGS)
//! directions with Armijo backtracking.
//!
//! Restart `k` draws its starting angles from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `k`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{GhzCorrelator, MeasurementSettings};
use crate::error::{Error, Result};
use crate::mabk::{mabk_expression, BellExpression};
use crate::pauli::BlochVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Finite-difference step on the angles.
    pub gradient_step: f64,
    /// Ascent stops once the largest gradient component falls below this.
    pub convergence_tol: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 100,
            seed: 2019,
            gradient_step: 1e-5,
            convergence_tol: 1e-7,
            max_iterations: 1000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidArgument(
                "convergence_tol must be positive".into(),
            ));
        }
        if self.gradient_step.is_nan() || self.gradient_step <= 0.0 {
            return Err(Error::InvalidArgument(
                "gradient_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub best_settings: MeasurementSettings,
    pub per_restart_values: Vec<f64>,
    pub converged_count: usize,
}

pub fn angles_to_bloch(theta: f64, phi: f64) -> BlochVector {
    BlochVector::from_angles(theta, phi)
}

/// Maximizes the MABK value with `A_0 = σ_z` fixed.
pub fn maximize_honest_mabk(n: usize, config: &OptimizerConfig) -> Result<OptimizationResult> {
    maximize(n, config, true)
}

/// Maximizes the MABK value with every observable free.
pub fn maximize_unconstrained_mabk(
    n: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    maximize(n, config, false)
}

struct Objective {
    expr: BellExpression,
    corr: GhzCorrelator,
    honest: bool,
}

impl Objective {
    fn n_params(&self) -> usize {
        let observables = 2 * self.expr.n_parties() - usize::from(self.honest);
        2 * observables
    }

    /// Observables as `pairs[party][input]`.
    fn pairs(&self, params: &[f64]) -> Vec<[BlochVector; 2]> {
        let mut angles = params.chunks_exact(2).map(|a| angles_to_bloch(a[0], a[1]));
        (0..self.expr.n_parties())
            .map(|party| {
                let first = if party == 0 && self.honest {
                    BlochVector::SIGMA_Z
                } else {
                    angles.next().expect("parameter count matches layout")
                };
                let second = angles.next().expect("parameter count matches layout");
                [first, second]
            })
            .collect()
    }

    fn signed_value(&self, params: &[f64]) -> f64 {
        let pairs = self.pairs(params);
        let mut obs = vec![BlochVector::SIGMA_Z; pairs.len()];
        self.expr.evaluate(|x| {
            for (slot, (pair, &input)) in obs.iter_mut().zip(pairs.iter().zip(x)) {
                *slot = pair[input as usize];
            }
            self.corr.expectation(&obs)
        })
    }

    fn settings(&self, params: &[f64]) -> MeasurementSettings {
        let mut pairs = self.pairs(params).into_iter();
        let alice = pairs.next().expect("at least two parties");
        let bobs = pairs.collect();
        if self.honest {
            MeasurementSettings::honest(alice[1], bobs).expect("valid party count")
        } else {
            MeasurementSettings::new(alice, bobs).expect("valid party count")
        }
    }
}

struct Ascent {
    params: Vec<f64>,
    value: f64,
    converged: bool,
}

fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `f` from `start`.
fn ascend(f: impl Fn(&[f64]) -> f64, start: Vec<f64>, config: &OptimizerConfig) -> Ascent {
    let dim = start.len();
    let mut x = start;
    let mut fx = f(&x);
    let mut g = gradient(&f, &x, config.gradient_step);
    // inverse Hessian approximation of -f
    let mut h_inv = vec![0.0; dim * dim];
    let reset = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        (0..dim).for_each(|i| h[i * dim + i] = 1.0);
    };
    reset(&mut h_inv);

    for _ in 0..config.max_iterations {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < config.convergence_tol {
            return Ascent {
                params: x,
                value: fx,
                converged: true,
            };
        }
        let mut dir: Vec<f64> = (0..dim)
            .map(|i| dot(&h_inv[i * dim..(i + 1) * dim], &g))
            .collect();
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope <= 0.0 {
            reset(&mut h_inv);
            dir = g.clone();
            slope = dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let ft = f(&trial);
            if ft >= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no ascent possible along any tried step: at a maximum up to FD noise
            let converged =
                g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < config.convergence_tol.sqrt();
            return Ascent {
                params: x,
                value: fx,
                converged,
            };
        };
        let g_new = gradient(&f, &x_new, config.gradient_step);

        // BFGS update for minimizing -f: s = Δx, y = -(Δg)
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            let hy: Vec<f64> = (0..dim)
                .map(|i| dot(&h_inv[i * dim..(i + 1) * dim], &y))
                .collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..dim {
                for j in 0..dim {
                    h_inv[i * dim + j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    Ascent {
        params: x,
        value: fx,
        converged: false,
    }
}

fn maximize(n: usize, config: &OptimizerConfig, honest: bool) -> Result<OptimizationResult> {
    if n < 3 {
        return Err(Error::InvalidPartyCount {
            n,
            reason: "optimization is defined for N >= 3",
        });
    }
    config.validate()?;
    let objective = Objective {
        expr: mabk_expression(n)?,
        corr: GhzCorrelator::new(n)?,
        honest,
    };
    let dim = objective.n_params();

    let runs: Vec<(f64, Vec<f64>, bool)> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(restart as u64);
            let start: Vec<f64> = (0..dim / 2)
                .flat_map(|_| {
                    [
                        rng.random_range(0.0..std::f64::consts::PI),
                        rng.random_range(0.0..std::f64::consts::TAU),
                    ]
                })
                .collect();
            let up = ascend(|p| objective.signed_value(p), start.clone(), config);
            let down = ascend(|p| -objective.signed_value(p), start, config);
            let best = if down.value > up.value { down } else { up };
            (best.value, best.params, best.converged)
        })
        .collect();

    let per_restart_values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let converged_count = runs.iter().filter(|r| r.2).count();
    // first index wins ties, independent of scheduling
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.0 > runs[best].0 { i } else { best });
    Ok(OptimizationResult {
        best_value: runs[best].0,
        best_settings: objective.settings(&runs[best].1),
        per_restart_values,
        converged_count,
    })
}
