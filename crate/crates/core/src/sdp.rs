//! Dense primal-dual interior-point solver for linear matrix inequalities.
//!
//! Problem (over the moment vector `y`):
//!
//! ```text
//! maximize   c·y
//! subject to M(y) = F_0 + Σ_i y_i F_i ⪰ 0,   E y = f
//! ```
//!
//! Certificate: a matrix `Z ⪰ 0` and multipliers `λ` with
//! `c_i + tr(F_i Z) = (Eᵀλ)_i` for every `i`. For any feasible `y`,
//! `c·y = tr(F_0 Z) + λ·f - tr(M(y) Z) ≤ tr(F_0 Z) + λ·f`, which is the
//! reported bound.
//!
//! Equalities are removed by substitution before iterating. The iteration is
//! an infeasible-start path-following method with the HKM search direction,
//! a fixed centering factor and fraction-to-boundary step control.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centering factor applied to `μ = tr(SZ)/d` each iteration.
pub const MU_REDUCTION: f64 = 0.3;
/// Fraction of the distance to the PSD boundary taken by each step.
pub const FRACTION_TO_BOUNDARY: f64 = 0.98;
/// Eigenvalue floor accepted for the dual matrix when verifying.
pub const CERT_EIGEN_FLOOR: f64 = -1e-9;
/// Largest accepted stationarity residual when verifying.
pub const CERT_STATIONARITY_TOL: f64 = 1e-7;

/// Symmetric sparse matrix stored as upper-triangle triplets `(row ≤ col)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymSparse {
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` and its mirror. Duplicate positions
    /// accumulate.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        match self.entries.iter_mut().find(|e| e.0 == r && e.1 == c) {
            Some(e) => e.2 += value,
            None => self.entries.push((r, c, value)),
        }
    }

    pub fn with(mut self, row: usize, col: usize, value: f64) -> Self {
        self.push(row, col, value);
        self
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.2 == 0.0)
    }

    fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }

    /// Both triangles as `(row, col, value)`.
    fn full_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for &(r, c, v) in &self.entries {
            if v == 0.0 {
                continue;
            }
            out.push((r, c, v));
            if r != c {
                out.push((c, r, v));
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &SymSparse, scale: f64) {
        for &(r, c, v) in &other.entries {
            self.push(r, c, scale * v);
        }
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.full_entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// `tr(self · a)` for symmetric or general `a`.
    pub fn trace_with(&self, a: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                if r == c {
                    v * a[(r, r)]
                } else {
                    v * (a[(c, r)] + a[(r, c)])
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    dim: usize,
    constant: SymSparse,
    basis: Vec<SymSparse>,
    objective: Vec<f64>,
    equalities: Vec<LinearEquality>,
}

impl SdpProblem {
    pub fn new(
        dim: usize,
        constant: SymSparse,
        basis: Vec<SymSparse>,
        objective: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimension must be positive".into(),
            ));
        }
        if basis.len() != objective.len() {
            return Err(Error::InvalidArgument(format!(
                "{} basis matrices but {} objective coefficients",
                basis.len(),
                objective.len()
            )));
        }
        if std::iter::once(&constant)
            .chain(&basis)
            .any(|f| f.max_index().is_some_and(|i| i >= dim))
        {
            return Err(Error::InvalidArgument(format!(
                "matrix entry outside {dim}x{dim}"
            )));
        }
        Ok(Self {
            dim,
            constant,
            basis,
            objective,
            equalities: Vec::new(),
        })
    }

    /// Adds the constraint `Σ coeffs_k y_k = rhs`.
    pub fn with_equality(mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> Result<Self> {
        if coeffs.iter().any(|&(i, _)| i >= self.basis.len()) {
            return Err(Error::InvalidArgument(
                "equality references an unknown variable".into(),
            ));
        }
        self.equalities.push(LinearEquality { coeffs, rhs });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vars(&self) -> usize {
        self.basis.len()
    }

    pub fn constant(&self) -> &SymSparse {
        &self.constant
    }

    pub fn basis(&self) -> &[SymSparse] {
        &self.basis
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn equalities(&self) -> &[LinearEquality] {
        &self.equalities
    }

    /// Same problem with the objective multiplied by `scale`.
    pub fn scaled_objective(&self, scale: f64) -> Self {
        let mut out = self.clone();
        out.objective.iter_mut().for_each(|c| *c *= scale);
        out
    }

    /// True when no matrix position is shared by two of `F_0, F_1, …, F_m`.
    pub fn has_disjoint_supports(&self) -> bool {
        let mut owner = vec![false; self.dim * self.dim];
        for f in std::iter::once(&self.constant).chain(&self.basis) {
            for &(r, c, v) in &f.entries {
                if v == 0.0 {
                    continue;
                }
                if std::mem::replace(&mut owner[r * self.dim + c], true) {
                    return false;
                }
            }
        }
        true
    }

    /// `M(y) = F_0 + Σ y_i F_i`.
    pub fn moment_matrix(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense(self.dim);
        for (f, &yi) in self.basis.iter().zip(y) {
            for (r, c, v) in f.full_entries() {
                m[(r, c)] += yi * v;
            }
        }
        m
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, y)| c * y).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `tr(S Z)`.
    pub complementarity: f64,
    /// `‖F_0 + Σ y_i F_i - S‖_F`.
    pub primal_residual: f64,
    /// `max_i |c_i + tr(F_i Z) - (Eᵀλ)_i|` in reduced coordinates.
    pub dual_residual: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Moment values in the original variables.
    pub y: Vec<f64>,
    pub primal_objective: f64,
    /// Certified upper bound `tr(F_0 Z) + λ·f`.
    pub bound: f64,
    pub dual_matrix: DMatrix<f64>,
    pub equality_multipliers: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

/// Problem after substituting the equality constraints:
/// `y = y_0 + T z`, with `z` free.
struct Reduced {
    dim: usize,
    constant: SymSparse,
    basis: Vec<SymSparse>,
    objective: Vec<f64>,
    objective_offset: f64,
    base_point: Vec<f64>,
    /// `(original variable, Σ coefficient · z_j)` expansion of every original
    /// variable as `y_k = base_point[k] + Σ_j map[k][j] z_j`.
    map: Vec<Vec<(usize, f64)>>,
}

fn eliminate(problem: &SdpProblem) -> Result<Reduced> {
    let m = problem.n_vars();
    let rows = problem.equalities.len();
    // augmented dense system [E | f]
    let mut e = DMatrix::<f64>::zeros(rows, m + 1);
    for (r, eq) in problem.equalities.iter().enumerate() {
        for &(j, v) in &eq.coeffs {
            e[(r, j)] += v;
        }
        e[(r, m)] = eq.rhs;
    }
    // reduced row echelon form, partial pivoting in fixed column order
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..m {
        if row == rows {
            break;
        }
        let (best, best_abs) = (row..rows)
            .map(|r| (r, e[(r, col)].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs < 1e-12 {
            continue;
        }
        e.swap_rows(row, best);
        let p = e[(row, col)];
        for j in 0..=m {
            e[(row, j)] /= p;
        }
        for r in 0..rows {
            if r != row {
                let factor = e[(r, col)];
                if factor != 0.0 {
                    for j in 0..=m {
                        e[(r, j)] -= factor * e[(row, j)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    for r in row..rows {
        if e[(r, m)].abs() > 1e-9 {
            return Err(Error::Infeasible(
                "linear equality constraints are inconsistent".into(),
            ));
        }
    }

    let is_pivot: Vec<Option<usize>> = {
        let mut v = vec![None; m];
        for (k, &p) in pivots.iter().enumerate() {
            v[p] = Some(k);
        }
        v
    };
    let free: Vec<usize> = (0..m).filter(|&j| is_pivot[j].is_none()).collect();

    let mut base_point = vec![0.0; m];
    let mut map: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (zj, &j) in free.iter().enumerate() {
        map[j].push((zj, 1.0));
    }
    for (k, &p) in pivots.iter().enumerate() {
        base_point[p] = e[(k, m)];
        for (zj, &j) in free.iter().enumerate() {
            let coef = e[(k, j)];
            if coef != 0.0 {
                map[p].push((zj, -coef));
            }
        }
    }

    let mut constant = problem.constant.clone();
    let mut basis = vec![SymSparse::new(); free.len()];
    let mut objective = vec![0.0; free.len()];
    let mut objective_offset = 0.0;
    for k in 0..m {
        if base_point[k] != 0.0 {
            constant.add_scaled(&problem.basis[k], base_point[k]);
            objective_offset += problem.objective[k] * base_point[k];
        }
        for &(zj, coef) in &map[k] {
            basis[zj].add_scaled(&problem.basis[k], coef);
            objective[zj] += problem.objective[k] * coef;
        }
    }
    Ok(Reduced {
        dim: problem.dim,
        constant,
        basis,
        objective,
        objective_offset,
        base_point,
        map,
    })
}

/// Largest `α` with `x + α dx ⪰ 0`, given the Cholesky factor of `x`.
fn max_step(chol: &Cholesky<f64, nalgebra::Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    // L^{-1} dx L^{-T}
    let left = l
        .solve_lower_triangular(dx)
        .expect("Cholesky factor is nonsingular");
    let both = l
        .solve_lower_triangular(&left.transpose())
        .expect("Cholesky factor is nonsingular");
    let sym = (&both + both.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    if min_eig < 0.0 {
        -1.0 / min_eig
    } else {
        f64::INFINITY
    }
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solves the problem to relative accuracy `tol`.
pub fn solve(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let red = eliminate(problem)?;
    let d = red.dim;
    let m = red.basis.len();
    let basis_full: Vec<Vec<(usize, usize, f64)>> =
        red.basis.iter().map(|f| f.full_entries()).collect();
    let f0 = red.constant.to_dense(d);

    let norm_f0 = frobenius(&f0);
    let norm_c = red.objective.iter().map(|c| c * c).sum::<f64>().sqrt();
    let basis_norms: Vec<f64> = basis_full
        .iter()
        .map(|f| f.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt())
        .collect();
    let sqrt_d = (d as f64).sqrt();
    let xi = red
        .objective
        .iter()
        .zip(&basis_norms)
        .map(|(c, n)| d as f64 * (1.0 + c.abs()) / (1.0 + n))
        .fold(10f64.max(sqrt_d), f64::max);
    let eta = basis_norms
        .iter()
        .copied()
        .fold(10f64.max(sqrt_d).max(norm_f0), f64::max);

    let mut y = vec![0.0; m];
    let mut s = DMatrix::<f64>::identity(d, d) * eta;
    let mut z = DMatrix::<f64>::identity(d, d) * xi;
    let mut trace = Vec::new();

    let moment = |y: &[f64]| -> DMatrix<f64> {
        let mut mm = f0.clone();
        for (f, &yi) in basis_full.iter().zip(y) {
            if yi != 0.0 {
                for &(r, c, v) in f {
                    mm[(r, c)] += yi * v;
                }
            }
        }
        mm
    };

    for iter in 0..=max_iter {
        let residual = moment(&y) - &s;
        let stationarity: Vec<f64> = (0..m)
            .map(|i| -red.objective[i] - red.basis[i].trace_with(&z))
            .collect();
        let pobj = red
            .objective
            .iter()
            .zip(&y)
            .map(|(c, y)| c * y)
            .sum::<f64>()
            + red.objective_offset;
        let dobj = f0.component_mul(&z).sum() + red.objective_offset;
        let complementarity = s.component_mul(&z).sum();
        let p_res = frobenius(&residual);
        let d_res = stationarity.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        let rel_gap = (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let converged = rel_gap < tol
            && complementarity / (1.0 + pobj.abs() + dobj.abs()) < tol
            && p_res / (1.0 + norm_f0) < tol
            && d_res / (1.0 + norm_c) < tol;

        if converged || iter == max_iter {
            trace.push(IterationRecord {
                iteration: iter,
                primal_objective: pobj,
                dual_objective: dobj,
                complementarity,
                primal_residual: p_res,
                dual_residual: d_res,
                step_primal: 0.0,
                step_dual: 0.0,
            });
            if !converged {
                return Err(Error::MaxIterations {
                    iterations: max_iter,
                    gap: rel_gap,
                    primal_residual: p_res,
                    dual_residual: d_res,
                });
            }
            return Ok(finish(problem, &red, y, z, pobj, iter, trace));
        }

        let mu = complementarity / d as f64;
        let chol_s = Cholesky::new(s.clone()).ok_or_else(|| Error::NumericalBreakdown {
            iteration: iter,
            reason: "moment slack lost positive definiteness".into(),
        })?;
        let h = chol_s.inverse();

        // Schur complement M_ij = tr(F_i Z F_j H), one column per basis matrix
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut t = DMatrix::<f64>::zeros(d, d);
        for j in 0..m {
            // T = Z F_j H; column a of T gains Z[:, r] · v H[c, a]
            t.fill(0.0);
            for &(r, c, v) in &basis_full[j] {
                let z_col = z.column(r);
                for a in 0..d {
                    let factor = v * h[(c, a)];
                    if factor == 0.0 {
                        continue;
                    }
                    let mut t_col = t.column_mut(a);
                    for (tb, zb) in t_col.iter_mut().zip(z_col.iter()) {
                        *tb += zb * factor;
                    }
                }
            }
            for i in 0..=j {
                let acc: f64 = basis_full[i].iter().map(|&(r, c, v)| v * t[(c, r)]).sum();
                schur[(i, j)] = acc;
                schur[(j, i)] = acc;
            }
        }

        let zrh = &z * &residual * &h;
        let rhs = DVector::from_iterator(
            m,
            (0..m).map(|i| {
                MU_REDUCTION * mu * red.basis[i].trace_with(&h) + red.objective[i]
                    - red.basis[i].trace_with(&zrh)
            }),
        );
        // near the optimum rounding can push the Schur matrix off the PD cone
        let dy = match Cholesky::new(schur.clone()) {
            Some(chol) => chol.solve(&rhs),
            None => schur
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::NumericalBreakdown {
                    iteration: iter,
                    reason: "Schur complement is singular".into(),
                })?,
        };

        let mut ds = residual;
        for (f, &dyi) in basis_full.iter().zip(dy.iter()) {
            for &(r, c, v) in f {
                ds[(r, c)] += dyi * v;
            }
        }
        let dz = symmetrize(&(&h * (MU_REDUCTION * mu) - &z - &z * &ds * &h));

        let chol_z = Cholesky::new(z.clone()).ok_or_else(|| Error::NumericalBreakdown {
            iteration: iter,
            reason: "dual matrix lost positive definiteness".into(),
        })?;
        let alpha_p = (FRACTION_TO_BOUNDARY * max_step(&chol_s, &ds)).min(1.0);
        let alpha_d = (FRACTION_TO_BOUNDARY * max_step(&chol_z, &dz)).min(1.0);
        if !(alpha_p > 1e-14 && alpha_d > 1e-14) {
            return Err(Error::NumericalBreakdown {
                iteration: iter,
                reason: format!("step length collapsed (primal {alpha_p:.3e}, dual {alpha_d:.3e})"),
            });
        }

        trace.push(IterationRecord {
            iteration: iter,
            primal_objective: pobj,
            dual_objective: dobj,
            complementarity,
            primal_residual: p_res,
            dual_residual: d_res,
            step_primal: alpha_p,
            step_dual: alpha_d,
        });

        for (yi, dyi) in y.iter_mut().zip(dy.iter()) {
            *yi += alpha_p * dyi;
        }
        s += &ds * alpha_p;
        s = symmetrize(&s);
        z += &dz * alpha_d;
        z = symmetrize(&z);
    }
    unreachable!("loop returns on the final iteration")
}

fn finish(
    problem: &SdpProblem,
    red: &Reduced,
    z_free: Vec<f64>,
    dual: DMatrix<f64>,
    reduced_pobj: f64,
    iterations: usize,
    trace: Vec<IterationRecord>,
) -> SdpSolution {
    let y: Vec<f64> = red
        .base_point
        .iter()
        .zip(&red.map)
        .map(|(b, terms)| b + terms.iter().map(|&(j, c)| c * z_free[j]).sum::<f64>())
        .collect();
    let multipliers = equality_multipliers(problem, &dual);
    let bound = dual_objective(problem, &dual, &multipliers);
    SdpSolution {
        status: SdpStatus::Optimal,
        primal_objective: problem.objective_value(&y),
        gap: bound - reduced_pobj,
        y,
        bound,
        dual_matrix: dual,
        equality_multipliers: multipliers,
        iterations,
        trace,
    }
}

/// Least-squares multipliers `λ` for `Eᵀλ = c + tr(F·Z)`.
fn equality_multipliers(problem: &SdpProblem, z: &DMatrix<f64>) -> Vec<f64> {
    let k = problem.equalities.len();
    if k == 0 {
        return Vec::new();
    }
    let m = problem.n_vars();
    let mut et = DMatrix::<f64>::zeros(m, k);
    for (r, eq) in problem.equalities.iter().enumerate() {
        for &(j, v) in &eq.coeffs {
            et[(j, r)] += v;
        }
    }
    let v = DVector::from_iterator(
        m,
        (0..m).map(|i| problem.objective[i] + problem.basis[i].trace_with(z)),
    );
    let svd = et.svd(true, true);
    svd.solve(&v, 1e-12)
        .map(|x| x.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; k])
}

fn dual_objective(problem: &SdpProblem, z: &DMatrix<f64>, multipliers: &[f64]) -> f64 {
    problem.constant.trace_with(z)
        + problem
            .equalities
            .iter()
            .zip(multipliers)
            .map(|(eq, l)| eq.rhs * l)
            .sum::<f64>()
}

/// Outcome of re-checking a solution against the problem data alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub min_dual_eigenvalue: f64,
    pub stationarity_residual: f64,
    pub recomputed_bound: f64,
    pub bound_mismatch: f64,
    /// `bound - c·y`; negative values violate weak duality.
    pub duality_gap: f64,
    pub verified: bool,
}

/// Recomputes dual feasibility and the bound from `(Z, λ)` without using any
/// solver state.
pub fn check_certificate(problem: &SdpProblem, solution: &SdpSolution) -> CertificateCheck {
    let z = &solution.dual_matrix;
    let shape_ok = z.nrows() == problem.dim
        && z.ncols() == problem.dim
        && solution.equality_multipliers.len() == problem.equalities.len()
        && solution.y.len() == problem.n_vars();
    if !shape_ok {
        return CertificateCheck {
            min_dual_eigenvalue: f64::NAN,
            stationarity_residual: f64::INFINITY,
            recomputed_bound: f64::NAN,
            bound_mismatch: f64::INFINITY,
            duality_gap: f64::NAN,
            verified: false,
        };
    }
    let asym = (z - z.transpose()).amax();
    let min_dual_eigenvalue = SymmetricEigen::new(symmetrize(z)).eigenvalues.min();

    let mut et_lambda = vec![0.0; problem.n_vars()];
    for (eq, l) in problem
        .equalities
        .iter()
        .zip(&solution.equality_multipliers)
    {
        for &(j, v) in &eq.coeffs {
            et_lambda[j] += v * l;
        }
    }
    let stationarity_residual = (0..problem.n_vars())
        .map(|i| (problem.objective[i] + problem.basis[i].trace_with(z) - et_lambda[i]).abs())
        .fold(0.0, f64::max);
    let recomputed_bound = dual_objective(problem, z, &solution.equality_multipliers);
    let bound_mismatch = (recomputed_bound - solution.bound).abs();
    let duality_gap = recomputed_bound - problem.objective_value(&solution.y);

    let verified = asym <= 1e-12 * (1.0 + z.amax())
        && min_dual_eigenvalue >= CERT_EIGEN_FLOOR
        && stationarity_residual < CERT_STATIONARITY_TOL
        && bound_mismatch <= 1e-9 * (1.0 + recomputed_bound.abs())
        && duality_gap >= -1e-9
        && recomputed_bound.is_finite();
    CertificateCheck {
        min_dual_eigenvalue,
        stationarity_residual,
        recomputed_bound,
        bound_mismatch,
        duality_gap,
        verified,
    }
}

pub fn verify_certificate(problem: &SdpProblem, solution: &SdpSolution) -> bool {
    check_certificate(problem, solution).verified
}
