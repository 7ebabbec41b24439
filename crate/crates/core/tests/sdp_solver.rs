use mabk_core::sdp::{check_certificate, solve, verify_certificate, SdpProblem, SymSparse};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FREE: [(usize, usize); 3] = [(0, 1), (2, 3), (1, 4)];

/// 5×5 unit-diagonal matrix with fixed small off-diagonals and three free
/// entries, maximizing a random linear objective over them.
fn random_instance(seed: u64) -> (SdpProblem, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fixed = DMatrix::<f64>::identity(5, 5);
    let mut constant = SymSparse::new();
    for i in 0..5 {
        constant.push(i, i, 1.0);
        for j in i + 1..5 {
            if !FREE.contains(&(i, j)) {
                let v = rng.random_range(-0.25..0.25);
                fixed[(i, j)] = v;
                fixed[(j, i)] = v;
                constant.push(i, j, v);
            }
        }
    }
    let basis = FREE
        .iter()
        .map(|&(i, j)| SymSparse::new().with(i, j, 1.0))
        .collect();
    let objective = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    (
        SdpProblem::new(5, constant, basis, objective).unwrap(),
        fixed,
    )
}

fn grid_maximum(problem: &SdpProblem) -> f64 {
    let feasible = |y: &[f64]| problem.moment_matrix(y).symmetric_eigenvalues().min() >= 0.0;
    let mut center = [0.0; 3];
    let mut half = 1.0;
    let mut best = f64::NEG_INFINITY;
    let steps = 24;
    for _ in 0..8 {
        let mut best_point = center;
        for a in 0..=steps {
            for b in 0..=steps {
                for c in 0..=steps {
                    let y = [a, b, c].map(|k| k as f64 / steps as f64 * 2.0 - 1.0);
                    let y = [
                        center[0] + half * y[0],
                        center[1] + half * y[1],
                        center[2] + half * y[2],
                    ];
                    if y.iter().any(|v| v.abs() > 1.0) || !feasible(&y) {
                        continue;
                    }
                    let v = problem.objective_value(&y);
                    if v > best {
                        best = v;
                        best_point = y;
                    }
                }
            }
        }
        center = best_point;
        half *= 0.25;
    }
    best
}

#[test]
fn random_instances_match_grid_search() {
    for seed in 0..3 {
        let (problem, _) = random_instance(seed);
        let sol = solve(&problem, 1e-9, 100).unwrap();
        let oracle = grid_maximum(&problem);
        assert!(
            (sol.bound - oracle).abs() < 1e-4,
            "seed {seed}: sdp {} grid {oracle}",
            sol.bound
        );
        assert!(verify_certificate(&problem, &sol));
    }
}

#[test]
fn objective_scaling_scales_the_bound() {
    for seed in [7, 8] {
        let (problem, _) = random_instance(seed);
        let base = solve(&problem, 1e-9, 100).unwrap();
        let scaled = solve(&problem.scaled_objective(3.0), 1e-9, 100).unwrap();
        assert!((scaled.bound - 3.0 * base.bound).abs() < 1e-6 * (1.0 + scaled.bound.abs()));
        for (a, b) in base.y.iter().zip(&scaled.y) {
            assert!((a - b).abs() < 1e-7, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn repeated_solves_are_identical() {
    let (problem, _) = random_instance(3);
    let a = solve(&problem, 1e-9, 100).unwrap();
    let b = solve(&problem, 1e-9, 100).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.bound.to_bits(), b.bound.to_bits());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.dual_matrix, b.dual_matrix);
}

#[test]
fn weak_duality_along_the_path() {
    for seed in 0..3 {
        let (problem, fixed) = random_instance(seed);
        let sol = solve(&problem, 1e-9, 100).unwrap();
        for rec in &sol.trace {
            if rec.primal_residual < 1e-8 && rec.dual_residual < 1e-8 {
                assert!(rec.dual_objective >= rec.primal_objective - 1e-9, "{rec:?}");
            }
        }
        // y = 0 is feasible, so it must sit below the certified bound
        assert!(fixed.symmetric_eigenvalues().min() > 0.0);
        assert!(problem.objective_value(&[0.0; 3]) <= sol.bound + 1e-9);
        let cert = check_certificate(&problem, &sol);
        assert!(cert.verified && cert.duality_gap.abs() < 1e-6, "{cert:?}");
    }
}
