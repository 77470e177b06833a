//! Constructed-feasible random SDPs.

mod common;

use common::random_problem;
use vcert::sdp::{solve, SdpStatus, SolveOptions};

#[test]
fn fifty_constructed_feasible_sdps_are_solved() {
    for seed in 0..50 {
        let (p, scale) = random_problem(seed);
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal, "seed {seed}: {:?}", (s.primal_residual, s.dual_residual, s.gap));
        assert!(s.gap <= 1e-7, "seed {seed}: gap {}", s.gap);
        assert!(s.primal_objective >= s.dual_objective - 1e-6 * scale, "weak duality, seed {seed}");
        assert!(s.min_eigenvalue() >= -1e-7);
    }
}

#[test]
fn solving_is_deterministic() {
    let (p, _) = random_problem(7);
    let a = solve(&p, &SolveOptions::default()).unwrap();
    let b = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
    assert_eq!(a.dual_objective.to_bits(), b.dual_objective.to_bits());
}
