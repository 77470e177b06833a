//! Property suites for polynomial arithmetic, SOS extraction and the
//! finite-system soundness harness.

use std::collections::BTreeSet;

use proptest::prelude::*;
use vcert::discrete::{reach, safety_oracle_consistency, FiniteSystem};
use vcert::poly::{binomial, monomial_basis, Monomial, Polynomial, VariableSpace};
use vcert::sdp::{solve, SdpStatus, SolveOptions};
use vcert::semialg::SemiAlgebraicSet;
use vcert::sosprog::{AffinePolyExpr, SosProgram};

fn xyz() -> VariableSpace {
    VariableSpace::new(["x", "y", "z"]).unwrap()
}

/// Small integer coefficients keep every product exact in f64.
fn poly3() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(((0u32..3, 0u32..3, 0u32..3), -5i32..=5), 0..6).prop_map(|terms| {
        let s = xyz();
        Polynomial::from_terms(&s, terms.into_iter().map(|((a, b, c), v)| (Monomial::new(&[a, b, c]), v as f64)))
            .unwrap()
    })
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_axioms(p in poly3(), q in poly3(), r in poly3()) {
        let zero = Polynomial::zero(&xyz());
        let one = Polynomial::constant(&xyz(), 1.0);
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&(&p + &q) + &r, &p + &(&q + &r));
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert_eq!(&p + &zero, p.clone());
        prop_assert_eq!(&p * &one, p.clone());
        prop_assert!((&p - &p).is_zero());
        prop_assert!((&p + &(-&p)).is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(p in poly3(), q in poly3(), x in point3()) {
        let (pv, qv) = (p.eval(&x).unwrap(), q.eval(&x).unwrap());
        prop_assert!(close((&p + &q).eval(&x).unwrap(), pv + qv, 1e-12));
        prop_assert!(close((&p * &q).eval(&x).unwrap(), pv * qv, 1e-12));
    }

    #[test]
    fn composition_commutes_with_evaluation(p in poly3(), f in prop::collection::vec(poly3(), 3), x in point3()) {
        let s = xyz();
        let comp = p.compose(&f, &s).unwrap();
        let image: Vec<f64> = f.iter().map(|fi| fi.eval(&x).unwrap()).collect();
        prop_assert!(close(comp.eval(&x).unwrap(), p.eval(&image).unwrap(), 1e-9));
    }

    #[test]
    fn text_round_trip(p in poly3()) {
        let back = Polynomial::parse(&xyz(), &p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn basis_sizes_are_binomial() {
    for n in 0..=8 {
        for d in 0..=6u32 {
            let basis = monomial_basis(n, d);
            assert_eq!(basis.len(), binomial(n + d as usize, d as usize), "n {n} d {d}");
            let distinct: BTreeSet<_> = basis.iter().cloned().collect();
            assert_eq!(distinct.len(), basis.len());
            assert!(basis.iter().all(|m| m.degree() <= d && m.arity() == n));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Sums of squares of random quadratics are recognized, and the Gram
    /// matrix reproduces the input.
    #[test]
    fn sos_round_trip(coeffs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 6), 1..4)) {
        let s = VariableSpace::new(["x", "y"]).unwrap();
        let basis = monomial_basis(2, 2);
        let mut target = Polynomial::zero(&s);
        for c in &coeffs {
            let q = Polynomial::from_terms(&s, basis.iter().cloned().zip(c.iter().copied())).unwrap();
            target = &target + &(&q * &q);
        }
        let mut prog = SosProgram::new();
        prog.add_sos_on_set("sos", AffinePolyExpr::constant(target), &SemiAlgebraicSet::whole(&s, "R"), None).unwrap();
        let compiled = prog.compile().unwrap();
        let sol = solve(&compiled.sdp, &SolveOptions::default()).unwrap();
        prop_assert!(matches!(sol.status, SdpStatus::Optimal | SdpStatus::NearOptimal), "{:?}", sol.status);
        let ex = compiled.extract(&prog, &sol);
        let g = &ex.grams[0];
        prop_assert!(g.residual() <= 1e-6, "residual {}", g.residual());
        prop_assert!(g.min_eigenvalues().iter().all(|&e| e >= -1e-8));
    }
}

fn random_system(n: usize, edges: &[bool], init: usize, bad: &[bool]) -> Option<FiniteSystem> {
    let unsafe_states: BTreeSet<usize> = (0..n).filter(|&i| i != init && bad[i]).collect();
    if unsafe_states.is_empty() {
        return None;
    }
    let e: BTreeSet<(usize, usize)> = (0..n * n).filter(|&k| edges[k]).map(|k| (k / n, k % n)).collect();
    let names = (0..n).map(|i| format!("s{i}")).collect();
    let embedding = (0..n).map(|i| i as f64).collect();
    Some(FiniteSystem::new(names, embedding, [init].into(), unsafe_states, e).unwrap())
}

/// Every certificate found for a random system must agree with BFS.
#[test]
fn discrete_soundness_harness() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig { cases: 200, ..ProptestConfig::default() });
    let strategy = (2usize..=6).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(prop::bool::weighted(0.3), n * n),
            0..n,
            prop::collection::vec(prop::bool::weighted(0.4), n),
        )
    });
    let grid = [0.0, 0.5, 1.0];
    let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let stats = std::cell::RefCell::new([0usize; 4]);
    runner
        .run(&strategy, |(n, edges, init, bad)| {
            let Some(ts) = random_system(n, &edges, init, &bad) else {
                return Ok(());
            };
            let r = safety_oracle_consistency(&ts, &grid, 1e-3, &swap).unwrap();
            prop_assert!(r.consistent, "certificate for a system reaching {:?}", r.reachable_unsafe);
            let safe = ts.unsafe_states().is_disjoint(&reach(&ts));
            prop_assert_eq!(safe, r.reachable_unsafe.is_empty());
            let mut st = stats.borrow_mut();
            st[0] += 1;
            st[1] += usize::from(safe);
            st[2] += usize::from(r.cc_lambda.is_some());
            st[3] += usize::from(r.vcc_found);
            Ok(())
        })
        .unwrap();
    let stats = stats.into_inner();
    println!("systems {} safe {} cc {} vcc {}", stats[0], stats[1], stats[2], stats[3]);
    assert!(stats[2] + stats[3] > 0, "the harness never exercised a certificate");
}
