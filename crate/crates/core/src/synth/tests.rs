use super::*;
use crate::semialg::{box_set, complement_of_union, AxisBox};

fn bx(lo: &[f64], hi: &[f64]) -> AxisBox {
    AxisBox::new(lo.to_vec(), hi.to_vec()).unwrap()
}

fn rotation() -> DynamicalSystem {
    let s = VariableSpace::new(["x1", "x2"]).unwrap();
    let f = vec![Polynomial::var(&s, 1), Polynomial::var(&s, 0).scale(-1.0)];
    let x = box_set(&s, &bx(&[-4.0, -4.0], &[4.0, 4.0]), "X").unwrap();
    let x0 = box_set(&s, &bx(&[0.0, -3.5], &[0.5, -3.0]), "X0").unwrap();
    DynamicalSystem::new(&s, f, x, x0).unwrap()
}

fn unsafe_boxes() -> Vec<AxisBox> {
    vec![bx(&[-4.0, 1.0], &[-1.0, 4.0]), bx(&[1.0, -4.0], &[4.0, -1.0])]
}

fn safety() -> Problem {
    let sys = rotation();
    let xu = RegionUnion::from_boxes(sys.space(), &unsafe_boxes(), "Xu").unwrap();
    Problem::safety(sys, xu)
}

/// Contracting map with the region around the origin visited forever and a
/// corner visited finitely often.
fn persistence() -> Problem {
    let s = VariableSpace::new(["x1", "x2"]).unwrap();
    let f = vec![Polynomial::var(&s, 0).scale(0.5), Polynomial::var(&s, 1).scale(0.5)];
    let x = box_set(&s, &bx(&[-1.0, -1.0], &[1.0, 1.0]), "X").unwrap();
    let x0 = box_set(&s, &bx(&[0.5, 0.5], &[1.0, 1.0]), "X0").unwrap();
    let sys = DynamicalSystem::new(&s, f, x, x0).unwrap();
    let vf = RegionUnion::from_boxes(&s, &[bx(&[0.5, 0.5], &[1.0, 1.0])], "VF").unwrap();
    Problem::persistence(sys, vf)
}

/// Safety of the rotation phrased over letters `s` (safe) and `u` (unsafe).
fn ltl() -> Problem {
    let sys = rotation();
    let s = sys.space().clone();
    let safe = complement_of_union(&s, sys.bounds(), &unsafe_boxes(), "s").unwrap();
    let bad = RegionUnion::from_boxes(&s, &unsafe_boxes(), "u").unwrap();
    let lab = LabelingPartition::new(vec![("u".into(), bad), ("s".into(), safe)]).unwrap();
    let aut = BuchiAutomaton::new(
        &["q0", "q1"],
        &["s", "u"],
        &["q0"],
        &["q1"],
        &[("q0", "s", "q0"), ("q0", "u", "q1"), ("q1", "u", "q1")],
    )
    .unwrap();
    Problem::ltl(sys, lab, aut)
}

fn opts(d: u32) -> SynthOptions {
    SynthOptions::with_degree(d)
}

#[test]
fn kind_names_round_trip() {
    for k in CertificateKind::ALL {
        assert_eq!(CertificateKind::from_name(k.name()), Some(k));
    }
    assert_eq!(CertificateKind::from_name("nope"), None);
}

#[test]
fn negative_matrix_rejected() {
    let err = build_vcc_safety(&safety(), &vec![vec![0.0, -1.0], vec![1.0, 0.0]], &[0, 1], &opts(2)).unwrap_err();
    assert!(err.to_string().contains("nonnegative"), "{err}");
}

#[test]
fn assignment_out_of_range_rejected() {
    assert!(build_vcc_safety(&safety(), &identity(2), &[0, 2], &opts(2)).is_err());
    assert!(build_vcc_safety(&safety(), &identity(2), &[0], &opts(2)).is_err());
}

#[test]
fn wrong_spec_rejected() {
    assert!(build_vcc_persistence(&safety(), &identity(1), &[1.0], &[1.0], &[0], &opts(2)).is_err());
    assert!(build_vcbrf_ltl(&safety(), &identity(1), &zeros(1), &zeros(1), &opts(2)).is_err());
}

#[test]
fn reduction_safety() {
    let p = safety();
    for lambda in [0.0, 0.5, 1.0] {
        let v = build_vcc_safety(&p, &vec![vec![lambda]], &[0, 0], &opts(2)).unwrap();
        let s = build_cc_safety(&p, lambda, &opts(2)).unwrap();
        assert_eq!(v.canonical_sdp().unwrap(), s.canonical_sdp().unwrap(), "lambda {lambda}");
    }
}

#[test]
fn reduction_persistence() {
    let p = persistence();
    let v = build_vcc_persistence(&p, &identity(1), &[1.0], &[0.5], &[0], &opts(2)).unwrap();
    let s = build_cc_persistence(&p, 1.0, 1.0, 0.5, &opts(2)).unwrap();
    assert_eq!(v.canonical_sdp().unwrap(), s.canonical_sdp().unwrap());
    let v = build_vcbrf_persistence(&p, &identity(1), &zeros(1), &zeros(1), &opts(2)).unwrap();
    let s = build_brf_persistence(&p, 1.0, &opts(2)).unwrap();
    assert_eq!(v.canonical_sdp().unwrap(), s.canonical_sdp().unwrap());
}

#[test]
fn reduction_ltl() {
    let p = ltl();
    let v = build_vcbrf_ltl(&p, &identity(1), &zeros(1), &zeros(1), &opts(2)).unwrap();
    let s = build_brf_ltl(&p, 1.0, &opts(2)).unwrap();
    assert_eq!(v.canonical_sdp().unwrap(), s.canonical_sdp().unwrap());
    let v = build_vcc_ltl(&p, &identity(1), &[1.0], &[1.0], &[0], &opts(2)).unwrap();
    let s = build_cc_ltl(&p, 1.0, 1.0, 1.0, &opts(2)).unwrap();
    assert_eq!(v.canonical_sdp().unwrap(), s.canonical_sdp().unwrap());
}

#[test]
fn vcc_safety_sizes() {
    let b = build_vcc_safety(&safety(), &vec![vec![0.0, 1.0], vec![1.0, 0.0]], &[0, 1], &opts(3)).unwrap();
    let size = b.size_report();
    // Two step, two transitivity (one A entry each) and two exclusion constraints.
    assert_eq!(size.constraints, 6);
    assert_eq!(b.templates.len(), 2);
    assert_eq!(b.eta.len(), 2);
}

#[test]
fn vcc_safety_rotation_found() {
    let p = safety();
    let r = synth_vcc_safety(&p, &vec![vec![0.0, 1.0], vec![1.0, 0.0]], &[0, 1], &opts(3)).unwrap();
    let cert = r.outcome.certificate().expect("certificate");
    assert_eq!(cert.k, 2);
    assert!(cert.eta.iter().all(|e| *e >= 1e-3 - 1e-9));
    assert_eq!(r.audit.unwrap().verdict, Verdict::Pass);
}

#[test]
fn linear_closure_not_found() {
    let r = synth_scalar_cc(&safety(), 1.0, 1.0, 1.0, &opts(1)).unwrap();
    assert!(matches!(r.outcome, Outcome::NotFound(_)), "{:?}", r.outcome.label());
}

#[test]
fn guardrail_skips() {
    let o = SynthOptions { max_rows: 10, ..opts(2) };
    let r = synth_vcc_safety(&safety(), &identity(1), &[0, 0], &o).unwrap();
    assert!(matches!(r.outcome, Outcome::Skipped(_)));
    assert!(r.stats.is_none());
}

#[test]
fn brf_persistence_found() {
    let p = persistence();
    let r = synth_vcbrf_persistence(&p, &zeros(1), &zeros(1), &zeros(1), &opts(2)).unwrap();
    assert!(r.is_certificate(), "{:?}", r.outcome);
}

#[test]
fn empty_vf_has_no_eta() {
    let mut p = persistence();
    p.spec = Spec::Persistence { vf: RegionUnion::empty(p.sys.space()) };
    let b = build_vcbrf_persistence(&p, &identity(1), &zeros(1), &zeros(1), &opts(2)).unwrap();
    assert!(b.eta.is_empty());
}

#[test]
fn sweep_stops_at_first_certificate() {
    let p = safety();
    let swap = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]];
    let attempts = sweep(&p, SweepTask::VccSafety, &[3, 2], &[2], &[swap], &SynthOptions::default(), false).unwrap();
    assert_eq!(attempts.first().unwrap().cell.degree, 2);
    assert!(attempts.last().unwrap().result.is_certificate());
    assert!(attempts.iter().rev().skip(1).all(|a| !a.result.is_certificate()));
}

#[test]
fn sweep_requires_candidates() {
    let err = sweep(&safety(), SweepTask::VccSafety, &[2], &[2], &[], &SynthOptions::default(), false);
    assert!(err.is_err());
}

#[test]
fn vcbrf_ltl_toy_found() {
    let r = synth_vcbrf_ltl(&ltl(), &zeros(1), &zeros(1), &zeros(1), &opts(2)).unwrap();
    assert!(r.is_certificate(), "{:?}", r.outcome);
    let cert = r.outcome.certificate().unwrap();
    assert_eq!(cert.functions.len(), 2);
}
