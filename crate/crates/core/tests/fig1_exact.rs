//! Exact check of the printed five-state certificate on every instance.

use vcert::audit::Verdict;
use vcert::discrete::{fig1_printed, vcc_audit_discrete, DiscreteAuditOptions, FiniteSystem, Instances};

#[test]
#[ignore = "unattainable: the printed coefficients are rounded; see the decisions ledger"]
fn printed_certificate_passes_exhaustively() {
    let ts = FiniteSystem::fig1();
    let (funcs, a, eta) = fig1_printed();
    let audit =
        vcc_audit_discrete(&ts, &funcs, &a, eta, &Instances::full(&ts), &DiscreteAuditOptions::default()).unwrap();
    let first = audit.failures().next().map(|r| r.id.clone());
    assert_eq!(audit.verdict, Verdict::Pass, "first failing instance {first:?}");
}
