//! Finite transition systems with a real embedding of their states:
//! reachability by breadth-first search, quadratic closure certificates as
//! linear programs, and exact audits of vector closure certificates.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::audit::Verdict;
use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial, VariableSpace};
use crate::sdp::{solve, Entry, Row, SdpProblem, SdpStatus, SolveOptions};
use crate::synth::{validate_matrix, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSystem {
    names: Vec<String>,
    embedding: Vec<f64>,
    initial: BTreeSet<usize>,
    unsafe_states: BTreeSet<usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl FiniteSystem {
    pub fn new(
        names: Vec<String>,
        embedding: Vec<f64>,
        initial: BTreeSet<usize>,
        unsafe_states: BTreeSet<usize>,
        edges: BTreeSet<(usize, usize)>,
    ) -> Result<Self> {
        let n = names.len();
        if embedding.len() != n {
            return Err(Error::validation(format!("{} states but {} embedding values", n, embedding.len())));
        }
        for (i, v) in embedding.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!("embedding of {} is not finite", names[i])));
            }
            if embedding[..i].contains(v) {
                return Err(Error::validation(format!("embedding value {v} used twice")));
            }
        }
        let bad = |s: &BTreeSet<usize>| s.iter().any(|&i| i >= n);
        if bad(&initial) || bad(&unsafe_states) || edges.iter().any(|&(a, b)| a >= n || b >= n) {
            return Err(Error::validation("state index out of range"));
        }
        if let Some(q) = initial.intersection(&unsafe_states).next() {
            return Err(Error::validation(format!("state {} is both initial and unsafe", names[*q])));
        }
        Ok(Self { names, embedding, initial, unsafe_states, edges })
    }

    /// The five-state separation example: `q_i` embedded at `i`, `q0`
    /// initial, `q1` and `q3` unsafe and unreachable.
    pub fn fig1() -> Self {
        let edges = [(0, 0), (0, 2), (2, 0), (2, 4), (4, 4), (1, 2), (3, 4)];
        Self::new(
            (0..5).map(|i| format!("q{i}")).collect(),
            (0..5).map(f64::from).collect(),
            [0].into(),
            [1, 3].into(),
            edges.into_iter().collect(),
        )
        .expect("valid example")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    pub fn initial(&self) -> &BTreeSet<usize> {
        &self.initial
    }

    pub fn unsafe_states(&self) -> &BTreeSet<usize> {
        &self.unsafe_states
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::validation(format!("unknown state `{name}`")))
    }
}

/// States reachable from the initial set (including it).
pub fn reach(ts: &FiniteSystem) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = ts.initial.clone();
    let mut queue: VecDeque<usize> = ts.initial.iter().copied().collect();
    while let Some(q) = queue.pop_front() {
        for &(_, b) in ts.edges.range((q, 0)..=(q, usize::MAX)) {
            if seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    seen
}

/// Which closure conditions are instantiated, as state indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instances {
    /// `T(x, x') >= 0` for a transition `x -> x'`.
    pub step: Vec<(usize, usize)>,
    /// `T(x, y) >= A T(x', y)` for a transition `x -> x'` and a state `y`.
    pub trans: Vec<(usize, usize, usize)>,
    /// `T(x0, xu) <= -eta` for initial `x0` and unsafe `xu`.
    pub exclusion: Vec<(usize, usize)>,
}

impl Instances {
    /// Every transition, every `y`, every initial/unsafe pair.
    pub fn full(ts: &FiniteSystem) -> Self {
        let step: Vec<_> = ts.edges.iter().copied().collect();
        let trans = step.iter().flat_map(|&(a, b)| (0..ts.len()).map(move |y| (a, b, y))).collect();
        let exclusion = ts.initial.iter().flat_map(|&a| ts.unsafe_states.iter().map(move |&u| (a, u))).collect();
        Self { step, trans, exclusion }
    }

    /// The six inequalities used to refute a quadratic closure certificate
    /// for [`FiniteSystem::fig1`].
    pub fn fig1_proof() -> Self {
        Self { step: vec![(0, 2), (2, 4)], trans: vec![(0, 2, 0), (0, 2, 4)], exclusion: vec![(0, 1), (0, 3)] }
    }

    pub fn validate(&self, ts: &FiniteSystem) -> Result<()> {
        let n = ts.len();
        for &(a, b) in &self.step {
            if !ts.edges.contains(&(a, b)) {
                return Err(Error::validation(format!("{} -> {} is not a transition", ts.names[a], ts.names[b])));
            }
        }
        for &(a, b, y) in &self.trans {
            if !ts.edges.contains(&(a, b)) || y >= n {
                return Err(Error::validation(format!("bad transitivity instance ({a}, {b}, {y})")));
            }
        }
        for &(a, u) in &self.exclusion {
            if !ts.initial.contains(&a) || !ts.unsafe_states.contains(&u) {
                return Err(Error::validation(format!("bad exclusion instance ({a}, {u})")));
            }
        }
        Ok(())
    }
}

/// `(x, y)`, the argument space of pair templates.
pub fn pair_space() -> VariableSpace {
    VariableSpace::new(["x", "y"]).expect("distinct names")
}

/// Exponents of the quadratic pair basis `1, x, y, x^2, xy, y^2`.
const QUAD: [[u32; 2]; 6] = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];

fn quad_basis(x: f64, y: f64) -> [f64; 6] {
    [1.0, x, y, x * x, x * y, y * y]
}

/// Polynomial over [`pair_space`] from quadratic basis coefficients.
pub fn quad_poly(c: &[f64]) -> Polynomial {
    let s = pair_space();
    let mut p = Polynomial::zero(&s);
    for (e, v) in QUAD.iter().zip(c) {
        p.add_term(Monomial::new(e), *v);
    }
    p
}

#[derive(Clone, Debug)]
pub struct DiscreteRecord {
    pub id: String,
    /// Certificate value the margin is read from (the left-hand side).
    pub value: f64,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct DiscreteAudit {
    pub records: Vec<DiscreteRecord>,
    pub worst: f64,
    pub scale: f64,
    pub verdict: Verdict,
}

impl DiscreteAudit {
    pub fn record(&self, id: &str) -> Option<&DiscreteRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &DiscreteRecord> {
        self.records.iter().filter(|r| r.margin < 0.0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(s, "instance {} value {:.9} margin {:.9}", r.id, r.value, r.margin);
        }
        let _ = writeln!(s, "worst {:.9} scale {:.6} verdict {}", self.worst, self.scale, self.verdict);
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct DiscreteAuditOptions {
    /// Exclusion pair `p` must be witnessed by function `assignment[p]`;
    /// `None` accepts any function.
    pub assignment: Option<Vec<usize>>,
    /// Accept margins down to `-rounding_tol * scale` as passing with rounding.
    pub rounding_tol: Option<f64>,
}

/// Exact evaluation of the vector closure conditions on the given
/// instances, one record per instance and component.
pub fn vcc_audit_discrete(
    ts: &FiniteSystem,
    funcs: &[Polynomial],
    a: &Matrix,
    eta: f64,
    inst: &Instances,
    opts: &DiscreteAuditOptions,
) -> Result<DiscreteAudit> {
    let k = funcs.len();
    if k == 0 {
        return Err(Error::validation("no functions to audit"));
    }
    validate_matrix("A", a, k)?;
    if !(eta > 0.0) {
        return Err(Error::validation("eta must be positive"));
    }
    let space = pair_space();
    if funcs.iter().any(|f| f.space() != &space) {
        return Err(Error::structural("functions must be over the pair space (x, y)"));
    }
    inst.validate(ts)?;
    if let Some(asg) = &opts.assignment {
        if asg.len() != inst.exclusion.len() || asg.iter().any(|&j| j >= k) {
            return Err(Error::validation("assignment must map every exclusion pair to a function"));
        }
    }
    let e = &ts.embedding;
    let name = &ts.names;
    let t = |i: usize, p: usize, q: usize| funcs[i].eval_unchecked(&[e[p], e[q]]);
    let mut records = Vec::new();
    for &(x, x1) in &inst.step {
        for i in 0..k {
            let v = t(i, x, x1);
            records.push(DiscreteRecord {
                id: format!("step[{}->{}][{}]", name[x], name[x1], i + 1),
                value: v,
                margin: v,
            });
        }
    }
    for &(x, x1, y) in &inst.trans {
        for i in 0..k {
            let v = t(i, x, y);
            let rhs: f64 = (0..k).map(|j| a[i][j] * t(j, x1, y)).sum();
            records.push(DiscreteRecord {
                id: format!("trans[{}->{},{}][{}]", name[x], name[x1], name[y], i + 1),
                value: v,
                margin: v - rhs,
            });
        }
    }
    for (p, &(x0, xu)) in inst.exclusion.iter().enumerate() {
        let pick = match &opts.assignment {
            Some(asg) => asg[p],
            None => (0..k).min_by(|&i, &j| t(i, x0, xu).total_cmp(&t(j, x0, xu))).unwrap_or(0),
        };
        let v = t(pick, x0, xu);
        records.push(DiscreteRecord {
            id: format!("exclusion[{},{}][{}]", name[x0], name[xu], pick + 1),
            value: v,
            margin: -eta - v,
        });
    }
    let worst = records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let scale = funcs.iter().map(Polynomial::max_abs_coeff).fold(0.0, f64::max);
    let verdict = if worst >= 0.0 {
        Verdict::Pass
    } else if opts.rounding_tol.is_some_and(|tol| worst >= -tol * scale) {
        Verdict::PassWithRounding
    } else {
        Verdict::Fail
    };
    Ok(DiscreteAudit { records, worst, scale, verdict })
}

/// Bound on the magnitude of LP template coefficients.
const COEF_BOUND: f64 = 1e4;

/// Solution of `max t` subject to `a_r . c >= b_r + t`, `|c| <= COEF_BOUND`, `t <= 1`.
struct MarginLp {
    status: SdpStatus,
    margin: f64,
    coeffs: Vec<f64>,
}

fn solve_margin_lp(n: usize, rows: &[(Vec<f64>, f64)]) -> Result<MarginLp> {
    let m = rows.len() + 2 * n + 1;
    let mut p = SdpProblem::new(vec![1; m], n + 1);
    let t = n;
    p.c_free[t] = -1.0;
    let slack = |b: usize, v: f64| Entry { block: b, r: 0, c: 0, v };
    for (r, (a, b)) in rows.iter().enumerate() {
        let mut free: Vec<(usize, f64)> =
            a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect();
        free.push((t, -1.0));
        p.rows.push(Row { entries: vec![slack(r, -1.0)], free, rhs: *b });
    }
    for i in 0..n {
        for (j, sign) in [1.0, -1.0].into_iter().enumerate() {
            let b = rows.len() + 2 * i + j;
            p.rows.push(Row { entries: vec![slack(b, 1.0)], free: vec![(i, sign)], rhs: COEF_BOUND });
        }
    }
    p.rows.push(Row { entries: vec![slack(m - 1, 1.0)], free: vec![(t, 1.0)], rhs: 1.0 });
    let sol = solve(&p, &SolveOptions::default())?;
    Ok(MarginLp { status: sol.status, margin: sol.free[t], coeffs: sol.free[..n].to_vec() })
}

fn lp_rows(ts: &FiniteSystem, a: &Matrix, eta: f64, inst: &Instances, assignment: &[usize]) -> Vec<(Vec<f64>, f64)> {
    let k = a.len();
    let n = 6 * k;
    let e = &ts.embedding;
    let put = |row: &mut Vec<f64>, i: usize, p: usize, q: usize, w: f64| {
        for (o, v) in quad_basis(e[p], e[q]).iter().enumerate() {
            row[6 * i + o] += w * v;
        }
    };
    let mut rows = Vec::new();
    for &(x, x1) in &inst.step {
        for i in 0..k {
            let mut r = vec![0.0; n];
            put(&mut r, i, x, x1, 1.0);
            rows.push((r, 0.0));
        }
    }
    for &(x, x1, y) in &inst.trans {
        for i in 0..k {
            let mut r = vec![0.0; n];
            put(&mut r, i, x, y, 1.0);
            for j in 0..k {
                if a[i][j] != 0.0 {
                    put(&mut r, j, x1, y, -a[i][j]);
                }
            }
            rows.push((r, 0.0));
        }
    }
    for (p, &(x0, xu)) in inst.exclusion.iter().enumerate() {
        let mut r = vec![0.0; n];
        put(&mut r, assignment[p], x0, xu, -1.0);
        rows.push((r, eta));
    }
    rows
}

/// Outcome of a fixed-matrix quadratic VCC search.
#[derive(Clone, Debug)]
pub enum QuadraticVcc {
    /// Functions passing the exact audit.
    Found {
        funcs: Vec<Polynomial>,
        margin: f64,
        audit: DiscreteAudit,
    },
    NotFound {
        margin: f64,
        status: SdpStatus,
    },
}

impl QuadraticVcc {
    pub fn is_found(&self) -> bool {
        matches!(self, QuadraticVcc::Found { .. })
    }
}

/// Search quadratic `T_1..T_k` for fixed `A` by maximizing the smallest
/// margin over the instances. Found only when the exact audit passes.
pub fn quadratic_vcc(
    ts: &FiniteSystem,
    a: &Matrix,
    eta: f64,
    inst: &Instances,
    assignment: &[usize],
) -> Result<QuadraticVcc> {
    let k = a.len();
    validate_matrix("A", a, k)?;
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if !(eta > 0.0) {
        return Err(Error::validation("eta must be positive (strictness of the exclusion condition)"));
    }
    inst.validate(ts)?;
    if assignment.len() != inst.exclusion.len() || assignment.iter().any(|&j| j >= k) {
        return Err(Error::validation("assignment must map every exclusion pair to a function"));
    }
    let rows = lp_rows(ts, a, eta, inst, assignment);
    if rows.is_empty() {
        let funcs = vec![quad_poly(&[0.0; 6]); k];
        let opts = DiscreteAuditOptions { assignment: Some(assignment.to_vec()), rounding_tol: None };
        let audit = vcc_audit_discrete(ts, &funcs, a, eta, inst, &opts)?;
        return Ok(QuadraticVcc::Found { funcs, margin: 1.0, audit });
    }
    let lp = solve_margin_lp(6 * k, &rows)?;
    let solved = matches!(lp.status, SdpStatus::Optimal | SdpStatus::NearOptimal);
    if solved && lp.margin > 0.0 {
        let funcs: Vec<Polynomial> = lp.coeffs.chunks(6).map(quad_poly).collect();
        let opts = DiscreteAuditOptions { assignment: Some(assignment.to_vec()), rounding_tol: None };
        let audit = vcc_audit_discrete(ts, &funcs, a, eta, inst, &opts)?;
        if audit.verdict == Verdict::Pass {
            return Ok(QuadraticVcc::Found { funcs, margin: lp.margin, audit });
        }
    }
    Ok(QuadraticVcc::NotFound { margin: lp.margin, status: lp.status })
}

#[derive(Clone, Debug)]
pub enum CcFeasibility {
    FeasibleAt {
        lambda: f64,
        t: Polynomial,
        audit: DiscreteAudit,
    },
    /// Best LP margin at every grid point, all nonpositive.
    InfeasibleOnGrid {
        margins: Vec<(f64, f64)>,
    },
}

impl CcFeasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CcFeasibility::FeasibleAt { .. })
    }
}

/// `0, step, 2 step, ..., hi` (inclusive, up to rounding).
pub fn lambda_grid(hi: f64, step: f64) -> Vec<f64> {
    let n = (hi / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect()
}

/// Quadratic scalar closure certificate search on a grid of fixed `lambda`;
/// each grid point is an independent linear program.
pub fn cc_feasible_quadratic(ts: &FiniteSystem, grid: &[f64], eta: f64, inst: &Instances) -> Result<CcFeasibility> {
    if grid.is_empty() {
        return Err(Error::validation("lambda grid is empty"));
    }
    if grid.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::validation("lambda values must be nonnegative"));
    }
    if !(eta > 0.0) {
        return Err(Error::validation("eta must be positive (strictness of the exclusion condition)"));
    }
    let assignment = vec![0; inst.exclusion.len()];
    let mut margins = Vec::with_capacity(grid.len());
    for &lambda in grid {
        match quadratic_vcc(ts, &vec![vec![lambda]], eta, inst, &assignment)? {
            QuadraticVcc::Found { mut funcs, audit, .. } => {
                return Ok(CcFeasibility::FeasibleAt { lambda, t: funcs.remove(0), audit });
            }
            QuadraticVcc::NotFound { margin, .. } => margins.push((lambda, margin)),
        }
    }
    Ok(CcFeasibility::InfeasibleOnGrid { margins })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub reachable_unsafe: Vec<usize>,
    /// Grid value at which a quadratic closure certificate passed the exact audit.
    pub cc_lambda: Option<f64>,
    pub vcc_found: bool,
    /// False only if some certificate passed while an unsafe state is reachable.
    pub consistent: bool,
}

/// Cross-check certificate search on the full instance set against BFS.
pub fn safety_oracle_consistency(ts: &FiniteSystem, grid: &[f64], eta: f64, vcc_a: &Matrix) -> Result<OracleReport> {
    let reached = reach(ts);
    let reachable_unsafe: Vec<usize> = ts.unsafe_states.intersection(&reached).copied().collect();
    let inst = Instances::full(ts);
    let cc_lambda = match cc_feasible_quadratic(ts, grid, eta, &inst)? {
        CcFeasibility::FeasibleAt { lambda, .. } => Some(lambda),
        CcFeasibility::InfeasibleOnGrid { .. } => None,
    };
    let k = vcc_a.len();
    let assignment: Vec<usize> = (0..inst.exclusion.len()).map(|p| p % k.max(1)).collect();
    let vcc_found = quadratic_vcc(ts, vcc_a, eta, &inst, &assignment)?.is_found();
    let certified = cc_lambda.is_some() || vcc_found;
    Ok(OracleReport {
        consistent: !(certified && !reachable_unsafe.is_empty()),
        reachable_unsafe,
        cc_lambda,
        vcc_found,
    })
}

/// The printed two-component certificate for [`FiniteSystem::fig1`].
pub fn fig1_printed() -> (Vec<Polynomial>, Matrix, f64) {
    let s = pair_space();
    let t1 = Polynomial::parse(&s, "847.87*x*y - 883.63*y^2 - 3391.47*x + 4442.96*y - 3633.71").expect("valid");
    let t2 = Polynomial::parse(&s, "0.080*x*y + 0.081*y^2 - 0.319*x - 0.564*y + 0.965").expect("valid");
    (vec![t1, t2], vec![vec![4.703, 4.703], vec![1.621, 0.354]], 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> FiniteSystem {
        FiniteSystem::new(
            vec!["s0".into(), "s1".into(), "s2".into()],
            vec![0.0, 1.0, 2.0],
            [0].into(),
            [2].into(),
            [(0, 1)].into(),
        )
        .unwrap()
    }

    #[test]
    fn fig1_reach() {
        assert_eq!(reach(&FiniteSystem::fig1()), [0, 2, 4].into());
    }

    #[test]
    fn no_edges_reach_initial_only() {
        let mut ts = chain();
        ts.edges.clear();
        assert_eq!(reach(&ts), [0].into());
    }

    #[test]
    fn complete_graph_reaches_all() {
        let edges = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).collect();
        let ts = FiniteSystem::new(
            (0..4).map(|i| format!("s{i}")).collect(),
            vec![0.0, 1.0, 2.0, 3.0],
            [0].into(),
            [].into(),
            edges,
        )
        .unwrap();
        assert_eq!(reach(&ts).len(), 4);
    }

    #[test]
    fn constructor_validates() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(FiniteSystem::new(names.clone(), vec![1.0, 1.0], [0].into(), [].into(), [].into()).is_err());
        assert!(FiniteSystem::new(names.clone(), vec![0.0, 1.0], [0].into(), [0].into(), [].into()).is_err());
        assert!(FiniteSystem::new(names, vec![0.0, 1.0], [0].into(), [].into(), [(0, 5)].into()).is_err());
    }

    #[test]
    fn printed_spot_values() {
        let (t, _, _) = fig1_printed();
        assert!((t[0].eval(&[0.0, 2.0]).unwrap() - 1717.69).abs() < 1e-9);
        assert!((t[0].eval(&[0.0, 1.0]).unwrap() + 74.38).abs() < 1e-9);
        assert!((t[1].eval(&[0.0, 3.0]).unwrap() - 0.002).abs() < 1e-9);
    }

    #[test]
    fn printed_certificate_rounding_gap() {
        let ts = FiniteSystem::fig1();
        let (t, a, eta) = fig1_printed();
        let opts = DiscreteAuditOptions { assignment: Some(vec![0, 1]), rounding_tol: Some(0.05) };
        let r = vcc_audit_discrete(&ts, &t, &a, eta, &Instances::fig1_proof(), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::PassWithRounding, "{}", r.to_text());
        let ex = r.record("exclusion[q0,q3][2]").unwrap();
        assert!((ex.margin + 0.003).abs() < 1e-9);
        assert!((r.record("exclusion[q0,q1][1]").unwrap().margin - 74.379).abs() < 1e-9);
    }

    #[test]
    fn fig1_quadratic_cc_infeasible_on_grid() {
        let ts = FiniteSystem::fig1();
        let r = cc_feasible_quadratic(&ts, &lambda_grid(5.0, 0.1), 1e-4, &Instances::fig1_proof()).unwrap();
        match r {
            CcFeasibility::InfeasibleOnGrid { margins } => {
                assert_eq!(margins.len(), 51);
                assert!(margins.iter().all(|(_, m)| *m <= 0.0));
            }
            CcFeasibility::FeasibleAt { lambda, t, .. } => panic!("found at {lambda}: {}", t.to_text()),
        }
    }

    #[test]
    fn fig1_fixed_a_vcc_exists() {
        let ts = FiniteSystem::fig1();
        let (_, a, eta) = fig1_printed();
        let r = quadratic_vcc(&ts, &a, eta, &Instances::fig1_proof(), &[0, 1]).unwrap();
        assert!(r.is_found(), "{r:?}");
    }

    #[test]
    fn chain_cc_needs_positive_lambda() {
        let ts = chain();
        let r = cc_feasible_quadratic(&ts, &[0.0, 0.5], 1e-3, &Instances::full(&ts)).unwrap();
        match r {
            CcFeasibility::FeasibleAt { lambda, t, .. } => {
                // lambda = 0 forces T(s0, s2) >= 0 through the (s0 -> s1, s2) instance.
                assert_eq!(lambda, 0.5);
                assert!(t.eval(&[0.0, 2.0]).unwrap() <= -1e-3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eta_must_be_positive() {
        let ts = chain();
        assert!(cc_feasible_quadratic(&ts, &[0.0], 0.0, &Instances::full(&ts)).is_err());
    }

    #[test]
    fn identity_matrix_audits_components_independently() {
        let ts = FiniteSystem::fig1();
        let (t, _, eta) = fig1_printed();
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let inst = Instances::full(&ts);
        let both = vcc_audit_discrete(&ts, &t, &id, eta, &inst, &DiscreteAuditOptions::default()).unwrap();
        for (i, f) in t.iter().enumerate() {
            let single = vcc_audit_discrete(
                &ts,
                std::slice::from_ref(f),
                &vec![vec![1.0]],
                eta,
                &inst,
                &DiscreteAuditOptions::default(),
            )
            .unwrap();
            for r in single.records.iter().filter(|r| !r.id.starts_with("exclusion")) {
                let id = r.id.replace("[1]", &format!("[{}]", i + 1));
                assert_eq!(both.record(&id).unwrap().margin, r.margin);
            }
        }
    }

    #[test]
    fn large_eta_fails_with_witness() {
        let ts = FiniteSystem::fig1();
        let (t, a, _) = fig1_printed();
        let r =
            vcc_audit_discrete(&ts, &t, &a, 1e6, &Instances::fig1_proof(), &DiscreteAuditOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.failures().any(|f| f.id.starts_with("exclusion")));
    }

    #[test]
    fn oracle_consistent_on_fig1() {
        let rep =
            safety_oracle_consistency(&FiniteSystem::fig1(), &[0.0, 1.0], 1e-3, &vec![vec![1.0, 1.0], vec![1.0, 1.0]])
                .unwrap();
        assert!(rep.reachable_unsafe.is_empty());
        assert!(rep.consistent);
    }
}
