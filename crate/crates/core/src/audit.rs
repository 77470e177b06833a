//! Numerical audit of certificates: the defining inequalities of each
//! certificate kind are evaluated on seeded samples of their domains, and
//! Gram matrices (when present) are checked for positive semidefiniteness
//! and for reproducing the constraint polynomial.
//!
//! Implications (`B >= 0 => ...`) are evaluated literally: samples where
//! the premise fails are counted as vacuous. Disjunctions over components
//! are evaluated at the assigned component, or at the best component when
//! [`AuditOptions::strict_disjunction`] is set.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, VariableSpace};
use crate::semialg::{product_in, sample_set, AxisBox, SamplerConfig, SemiAlgebraicSet};
use crate::sosprog::GramCertificate;
use crate::synth::{outside, pair_space, triple_space, CertificateKind, FnKey, Problem, Spec, VectorCertificate};
use crate::sysmodel::{product_constraint_instances, simulate, ProductInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditMode {
    /// Solver output: margins must be nonnegative up to `rel_tol * scale`.
    Synthesized,
    /// Coefficients printed with limited precision: margins down to
    /// `-rounding_tol * scale` are reported as passing with rounding.
    TranscribedRounded,
}

impl AuditMode {
    pub fn name(self) -> &'static str {
        match self {
            AuditMode::Synthesized => "synthesized",
            AuditMode::TranscribedRounded => "transcribed-rounded",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    pub mode: AuditMode,
    pub samples: usize,
    pub seed: u64,
    pub boundary_fraction: f64,
    pub rel_tol: f64,
    pub rounding_tol: f64,
    pub psd_tol: f64,
    /// Gram reconstruction residual allowed per unit of target scale.
    pub residual_tol: f64,
    pub strict_disjunction: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            mode: AuditMode::Synthesized,
            samples: 10_000,
            seed: 0,
            boundary_fraction: 0.2,
            rel_tol: 1e-6,
            rounding_tol: 0.05,
            psd_tol: 1e-8,
            residual_tol: 1e-6,
            strict_disjunction: false,
        }
    }
}

impl AuditOptions {
    pub fn transcribed() -> Self {
        Self { mode: AuditMode::TranscribedRounded, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    PassWithRounding,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::PassWithRounding => "pass-with-rounding",
            Verdict::Fail => "fail",
        })
    }
}

/// Sampled result for one condition instance.
#[derive(Clone, Debug)]
pub struct ConditionRecord {
    pub id: String,
    pub samples: usize,
    /// Samples where an implication's premise failed.
    pub vacuous: usize,
    pub scale: f64,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct GramRecord {
    pub label: String,
    pub min_eigenvalue: f64,
    pub residual: f64,
    pub scale: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct AuditReport {
    pub kind: CertificateKind,
    pub mode: AuditMode,
    pub conditions: Vec<ConditionRecord>,
    pub grams: Vec<GramRecord>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl AuditReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn worst(&self) -> Option<&ConditionRecord> {
        self.conditions.iter().min_by(|a, b| a.worst_margin.total_cmp(&b.worst_margin))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "audit {} mode {}", self.kind, self.mode.name());
        for c in &self.conditions {
            let _ = writeln!(
                s,
                "condition {} samples {} vacuous {} scale {:.6e} worst {:.9e} at {} {}",
                c.id,
                c.samples,
                c.vacuous,
                c.scale,
                c.worst_margin,
                fmt_point(&c.worst_point),
                c.verdict
            );
        }
        for g in &self.grams {
            let _ = writeln!(
                s,
                "gram {} min-eig {:.6e} residual {:.6e} scale {:.6e} {}",
                g.label, g.min_eigenvalue, g.residual, g.scale, g.verdict
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note {n}");
        }
        let _ = writeln!(s, "verdict {}", self.verdict);
        s
    }
}

pub(crate) fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(","))
}

/// Min eigenvalue and reconstruction residual of every Gram certificate.
pub fn gram_audit(grams: &[GramCertificate], opts: &AuditOptions) -> Vec<GramRecord> {
    grams
        .iter()
        .map(|g| {
            let min_eigenvalue = g.min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
            let residual = g.residual();
            let scale = g.target.max_abs_coeff().max(1.0);
            let ok = min_eigenvalue >= -opts.psd_tol && residual <= opts.residual_tol * scale;
            GramRecord {
                label: g.label.clone(),
                min_eigenvalue,
                residual,
                scale,
                verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            }
        })
        .collect()
}

type Margin<'a> = Box<dyn Fn(&[f64]) -> Option<f64> + 'a>;

struct Condition<'a> {
    id: String,
    domain: SemiAlgebraicSet,
    bbox: AxisBox,
    scale: f64,
    margin: Margin<'a>,
}

/// Evaluation helpers over a certificate.
struct Eval<'a> {
    cert: &'a VectorCertificate,
    n: usize,
}

impl Eval<'_> {
    fn at(&self, key: FnKey, parts: &[&[f64]]) -> f64 {
        match self.cert.functions.get(&key) {
            None => 0.0,
            Some(p) => {
                let mut v = Vec::with_capacity(self.n * parts.len());
                for q in parts {
                    v.extend_from_slice(q);
                }
                p.eval_unchecked(&v)
            }
        }
    }

    fn scale(&self, keys: &[FnKey]) -> f64 {
        keys.iter().filter_map(|k| self.cert.functions.get(k)).map(Polynomial::max_abs_coeff).fold(0.0, f64::max)
    }

    fn plain_keys(&self) -> Vec<FnKey> {
        (0..self.cert.k).map(FnKey::plain).collect()
    }
}

fn bbox_of(set: &SemiAlgebraicSet, fallback: &AxisBox) -> AxisBox {
    set.bounds().cloned().unwrap_or_else(|| fallback.clone())
}

fn domain(
    space: &VariableSpace,
    parts: &[&SemiAlgebraicSet],
    fallback: &AxisBox,
) -> Result<(SemiAlgebraicSet, AxisBox)> {
    let set = if parts.len() == 1 { parts[0].clone() } else { product_in(space, parts)? };
    let mut bbox = AxisBox { lo: Vec::new(), hi: Vec::new() };
    for p in parts {
        bbox = bbox.concat(&bbox_of(p, fallback));
    }
    Ok((set, bbox))
}

/// Audit `cert` against the defining conditions of its kind on `problem`.
pub fn check_certificate(cert: &VectorCertificate, problem: &Problem, opts: &AuditOptions) -> Result<AuditReport> {
    let conds = conditions(cert, problem, opts)?;
    let sampler = SamplerConfig { boundary_fraction: opts.boundary_fraction, ..SamplerConfig::default() };
    let mut records = Vec::with_capacity(conds.len());
    for (idx, c) in conds.iter().enumerate() {
        let seed = opts.seed.wrapping_add((idx as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let batch = sample_set(&c.domain, &c.bbox, opts.samples, seed, &sampler)?;
        let mut worst = f64::INFINITY;
        let mut worst_point = Vec::new();
        let mut vacuous = 0;
        for p in &batch.points {
            match (c.margin)(p) {
                None => vacuous += 1,
                Some(m) => {
                    if m < worst || worst_point.is_empty() {
                        worst = m;
                        worst_point = p.clone();
                    }
                }
            }
        }
        let verdict = grade(worst, c.scale, opts);
        records.push(ConditionRecord {
            id: c.id.clone(),
            samples: batch.points.len(),
            vacuous,
            scale: c.scale,
            worst_margin: worst,
            worst_point,
            verdict,
        });
    }
    let grams = gram_audit(&cert.grams, opts);
    let mut notes = Vec::new();
    if cert.grams.is_empty() {
        notes.push("no Gram matrices attached; sampled conditions only".into());
    }
    if records.iter().any(|r| r.samples == r.vacuous && r.samples > 0) {
        notes.push("some implications were vacuous on every sample".into());
    }
    let verdict =
        records.iter().map(|r| r.verdict).chain(grams.iter().map(|g| g.verdict)).max().unwrap_or(Verdict::Pass);
    Ok(AuditReport { kind: cert.kind, mode: opts.mode, conditions: records, grams, notes, verdict })
}

fn grade(worst: f64, scale: f64, opts: &AuditOptions) -> Verdict {
    if worst >= -opts.rel_tol * scale {
        Verdict::Pass
    } else if opts.mode == AuditMode::TranscribedRounded && worst >= -opts.rounding_tol * scale {
        Verdict::PassWithRounding
    } else {
        Verdict::Fail
    }
}

/// Re-evaluate the margin of condition `id` at `point`, as the audit did.
pub fn margin_at(
    cert: &VectorCertificate,
    problem: &Problem,
    opts: &AuditOptions,
    id: &str,
    point: &[f64],
) -> Result<Option<f64>> {
    let conds = conditions(cert, problem, opts)?;
    let c = conds.iter().find(|c| c.id == id).ok_or_else(|| Error::validation(format!("no condition {id}")))?;
    Ok((c.margin)(point))
}

fn min_over(k: usize, f: impl Fn(usize) -> f64) -> f64 {
    (0..k).map(f).fold(f64::INFINITY, f64::min)
}

fn max_over(k: usize, f: impl Fn(usize) -> f64) -> f64 {
    (0..k).map(f).fold(f64::NEG_INFINITY, f64::max)
}

fn conditions<'a>(
    cert: &'a VectorCertificate,
    problem: &'a Problem,
    opts: &AuditOptions,
) -> Result<Vec<Condition<'a>>> {
    let sys = &problem.sys;
    let n = sys.dim();
    let xs = sys.space().clone();
    let fb = sys.bounds().clone();
    let kind = cert.kind;
    let expected_space = if kind.is_closure() { pair_space(&xs)? } else { xs.clone() };
    if cert.space != expected_space {
        return Err(Error::validation(format!(
            "certificate space {:?} does not match the problem (expected {:?})",
            cert.space.names(),
            expected_space.names()
        )));
    }
    match (&problem.spec, kind) {
        (
            Spec::Safety { .. },
            CertificateKind::Bc | CertificateKind::Vbc | CertificateKind::CcSafety | CertificateKind::VccSafety,
        )
        | (
            Spec::Persistence { .. },
            CertificateKind::CcPersistence
            | CertificateKind::BrfPersistence
            | CertificateKind::VcbrfPersistence
            | CertificateKind::VccPersistence,
        )
        | (
            Spec::Ltl { .. },
            CertificateKind::CcLtl | CertificateKind::BrfLtl | CertificateKind::VcbrfLtl | CertificateKind::VccLtl,
        ) => {}
        _ => return Err(Error::validation(format!("a {kind} certificate does not fit this problem"))),
    }
    let ev = Eval { cert, n };
    let k = cert.k;
    let lambda = cert.lambda.unwrap_or(1.0);
    let eta = |j: usize| cert.eta.get(j).copied().unwrap_or(cert.eta_lb);
    let a_of = |name: &str| -> Result<Vec<Vec<f64>>> {
        if kind.is_scalar() {
            Ok(vec![vec![lambda]])
        } else {
            Ok(cert.matrix(name)?.clone())
        }
    };
    let assigned = |j: usize| cert.assignment.get(j).copied().unwrap_or(0);
    let strict = opts.strict_disjunction;
    let step = move |x: &[f64]| sys.step(x);
    let pair = pair_space(&xs)?;
    let triple = triple_space(&xs)?;
    let mut out: Vec<Condition<'a>> = Vec::new();
    let all = ev.plain_keys();
    let scale_all = ev.scale(&all);
    let ev = std::rc::Rc::new(ev);

    match kind {
        CertificateKind::Bc | CertificateKind::Vbc => {
            let unsafe_set = problem.unsafe_set()?;
            let a = if kind == CertificateKind::Bc { vec![vec![lambda]] } else { a_of("A")? };
            let (d, b) = domain(&xs, &[sys.init_set()], &fb)?;
            let e = ev.clone();
            out.push(Condition {
                id: "barrier-init".into(),
                domain: d,
                bbox: b,
                scale: scale_all,
                margin: Box::new(move |x| Some(min_over(k, |i| -e.at(FnKey::plain(i), &[x])))),
            });
            for (j, piece) in unsafe_set.pieces().iter().enumerate() {
                let (d, b) = domain(&xs, &[piece], &fb)?;
                let e = ev.clone();
                let eta_j = eta(j);
                out.push(Condition {
                    id: format!("barrier-unsafe[{}]", j + 1),
                    domain: d,
                    bbox: b,
                    scale: scale_all,
                    margin: Box::new(move |x| Some(max_over(k, |i| e.at(FnKey::plain(i), &[x])) - eta_j)),
                });
            }
            let (d, b) = domain(&xs, &[sys.state_set()], &fb)?;
            let e = ev.clone();
            out.push(Condition {
                id: "barrier-step".into(),
                domain: d,
                bbox: b,
                scale: scale_all,
                margin: Box::new(move |x| {
                    let fx = step(x);
                    Some(min_over(k, |i| {
                        let lin: f64 = (0..k).map(|j| a[i][j] * e.at(FnKey::plain(j), &[x])).sum();
                        lin - e.at(FnKey::plain(i), &[&fx])
                    }))
                }),
            });
        }
        CertificateKind::CcSafety
        | CertificateKind::VccSafety
        | CertificateKind::CcPersistence
        | CertificateKind::VccPersistence => {
            let a = a_of("A")?;
            let (d, b) = domain(&xs, &[sys.state_set()], &fb)?;
            let e = ev.clone();
            out.push(Condition {
                id: "closure-step".into(),
                domain: d,
                bbox: b,
                scale: scale_all,
                margin: Box::new(move |x| {
                    let fx = step(x);
                    Some(min_over(k, |i| e.at(FnKey::plain(i), &[x, &fx])))
                }),
            });
            let (d, b) = domain(&pair, &[sys.state_set(), sys.state_set()], &fb)?;
            let e = ev.clone();
            out.push(Condition {
                id: "closure-trans".into(),
                domain: d,
                bbox: b,
                scale: scale_all,
                margin: Box::new(move |p| {
                    let (x, y) = p.split_at(n);
                    let fx = step(x);
                    Some(min_over(k, |i| {
                        let rhs: f64 = (0..k)
                            .filter(|j| a[i][*j] != 0.0)
                            .map(|j| a[i][j] * e.at(FnKey::plain(j), &[&fx, y]))
                            .sum();
                        e.at(FnKey::plain(i), &[x, y]) - rhs
                    }))
                }),
            });
            if matches!(kind, CertificateKind::CcSafety | CertificateKind::VccSafety) {
                for (j, piece) in problem.unsafe_set()?.pieces().iter().enumerate() {
                    let (d, b) = domain(&pair, &[sys.init_set(), piece], &fb)?;
                    let e = ev.clone();
                    let (eta_j, aj) = (eta(j), assigned(j));
                    out.push(Condition {
                        id: format!("exclusion[{}]", j + 1),
                        domain: d,
                        bbox: b,
                        scale: scale_all.max(eta_j),
                        margin: Box::new(move |p| {
                            let (x0, xu) = p.split_at(n);
                            let m = |i: usize| -eta_j - e.at(FnKey::plain(i), &[x0, xu]);
                            Some(if strict { max_over(k, m) } else { m(aj) })
                        }),
                    });
                }
            } else {
                for (j, piece) in problem.vf()?.pieces().iter().enumerate() {
                    let (d, b) = domain(&triple, &[sys.init_set(), piece, piece], &fb)?;
                    let e = ev.clone();
                    let (eta_j, aj) = (eta(j), assigned(j));
                    out.push(Condition {
                        id: format!("decrease[{}]", j + 1),
                        domain: d,
                        bbox: b,
                        scale: scale_all.max(eta_j),
                        margin: Box::new(move |p| {
                            let (x0, rest) = p.split_at(n);
                            let (y, z) = rest.split_at(n);
                            let premise = (0..k).all(|i| {
                                e.at(FnKey::plain(i), &[x0, y]) >= 0.0 && e.at(FnKey::plain(i), &[y, z]) >= 0.0
                            });
                            if !premise {
                                return None;
                            }
                            let m =
                                |i: usize| e.at(FnKey::plain(i), &[x0, y]) - eta_j - e.at(FnKey::plain(i), &[x0, z]);
                            Some(if strict { max_over(k, m) } else { m(aj) })
                        }),
                    });
                }
            }
        }
        CertificateKind::BrfPersistence | CertificateKind::VcbrfPersistence => {
            let a1 = a_of("A1")?;
            let vf = problem.vf()?;
            let (d, b) = domain(&xs, &[sys.init_set()], &fb)?;
            let e = ev.clone();
            out.push(Condition {
                id: "rank-init".into(),
                domain: d,
                bbox: b,
                scale: scale_all,
                margin: Box::new(move |x| Some(min_over(k, |i| e.at(FnKey::plain(i), &[x])))),
            });
            let (d, b) = domain(&xs, &[sys.state_set()], &fb)?;
            let e = ev.clone();
            out.push(Condition {
                id: "rank-step".into(),
                domain: d,
                bbox: b,
                scale: scale_all,
                margin: Box::new(move |x| {
                    let fx = step(x);
                    Some(min_over(k, |i| {
                        let lin: f64 = (0..k).map(|j| a1[i][j] * e.at(FnKey::plain(j), &[x])).sum();
                        e.at(FnKey::plain(i), &[&fx]) - lin
                    }))
                }),
            });
            let eta0 = eta(0);
            let rest = outside(problem, vf)?;
            let decrease = move |x: &[f64], e: &Eval, by: f64| -> Option<f64> {
                if (0..k).any(|i| e.at(FnKey::plain(i), &[x]) < 0.0) {
                    return None;
                }
                let fx = step(x);
                Some(min_over(k, |i| e.at(FnKey::plain(i), &[x]) - e.at(FnKey::plain(i), &[&fx]) - by))
            };
            let decrease = std::rc::Rc::new(decrease);
            for (c, piece) in rest.iter().enumerate() {
                let (d, b) = domain(&xs, &[piece], &fb)?;
                let (e, dec) = (ev.clone(), decrease.clone());
                out.push(Condition {
                    id: format!("rank-stay[{}]", c + 1),
                    domain: d,
                    bbox: b,
                    scale: scale_all,
                    margin: Box::new(move |x| dec(x, &e, 0.0)),
                });
            }
            for (v, piece) in vf.pieces().iter().enumerate() {
                let (d, b) = domain(&xs, &[piece], &fb)?;
                let (e, dec) = (ev.clone(), decrease.clone());
                out.push(Condition {
                    id: format!("rank-decrease[{}]", v + 1),
                    domain: d,
                    bbox: b,
                    scale: scale_all.max(eta0),
                    margin: Box::new(move |x| dec(x, &e, eta0)),
                });
            }
        }
        CertificateKind::BrfLtl | CertificateKind::VcbrfLtl => {
            let a1 = std::rc::Rc::new(a_of("A1")?);
            let (lab, aut) = problem.ltl_parts()?;
            let inst = product_constraint_instances(sys, lab, aut, 0)?;
            let names = aut.states();
            let eta0 = eta(0);
            let all_keys: Vec<FnKey> = cert.functions.keys().copied().collect();
            let scale = ev.scale(&all_keys);
            for ins in &inst.ranking {
                match *ins {
                    ProductInstance::RankInit { q0 } => {
                        let (d, b) = domain(&xs, &[sys.init_set()], &fb)?;
                        let e = ev.clone();
                        out.push(Condition {
                            id: format!("rank-init[{}]", names[q0]),
                            domain: d,
                            bbox: b,
                            scale,
                            margin: Box::new(move |x| Some(min_over(k, |i| e.at(FnKey::state(i, q0), &[x])))),
                        });
                    }
                    ProductInstance::RankStep { letter, piece, from, to } => {
                        let dom = crate::synth::letter_piece(problem, letter, piece)?;
                        let (d, b) = domain(&xs, &[&dom], &fb)?;
                        let (e, a1) = (ev.clone(), a1.clone());
                        out.push(Condition {
                            id: format!(
                                "rank-step[{}:{}][{}->{}]",
                                aut.alphabet()[letter],
                                piece + 1,
                                names[from],
                                names[to]
                            ),
                            domain: d,
                            bbox: b,
                            scale,
                            margin: Box::new(move |x| {
                                let fx = step(x);
                                Some(min_over(k, |i| {
                                    let lin: f64 = (0..k).map(|j| a1[i][j] * e.at(FnKey::state(j, from), &[x])).sum();
                                    e.at(FnKey::state(i, to), &[&fx]) - lin
                                }))
                            }),
                        });
                    }
                    ProductInstance::RankStay { letter, piece, from, to }
                    | ProductInstance::RankAccept { letter, piece, from, to } => {
                        let accept = matches!(ins, ProductInstance::RankAccept { .. });
                        let by = if accept { eta0 } else { 0.0 };
                        let dom = crate::synth::letter_piece(problem, letter, piece)?;
                        let (d, b) = domain(&xs, &[&dom], &fb)?;
                        let e = ev.clone();
                        out.push(Condition {
                            id: format!(
                                "{}[{}:{}][{}->{}]",
                                if accept { "rank-decrease" } else { "rank-stay" },
                                aut.alphabet()[letter],
                                piece + 1,
                                names[from],
                                names[to]
                            ),
                            domain: d,
                            bbox: b,
                            scale: scale.max(by),
                            margin: Box::new(move |x| {
                                if (0..k).any(|i| e.at(FnKey::state(i, from), &[x]) < 0.0) {
                                    return None;
                                }
                                let fx = step(x);
                                Some(min_over(k, |i| {
                                    e.at(FnKey::state(i, from), &[x]) - e.at(FnKey::state(i, to), &[&fx]) - by
                                }))
                            }),
                        });
                    }
                    _ => {}
                }
            }
        }
        CertificateKind::CcLtl | CertificateKind::VccLtl => {
            let a = std::rc::Rc::new(a_of("A")?);
            let (lab, aut) = problem.ltl_parts()?;
            let inst = product_constraint_instances(sys, lab, aut, 0)?;
            let names = aut.states();
            let accepting: Vec<usize> = aut.accepting().iter().copied().collect();
            let all_keys: Vec<FnKey> = cert.functions.keys().copied().collect();
            let scale = ev.scale(&all_keys);
            for ins in &inst.closure {
                match *ins {
                    ProductInstance::ClosureStep { letter, piece, from, to } => {
                        let dom = crate::synth::letter_piece(problem, letter, piece)?;
                        let (d, b) = domain(&xs, &[&dom], &fb)?;
                        let e = ev.clone();
                        out.push(Condition {
                            id: format!(
                                "closure-step[{}:{}][{}->{}]",
                                aut.alphabet()[letter],
                                piece + 1,
                                names[from],
                                names[to]
                            ),
                            domain: d,
                            bbox: b,
                            scale,
                            margin: Box::new(move |x| {
                                let fx = step(x);
                                Some(min_over(k, |i| e.at(FnKey::pair(i, from, to), &[x, &fx])))
                            }),
                        });
                    }
                    ProductInstance::ClosureTrans { letter, piece, from, to, target } => {
                        let dom = crate::synth::letter_piece(problem, letter, piece)?;
                        let (d, b) = domain(&pair, &[&dom, sys.state_set()], &fb)?;
                        let (e, a) = (ev.clone(), a.clone());
                        out.push(Condition {
                            id: format!(
                                "closure-trans[{}:{}][{}->{},{}]",
                                aut.alphabet()[letter],
                                piece + 1,
                                names[from],
                                names[to],
                                names[target]
                            ),
                            domain: d,
                            bbox: b,
                            scale,
                            margin: Box::new(move |p| {
                                let (x, y) = p.split_at(n);
                                let fx = step(x);
                                Some(min_over(k, |i| {
                                    let rhs: f64 = (0..k)
                                        .filter(|j| a[i][*j] != 0.0)
                                        .map(|j| a[i][j] * e.at(FnKey::pair(j, to, target), &[&fx, y]))
                                        .sum();
                                    e.at(FnKey::pair(i, from, target), &[x, y]) - rhs
                                }))
                            }),
                        });
                    }
                    ProductInstance::ClosureRecur { q0, r } => {
                        let jr = accepting.iter().position(|s| *s == r).expect("accepting");
                        let (eta_j, aj) = (eta(jr), assigned(jr));
                        let (d, b) = domain(&triple, &[sys.init_set(), sys.state_set(), sys.state_set()], &fb)?;
                        let e = ev.clone();
                        out.push(Condition {
                            id: format!("decrease[{}][{}]", names[q0], names[r]),
                            domain: d,
                            bbox: b,
                            scale: scale.max(eta_j),
                            margin: Box::new(move |p| {
                                let (x0, rest) = p.split_at(n);
                                let (y, z) = rest.split_at(n);
                                let premise = (0..k).all(|i| {
                                    e.at(FnKey::pair(i, q0, r), &[x0, y]) >= 0.0
                                        && e.at(FnKey::pair(i, r, r), &[y, z]) >= 0.0
                                });
                                if !premise {
                                    return None;
                                }
                                let m = |i: usize| {
                                    e.at(FnKey::pair(i, q0, r), &[x0, y])
                                        - eta_j
                                        - e.at(FnKey::pair(i, q0, r), &[x0, z])
                                };
                                Some(if strict { max_over(k, m) } else { m(aj) })
                            }),
                        });
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(out)
}

/// Empirical visit statistics along simulated trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryReport {
    pub region: String,
    pub trajectories: usize,
    pub horizon: usize,
    /// Final steps in which no visit may occur for visits to count as ceased.
    pub window: usize,
    pub max_visits: usize,
    /// Largest step index of any visit, if any.
    pub last_visit: Option<usize>,
    pub ceased: usize,
    pub truncated: usize,
}

impl TrajectoryReport {
    pub fn all_ceased(&self) -> bool {
        self.ceased == self.trajectories
    }

    pub fn to_text(&self) -> String {
        format!(
            "trajectories {} horizon {} window {} region {} max-visits {} last-visit {} ceased {} truncated {}\n",
            self.trajectories,
            self.horizon,
            self.window,
            self.region,
            self.max_visits,
            self.last_visit.map_or("none".to_string(), |v| v.to_string()),
            self.ceased,
            self.truncated
        )
    }
}

/// Simulate `count` trajectories of `horizon` steps from seeded samples of
/// `X0` and count visits to the problem's unsafe or finitely-visited region.
pub fn trajectory_audit(problem: &Problem, count: usize, horizon: usize, seed: u64) -> Result<TrajectoryReport> {
    let sys = &problem.sys;
    let (name, region) = match &problem.spec {
        Spec::Safety { unsafe_set } => ("unsafe", unsafe_set),
        Spec::Persistence { vf } => ("finitely-visited", vf),
        Spec::Ltl { .. } => return Err(Error::validation("trajectory audits cover safety and persistence problems")),
    };
    let window = (horizon / 5).max(1);
    let mut rep = TrajectoryReport {
        region: name.into(),
        trajectories: 0,
        horizon,
        window,
        max_visits: 0,
        last_visit: None,
        ceased: 0,
        truncated: 0,
    };
    if count == 0 || horizon == 0 {
        return Ok(rep);
    }
    let bbox = bbox_of(sys.init_set(), sys.bounds());
    let starts = sample_set(sys.init_set(), &bbox, count, seed, &SamplerConfig::default())?;
    for x0 in &starts.points {
        let traj = simulate(sys, x0, horizon)?;
        let visits: Vec<usize> =
            traj.states.iter().enumerate().filter(|(_, x)| region.contains(x)).map(|(t, _)| t).collect();
        rep.trajectories += 1;
        rep.truncated += usize::from(traj.truncated);
        rep.max_visits = rep.max_visits.max(visits.len());
        if let Some(&last) = visits.last() {
            rep.last_visit = Some(rep.last_visit.map_or(last, |v: usize| v.max(last)));
        }
        let quiet = visits.last().is_none_or(|&t| t + window <= horizon);
        if quiet && !traj.truncated {
            rep.ceased += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::semialg::{box_set, RegionUnion};
    use crate::sysmodel::DynamicalSystem;

    fn halving() -> (DynamicalSystem, VariableSpace) {
        let s = VariableSpace::new(["x"]).unwrap();
        let f = vec![Polynomial::var(&s, 0).scale(0.5)];
        let x = box_set(&s, &AxisBox::new(vec![-2.0], vec![2.0]).unwrap(), "X").unwrap();
        let x0 = box_set(&s, &AxisBox::new(vec![-0.5], vec![0.5]).unwrap(), "X0").unwrap();
        (DynamicalSystem::new(&s, f, x, x0).unwrap(), s)
    }

    fn problem() -> Problem {
        let (sys, s) = halving();
        let xu = RegionUnion::from_boxes(&s, &[AxisBox::new(vec![1.5], vec![2.0]).unwrap()], "Xu").unwrap();
        Problem::safety(sys, xu)
    }

    fn barrier(text: &str) -> VectorCertificate {
        let s = VariableSpace::new(["x"]).unwrap();
        let mut functions = BTreeMap::new();
        functions.insert(FnKey::plain(0), Polynomial::parse(&s, text).unwrap());
        VectorCertificate {
            kind: CertificateKind::Bc,
            k: 1,
            space: s,
            functions,
            matrices: BTreeMap::new(),
            eta: vec![1e-3],
            gamma: vec![],
            rho: vec![],
            lambda: Some(1.0),
            assignment: vec![0],
            eta_lb: 1e-3,
            grams: vec![],
        }
    }

    fn quick(mode: AuditMode) -> AuditOptions {
        AuditOptions { samples: 2000, mode, ..AuditOptions::default() }
    }

    #[test]
    fn valid_barrier_passes() {
        let r = check_certificate(&barrier("x^2 - 1"), &problem(), &quick(AuditMode::Synthesized)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_text());
        assert_eq!(r.conditions.len(), 3);
        // The init margin is -B, worst at the boundary x = +-0.5.
        let init = r.condition("barrier-init").unwrap();
        assert!((init.worst_margin - 0.75).abs() < 1e-9);
    }

    #[test]
    fn inverted_barrier_fails() {
        let r = check_certificate(&barrier("1 - x^2"), &problem(), &quick(AuditMode::Synthesized)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.condition("barrier-init").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn rounding_mode_absorbs_small_slack() {
        let cert = barrier("x^2 - 0.249");
        let strict = check_certificate(&cert, &problem(), &quick(AuditMode::Synthesized)).unwrap();
        assert_eq!(strict.verdict, Verdict::Fail);
        let loose = check_certificate(&cert, &problem(), &quick(AuditMode::TranscribedRounded)).unwrap();
        assert_eq!(loose.verdict, Verdict::PassWithRounding);
        let m = margin_at(&cert, &problem(), &quick(AuditMode::Synthesized), "barrier-init", &[0.5]).unwrap();
        assert!((m.unwrap() + 0.001).abs() < 1e-12);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = check_certificate(&barrier("x^2 - 1"), &problem(), &quick(AuditMode::Synthesized)).unwrap();
        let b = check_certificate(&barrier("x^2 - 1"), &problem(), &quick(AuditMode::Synthesized)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn kind_must_match_problem() {
        let mut cert = barrier("x^2 - 1");
        cert.kind = CertificateKind::VcbrfPersistence;
        assert!(check_certificate(&cert, &problem(), &AuditOptions::default()).is_err());
    }

    #[test]
    fn contraction_visits_cease() {
        let (sys, s) = halving();
        let vf = RegionUnion::from_boxes(&s, &[AxisBox::new(vec![0.25], vec![0.5]).unwrap()], "VF").unwrap();
        let rep = trajectory_audit(&Problem::persistence(sys, vf), 20, 50, 3).unwrap();
        assert!(rep.all_ceased());
        assert!(rep.max_visits <= 1);
        assert_eq!(rep.window, 10);
    }
}
