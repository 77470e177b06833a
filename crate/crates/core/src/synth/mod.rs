//! Certificate synthesis: one SOS program per certificate kind, solved with
//! the built-in SDP solver and checked by the audit module before a
//! certificate is reported.
//!
//! Vector builders live in [`vector`], the scalar baselines (barrier,
//! closure and co-Büchi ranking certificates with a fixed decay constant)
//! in [`scalar`]. Both produce a [`Built`] program that [`finish`] turns into
//! a [`SynthesisResult`].

mod scalar;
mod sweep;
mod vector;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use crate::audit::{check_certificate, AuditOptions, AuditReport, Verdict};
use crate::error::{Error, Result};
use crate::poly::{Polynomial, VariableSpace};
use crate::sdp::{solve, SdpStatus, SolveOptions, COMPILE_LIMIT, MAX_ROWS};
use crate::semialg::RegionUnion;
use crate::sosprog::{GramCertificate, ScalarId, SizeReport, SosProgram, TemplateId};
use crate::sysmodel::{BuchiAutomaton, DynamicalSystem, LabelingPartition};

pub use scalar::{
    build_bc, build_brf_ltl, build_brf_persistence, build_cc_ltl, build_cc_persistence, build_cc_safety,
    synth_scalar_bc, synth_scalar_cc,
};
pub use sweep::{sweep, Attempt, Candidate, SweepCell, SweepTask};
pub use vector::{
    build_vcbrf_ltl, build_vcbrf_persistence, build_vcc_ltl, build_vcc_persistence, build_vcc_safety, synth_vcbrf_ltl,
    synth_vcbrf_persistence, synth_vcc_ltl, synth_vcc_persistence, synth_vcc_safety,
};
pub(crate) use vector::{letter_piece, outside};

/// Square matrix stored by rows.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CertificateKind {
    Bc,
    /// Vector barrier certificate; audited, never synthesized.
    Vbc,
    CcSafety,
    CcPersistence,
    CcLtl,
    /// Scalar co-Büchi ranking function for persistence.
    BrfPersistence,
    BrfLtl,
    VcbrfPersistence,
    VcbrfLtl,
    VccSafety,
    VccPersistence,
    VccLtl,
}

impl CertificateKind {
    pub const ALL: [CertificateKind; 12] = [
        Self::Bc,
        Self::Vbc,
        Self::CcSafety,
        Self::CcPersistence,
        Self::CcLtl,
        Self::BrfPersistence,
        Self::BrfLtl,
        Self::VcbrfPersistence,
        Self::VcbrfLtl,
        Self::VccSafety,
        Self::VccPersistence,
        Self::VccLtl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bc => "bc",
            Self::Vbc => "vbc",
            Self::CcSafety => "cc-safety",
            Self::CcPersistence => "cc-persistence",
            Self::CcLtl => "cc-ltl",
            Self::BrfPersistence => "brf-persistence",
            Self::BrfLtl => "brf-ltl",
            Self::VcbrfPersistence => "vcbrf-persistence",
            Self::VcbrfLtl => "vcbrf-ltl",
            Self::VccSafety => "vcc-safety",
            Self::VccPersistence => "vcc-persistence",
            Self::VccLtl => "vcc-ltl",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Functions over state pairs rather than states.
    pub fn is_closure(self) -> bool {
        matches!(
            self,
            Self::CcSafety | Self::CcPersistence | Self::CcLtl | Self::VccSafety | Self::VccPersistence | Self::VccLtl
        )
    }

    pub fn is_ltl(self) -> bool {
        matches!(self, Self::CcLtl | Self::BrfLtl | Self::VcbrfLtl | Self::VccLtl)
    }

    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            Self::Bc | Self::CcSafety | Self::CcPersistence | Self::CcLtl | Self::BrfPersistence | Self::BrfLtl
        )
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index of one certificate function: component `i` and, for LTL kinds,
/// an automaton state `q` (ranking functions) or a state pair `(q, p)`
/// (closure certificates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnKey {
    pub i: usize,
    pub q: Option<usize>,
    pub p: Option<usize>,
}

impl FnKey {
    pub fn plain(i: usize) -> Self {
        Self { i, q: None, p: None }
    }

    pub fn state(i: usize, q: usize) -> Self {
        Self { i, q: Some(q), p: None }
    }

    pub fn pair(i: usize, q: usize, p: usize) -> Self {
        Self { i, q: Some(q), p: Some(p) }
    }
}

/// What the certificate must prove about a system.
#[derive(Clone, Debug)]
pub enum Spec {
    Safety { unsafe_set: RegionUnion },
    Persistence { vf: RegionUnion },
    Ltl { labeling: LabelingPartition, automaton: BuchiAutomaton },
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub sys: DynamicalSystem,
    pub spec: Spec,
}

impl Problem {
    pub fn safety(sys: DynamicalSystem, unsafe_set: RegionUnion) -> Self {
        Self { sys, spec: Spec::Safety { unsafe_set } }
    }

    pub fn persistence(sys: DynamicalSystem, vf: RegionUnion) -> Self {
        Self { sys, spec: Spec::Persistence { vf } }
    }

    pub fn ltl(sys: DynamicalSystem, labeling: LabelingPartition, automaton: BuchiAutomaton) -> Self {
        Self { sys, spec: Spec::Ltl { labeling, automaton } }
    }

    pub fn unsafe_set(&self) -> Result<&RegionUnion> {
        match &self.spec {
            Spec::Safety { unsafe_set } => Ok(unsafe_set),
            _ => Err(Error::validation("the problem is not a safety problem")),
        }
    }

    pub fn vf(&self) -> Result<&RegionUnion> {
        match &self.spec {
            Spec::Persistence { vf } => Ok(vf),
            _ => Err(Error::validation("the problem is not a persistence problem")),
        }
    }

    pub fn ltl_parts(&self) -> Result<(&LabelingPartition, &BuchiAutomaton)> {
        match &self.spec {
            Spec::Ltl { labeling, automaton } => Ok((labeling, automaton)),
            _ => Err(Error::validation("the problem is not an LTL problem")),
        }
    }
}

/// A certificate with its fixed parameters and solved coefficients.
#[derive(Clone, Debug)]
pub struct VectorCertificate {
    pub kind: CertificateKind,
    pub k: usize,
    /// Argument space of every function: the state space, or the pair space
    /// for closure certificates.
    pub space: VariableSpace,
    pub functions: BTreeMap<FnKey, Polynomial>,
    /// `A` for closures and barriers, `A1`, `A2`, `A3` for ranking functions.
    pub matrices: BTreeMap<String, Matrix>,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub lambda: Option<f64>,
    /// Region piece (or accepting state) `j` is handled by function `assignment[j]`.
    pub assignment: Vec<usize>,
    pub eta_lb: f64,
    pub grams: Vec<GramCertificate>,
}

impl VectorCertificate {
    /// Function `key`; missing functions are identically zero.
    pub fn function(&self, key: FnKey) -> Polynomial {
        self.functions.get(&key).cloned().unwrap_or_else(|| Polynomial::zero(&self.space))
    }

    pub fn matrix(&self, name: &str) -> Result<&Matrix> {
        self.matrices.get(name).ok_or_else(|| Error::validation(format!("certificate has no matrix {name}")))
    }

    /// Structural invariants: nonnegative matrices of the right size, `eta`
    /// above its lower bound, assignments in range.
    pub fn check_invariants(&self) -> Result<()> {
        for (name, m) in &self.matrices {
            validate_matrix(name, m, self.k)?;
        }
        if let Some(e) = self.eta.iter().find(|e| !(**e >= self.eta_lb * (1.0 - 1e-9)) || !e.is_finite()) {
            return Err(Error::validation(format!("eta {e} is below the lower bound {}", self.eta_lb)));
        }
        if let Some(a) = self.assignment.iter().find(|a| **a >= self.k) {
            return Err(Error::validation(format!("assignment to function {} with k = {}", a + 1, self.k)));
        }
        for v in self.gamma.iter().chain(&self.rho) {
            if !(*v >= 0.0) {
                return Err(Error::validation("S-procedure constants must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Nonnegative `k x k` check.
pub fn validate_matrix(name: &str, m: &Matrix, k: usize) -> Result<()> {
    if m.len() != k || m.iter().any(|r| r.len() != k) {
        return Err(Error::validation(format!("matrix {name} must be {k} x {k}")));
    }
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::validation(format!(
                    "matrix {name} entry ({}, {}) = {v}: entries must be nonnegative",
                    r + 1,
                    c + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn identity(k: usize) -> Matrix {
    (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn zeros(k: usize) -> Matrix {
    vec![vec![0.0; k]; k]
}

/// Default region-to-function assignment: piece `j` goes to `j mod k`.
pub fn default_assignment(pieces: usize, k: usize) -> Vec<usize> {
    (0..pieces).map(|j| j % k.max(1)).collect()
}

/// Options shared by every synthesis call.
#[derive(Clone, Debug)]
pub struct SynthOptions {
    /// Template degree.
    pub degree: u32,
    pub eta_lb: f64,
    pub degree_boost: u32,
    pub trace_weight: f64,
    pub solver: SolveOptions,
    pub audit: AuditOptions,
    /// Programs with more equality rows are skipped rather than solved.
    pub max_rows: usize,
    /// Skipped programs up to this size are still compiled and validated.
    pub compile_limit: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            degree: 2,
            eta_lb: 1e-3,
            degree_boost: 0,
            trace_weight: 0.0,
            solver: SolveOptions::default(),
            audit: AuditOptions::default(),
            max_rows: MAX_ROWS,
            compile_limit: COMPILE_LIMIT,
        }
    }
}

impl SynthOptions {
    pub fn with_degree(degree: u32) -> Self {
        Self { degree, ..Self::default() }
    }
}

/// A built but unsolved program together with what is needed to read a
/// certificate back out of its solution.
#[derive(Clone, Debug)]
pub struct Built {
    pub kind: CertificateKind,
    pub k: usize,
    pub space: VariableSpace,
    pub program: SosProgram,
    pub templates: Vec<(FnKey, TemplateId)>,
    pub eta: Vec<ScalarId>,
    pub matrices: BTreeMap<String, Matrix>,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub lambda: Option<f64>,
    pub assignment: Vec<usize>,
    pub eta_lb: f64,
    pub warnings: Vec<String>,
}

impl Built {
    pub(crate) fn new(kind: CertificateKind, k: usize, space: &VariableSpace, opts: &SynthOptions) -> Self {
        let mut program = SosProgram::new();
        program.degree_boost = opts.degree_boost;
        program.trace_weight = opts.trace_weight;
        Self {
            kind,
            k,
            space: space.clone(),
            program,
            templates: Vec::new(),
            eta: Vec::new(),
            matrices: BTreeMap::new(),
            gamma: Vec::new(),
            rho: Vec::new(),
            lambda: None,
            assignment: Vec::new(),
            eta_lb: opts.eta_lb,
            warnings: Vec::new(),
        }
    }

    /// Template for `key`, declared on first use.
    pub(crate) fn template(&mut self, key: FnKey, name: impl FnOnce() -> String, degree: u32) -> TemplateId {
        if let Some((_, id)) = self.templates.iter().find(|(k, _)| *k == key) {
            return *id;
        }
        let id = self.program.declare_template(name(), &self.space, degree);
        self.templates.push((key, id));
        id
    }

    pub(crate) fn add_eta(&mut self, name: String) -> ScalarId {
        let id = self.program.add_scalar(name, Some(self.eta_lb));
        self.program.set_objective(id, 1.0);
        self.eta.push(id);
        id
    }

    pub fn size_report(&self) -> SizeReport {
        self.program.size_report()
    }

    /// Read the certificate out of solved scalar values.
    pub fn certificate(&self, scalars: &[f64], grams: Vec<GramCertificate>) -> VectorCertificate {
        VectorCertificate {
            kind: self.kind,
            k: self.k,
            space: self.space.clone(),
            functions: self
                .templates
                .iter()
                .map(|(key, id)| (*key, self.program.template_poly(*id, scalars)))
                .collect(),
            matrices: self.matrices.clone(),
            eta: self.eta.iter().map(|id| scalars[*id]).collect(),
            gamma: self.gamma.clone(),
            rho: self.rho.clone(),
            lambda: self.lambda,
            assignment: self.assignment.clone(),
            eta_lb: self.eta_lb,
            grams,
        }
    }

    /// Canonical text of the compiled SDP; equal programs have equal text.
    pub fn canonical_sdp(&self) -> Result<String> {
        Ok(self.program.compile()?.sdp.to_text())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveStats {
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Certificate(Box<VectorCertificate>),
    NotFound(String),
    SolverFailure(String),
    /// Not attempted because the program exceeds the size guardrail.
    Skipped(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Certificate(_) => "certificate",
            Outcome::NotFound(_) => "not-found",
            Outcome::SolverFailure(_) => "solver-failure",
            Outcome::Skipped(_) => "skipped",
        }
    }

    pub fn certificate(&self) -> Option<&VectorCertificate> {
        match self {
            Outcome::Certificate(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub kind: CertificateKind,
    pub outcome: Outcome,
    pub size: SizeReport,
    pub stats: Option<SolveStats>,
    pub audit: Option<AuditReport>,
    pub warnings: Vec<String>,
    /// Informational only; never written to reports.
    pub wall_time: Duration,
}

impl SynthesisResult {
    pub fn is_certificate(&self) -> bool {
        matches!(self.outcome, Outcome::Certificate(_))
    }
}

/// Compile, apply the size guardrail, solve, extract and self-audit.
pub fn finish(built: &Built, problem: &Problem, opts: &SynthOptions) -> Result<SynthesisResult> {
    let start = std::time::Instant::now();
    let size = built.size_report();
    let mut warnings = built.warnings.clone();
    let done = |outcome, stats, audit, warnings| SynthesisResult {
        kind: built.kind,
        outcome,
        size: size.clone(),
        stats,
        audit,
        warnings,
        wall_time: start.elapsed(),
    };
    let compile = || -> Result<_> {
        let compiled = built.program.compile()?;
        if let Some(f) = compiled.sdp.validate().iter().find(|f| f.is_error()) {
            return Err(Error::structural(format!("compiled program is malformed: {f}")));
        }
        Ok(compiled)
    };
    if size.equalities > opts.max_rows {
        let what = if size.equalities <= opts.compile_limit {
            let c = compile()?;
            format!("compiled {} rows in {} blocks", c.sdp.n_rows(), c.sdp.blocks.len())
        } else {
            format!("not compiled (above {} rows)", opts.compile_limit)
        };
        return Ok(done(
            Outcome::Skipped(format!(
                "program has {} equality rows, above the dense-solver limit of {}; {what}",
                size.equalities, opts.max_rows
            )),
            None,
            None,
            warnings,
        ));
    }
    let compiled = compile()?;
    if compiled.sdp.n_rows() == 0 {
        // Nothing to satisfy: every template may be zero.
        let scalars: Vec<f64> = built.program.scalars().iter().map(|s| s.lower.unwrap_or(0.0)).collect();
        warnings.push("the program has no constraints; the certificate is vacuous".into());
        let cert = built.certificate(&scalars, Vec::new());
        let report = check_certificate(&cert, problem, &opts.audit)?;
        return Ok(done(Outcome::Certificate(Box::new(cert)), None, Some(report), warnings));
    }
    let sol = solve(&compiled.sdp, &opts.solver)?;
    let stats = SolveStats {
        status: sol.status,
        iterations: sol.iterations,
        primal_objective: sol.primal_objective + compiled.objective_offset,
        dual_objective: sol.dual_objective + compiled.objective_offset,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        gap: sol.gap,
    };
    let outcome = match sol.status {
        SdpStatus::Optimal => None,
        SdpStatus::NearOptimal => {
            warnings.push(format!(
                "solver stopped short of tolerance (primal residual {:.1e}, gap {:.1e}); accepted subject to the audit",
                sol.primal_residual, sol.gap
            ));
            None
        }
        SdpStatus::Infeasible => Some(Outcome::NotFound("SDP infeasible (Farkas certificate)".into())),
        SdpStatus::MaxIter => {
            Some(Outcome::NotFound(format!("no solution at tolerance after {} iterations", sol.iterations)))
        }
        SdpStatus::Unbounded => Some(Outcome::SolverFailure("SDP reported unbounded".into())),
        SdpStatus::NumericalFailure => Some(Outcome::SolverFailure("numerical failure in the SDP solver".into())),
    };
    if let Some(o) = outcome {
        return Ok(done(o, Some(stats), None, warnings));
    }
    let extracted = compiled.extract(&built.program, &sol);
    let cert = built.certificate(&extracted.scalars, extracted.grams);
    cert.check_invariants()?;
    let report = check_certificate(&cert, problem, &opts.audit)?;
    let outcome = if report.verdict == Verdict::Pass {
        Outcome::Certificate(Box::new(cert))
    } else {
        Outcome::NotFound(format!("solver returned a candidate that failed the self-audit ({})", report.verdict))
    };
    Ok(done(outcome, Some(stats), Some(report), warnings))
}

/// A copy of `space` with every name starting with `x` renamed to start
/// with `tag` (`x1 -> y1`), or prefixed by `tag_` when that collides.
pub fn shadow_space(space: &VariableSpace, tag: &str) -> Result<VariableSpace> {
    let simple: Vec<String> = space
        .names()
        .iter()
        .map(|n| match n.strip_prefix('x') {
            Some(rest) => format!("{tag}{rest}"),
            None => format!("{tag}_{n}"),
        })
        .collect();
    let clash = simple.iter().any(|n| space.index_of(n).is_some());
    if !clash {
        if let Ok(s) = VariableSpace::new(simple) {
            return Ok(s);
        }
    }
    space.renamed(|n| format!("{tag}_{n}"))
}

/// `(x, y)` over the state space and a renamed copy.
pub fn pair_space(state: &VariableSpace) -> Result<VariableSpace> {
    VariableSpace::concat(&[state, &shadow_space(state, "y")?])
}

/// `(x, y, z)` over the state space and two renamed copies.
pub fn triple_space(state: &VariableSpace) -> Result<VariableSpace> {
    VariableSpace::concat(&[state, &shadow_space(state, "y")?, &shadow_space(state, "z")?])
}

/// Variables `offset .. offset + n` of `space` as polynomials.
pub(crate) fn block_vars(space: &VariableSpace, offset: usize, n: usize) -> Vec<Polynomial> {
    (offset..offset + n).map(|i| Polynomial::var(space, i)).collect()
}

/// The dynamics acting on block `offset` of `space`.
pub(crate) fn dyn_block(sys: &DynamicalSystem, space: &VariableSpace, offset: usize) -> Result<Vec<Polynomial>> {
    sys.dynamics().iter().map(|p| p.embed_block(space, offset)).collect()
}

pub(crate) fn concat_images(parts: &[&[Polynomial]]) -> Vec<Polynomial> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

#[cfg(test)]
mod tests;
