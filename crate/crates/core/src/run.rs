//! Task execution for run configurations: synthesis, audit, sweeps, finite
//! systems, and the case-study comparison table.
//!
//! Exit codes: 0 certificate found and audited, 2 nothing found, 3 audit
//! failure, 1 error. Reports never contain wall times; those go to a
//! separate timing artifact so reruns compare byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::audit::{check_certificate, trajectory_audit, Verdict};
use crate::certfile::{read_certificate, write_certificate};
use crate::config::{load_config, zero_based, CertDecl, RunConfig, SweepDecl, TaskName};
use crate::discrete::{
    cc_feasible_quadratic, lambda_grid, quadratic_vcc, reach, vcc_audit_discrete, CcFeasibility, DiscreteAuditOptions,
    QuadraticVcc,
};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::synth::{
    build_brf_ltl, build_brf_persistence, default_assignment, finish, sweep, synth_scalar_bc, synth_scalar_cc,
    synth_vcbrf_ltl, synth_vcbrf_persistence, synth_vcc_ltl, synth_vcc_persistence, synth_vcc_safety, zeros, Candidate,
    CertificateKind, Matrix, Outcome, Problem, Spec, SweepTask, SynthesisResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_FOUND: i32 = 2;
pub const EXIT_AUDIT_FAIL: i32 = 3;

/// Environment variable overriding every output directory.
pub const OUT_DIR_ENV: &str = "VCERT_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub exit: i32,
    pub report: String,
    pub artifacts: Vec<Artifact>,
    /// `(degree, outcome label)` per synthesis attempt, in order.
    pub attempts: Vec<(u32, &'static str)>,
    pub wall_time: Duration,
}

impl RunOutput {
    fn error(name: &str, e: &Error) -> Self {
        let report = format!("run {name}\nerror: {e}\nexit {EXIT_ERROR}\n");
        Self {
            exit: EXIT_ERROR,
            artifacts: vec![Artifact { name: format!("{name}.report"), contents: report.clone() }],
            report,
            attempts: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }
}

fn fmt_matrix(m: &Matrix) -> String {
    let rows: Vec<String> = m.iter().map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")).collect();
    format!("[{}]", rows.join("; "))
}

fn exit_for(r: &SynthesisResult) -> i32 {
    match (&r.outcome, &r.audit) {
        (Outcome::Certificate(_), _) => EXIT_OK,
        (_, Some(a)) if a.verdict == Verdict::Fail => EXIT_AUDIT_FAIL,
        _ => EXIT_NOT_FOUND,
    }
}

/// Deterministic summary of one synthesis attempt.
pub fn describe(r: &SynthesisResult, s: &mut String) {
    let z = &r.size;
    let _ = writeln!(
        s,
        "size constraints {} equalities {} blocks {} largest-block {} scalars {}",
        z.constraints,
        z.equalities,
        z.blocks.len(),
        z.largest_block(),
        z.scalars
    );
    match &r.outcome {
        Outcome::Certificate(_) => s.push_str("outcome certificate\n"),
        Outcome::NotFound(why) => {
            let _ = writeln!(s, "outcome not-found: {why}");
        }
        Outcome::SolverFailure(why) => {
            let _ = writeln!(s, "outcome solver-failure: {why}");
        }
        Outcome::Skipped(why) => {
            let _ = writeln!(s, "outcome skipped: {why}");
        }
    }
    if let Some(st) = &r.stats {
        let _ = writeln!(
            s,
            "solver {:?} iterations {} objective {:.6e} primal-residual {:.2e} dual-residual {:.2e} gap {:.2e}",
            st.status, st.iterations, st.primal_objective, st.primal_residual, st.dual_residual, st.gap
        );
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning {w}");
    }
    if let Some(c) = r.outcome.certificate() {
        let eta: Vec<String> = c.eta.iter().map(|e| format!("{e:.6e}")).collect();
        let _ = writeln!(s, "eta {}", eta.join(" "));
    }
    if let Some(a) = &r.audit {
        s.push_str(&a.to_text());
    }
}

fn broadcast(v: &Option<Vec<f64>>, k: usize, name: &str) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![1.0; k]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; k]),
        Some(v) if v.len() == k => Ok(v.clone()),
        Some(v) => Err(Error::validation(format!("{name} has {} entries for k = {k}", v.len()))),
    }
}

fn assignment(c: &CertDecl, pieces: usize, k: usize) -> Result<Vec<usize>> {
    match &c.assignment {
        Some(a) => zero_based(a),
        None => Ok(default_assignment(pieces, k)),
    }
}

fn require(m: &Option<Matrix>, name: &str) -> Result<Matrix> {
    m.clone().ok_or_else(|| Error::validation(format!("certificate kind needs matrix {name}")))
}

/// Dispatch one synthesis call as declared in `[certificate]`.
pub fn synthesize(cfg: &RunConfig, problem: &Problem) -> Result<SynthesisResult> {
    let c = cfg.certificate.as_ref().ok_or_else(|| Error::validation("missing [certificate] table"))?;
    let kind = cfg.certificate_kind()?;
    let opts = cfg.synth_options()?;
    let lambda = c.lambda.unwrap_or(1.0);
    let ranking = || -> Result<(Matrix, Matrix, Matrix)> {
        let a1 = require(&c.a1, "A1")?;
        let n = a1.len();
        Ok((a1, c.a2.clone().unwrap_or_else(|| zeros(n)), c.a3.clone().unwrap_or_else(|| zeros(n))))
    };
    match kind {
        CertificateKind::VccSafety => {
            let a = require(&c.a, "A")?;
            let asg = assignment(c, problem.unsafe_set()?.len(), a.len())?;
            synth_vcc_safety(problem, &a, &asg, &opts)
        }
        CertificateKind::VccPersistence => {
            let a = require(&c.a, "A")?;
            let n = a.len();
            let asg = assignment(c, problem.vf()?.len(), n)?;
            synth_vcc_persistence(
                problem,
                &a,
                &broadcast(&c.gamma, n, "gamma")?,
                &broadcast(&c.rho, n, "rho")?,
                &asg,
                &opts,
            )
        }
        CertificateKind::VccLtl => {
            let a = require(&c.a, "A")?;
            let n = a.len();
            let (_, aut) = problem.ltl_parts()?;
            let asg = assignment(c, aut.accepting().len(), n)?;
            synth_vcc_ltl(problem, &a, &broadcast(&c.gamma, n, "gamma")?, &broadcast(&c.rho, n, "rho")?, &asg, &opts)
        }
        CertificateKind::VcbrfPersistence => {
            let (a1, a2, a3) = ranking()?;
            synth_vcbrf_persistence(problem, &a1, &a2, &a3, &opts)
        }
        CertificateKind::VcbrfLtl => {
            let (a1, a2, a3) = ranking()?;
            synth_vcbrf_ltl(problem, &a1, &a2, &a3, &opts)
        }
        CertificateKind::Bc => synth_scalar_bc(problem, lambda, &opts),
        CertificateKind::CcSafety | CertificateKind::CcPersistence | CertificateKind::CcLtl => {
            let g = c.gamma.as_ref().and_then(|v| v.first().copied()).unwrap_or(1.0);
            let r = c.rho.as_ref().and_then(|v| v.first().copied()).unwrap_or(1.0);
            synth_scalar_cc(problem, lambda, g, r, &opts)
        }
        CertificateKind::BrfPersistence => finish(&build_brf_persistence(problem, lambda, &opts)?, problem, &opts),
        CertificateKind::BrfLtl => finish(&build_brf_ltl(problem, lambda, &opts)?, problem, &opts),
        CertificateKind::Vbc => Err(Error::validation("vector barrier certificates are audited, never synthesized")),
    }
}

/// Trajectory evidence for persistence problems when requested.
fn trajectories(cfg: &RunConfig, problem: &Problem, s: &mut String) -> Result<bool> {
    let (Some(n), Spec::Persistence { .. }) = (cfg.audit.trajectories, &problem.spec) else {
        return Ok(true);
    };
    let horizon = cfg.audit.horizon.unwrap_or(500);
    let t = trajectory_audit(problem, n, horizon, cfg.seed)?;
    s.push_str(&t.to_text());
    Ok(t.all_ceased())
}

fn task_synth(
    cfg: &RunConfig,
    s: &mut String,
    arts: &mut Vec<Artifact>,
    log: &mut Vec<(u32, &'static str)>,
) -> Result<i32> {
    let problem = cfg.build_problem()?;
    let c = cfg.certificate.as_ref().ok_or_else(|| Error::validation("missing [certificate] table"))?;
    let _ = writeln!(s, "kind {} degree {} k {}", c.kind, cfg.synth_options()?.degree, c.k);
    for (name, m) in [("A", &c.a), ("A1", &c.a1), ("A2", &c.a2), ("A3", &c.a3)] {
        if let Some(m) = m {
            let _ = writeln!(s, "{name} {}", fmt_matrix(m));
        }
    }
    let r = synthesize(cfg, &problem)?;
    log.push((cfg.synth_options()?.degree, r.outcome.label()));
    describe(&r, s);
    let mut exit = exit_for(&r);
    if let Some(cert) = r.outcome.certificate() {
        arts.push(Artifact { name: format!("{}.cert", cfg.name), contents: write_certificate(cert) });
        if !trajectories(cfg, &problem, s)? {
            exit = EXIT_AUDIT_FAIL;
        }
    }
    Ok(exit)
}

fn task_audit(cfg: &RunConfig, base: &Path, s: &mut String) -> Result<i32> {
    let problem = cfg.build_problem()?;
    let c = cfg.certificate.as_ref().ok_or_else(|| Error::validation("missing [certificate] table"))?;
    let file = c.file.as_ref().ok_or_else(|| Error::validation("audit needs `certificate.file`"))?;
    let path = base.join(file);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::validation(format!("cannot read certificate {}: {e}", path.display())))?;
    let cert = read_certificate(&text)?;
    let opts = cfg.audit_options()?;
    let _ = writeln!(s, "certificate {file}");
    let report = check_certificate(&cert, &problem, &opts)?;
    s.push_str(&report.to_text());
    let mut exit = if report.verdict == Verdict::Fail { EXIT_AUDIT_FAIL } else { EXIT_OK };
    if !trajectories(cfg, &problem, s)? {
        exit = EXIT_AUDIT_FAIL;
    }
    Ok(exit)
}

fn sweep_task(d: &SweepDecl) -> Result<SweepTask> {
    Ok(match d.family.as_str() {
        "vcc-safety" => SweepTask::VccSafety,
        "vcc-persistence" => SweepTask::VccPersistence { gamma: d.gamma, rho: d.rho },
        "vcc-ltl" => SweepTask::VccLtl { gamma: d.gamma, rho: d.rho },
        "vcbrf-persistence" => SweepTask::VcbrfPersistence,
        "vcbrf-ltl" => SweepTask::VcbrfLtl,
        "cc" => SweepTask::ScalarCc { gamma: d.gamma, rho: d.rho },
        "bc" => SweepTask::Bc,
        other => return Err(Error::validation(format!("unknown sweep family `{other}`"))),
    })
}

fn task_sweep(
    cfg: &RunConfig,
    s: &mut String,
    arts: &mut Vec<Artifact>,
    log: &mut Vec<(u32, &'static str)>,
) -> Result<i32> {
    let problem = cfg.build_problem()?;
    let d = cfg.sweep.as_ref().ok_or_else(|| Error::validation("missing [sweep] table"))?;
    let task = sweep_task(d)?;
    let mut candidates: Vec<Candidate> = d.candidates.clone();
    candidates.extend(d.lambdas.iter().map(|l| vec![vec![vec![*l]]]));
    let base = cfg.synth_options()?;
    let attempts = sweep(&problem, task, &d.degrees, &d.k, &candidates, &base, d.exhaustive)?;
    let _ = writeln!(s, "family {} attempts {}", d.family, attempts.len());
    let mut found = None;
    for a in &attempts {
        let ms: Vec<String> = a.matrices.iter().map(fmt_matrix).collect();
        let _ = writeln!(
            s,
            "attempt degree {} k {} matrices {} outcome {}",
            a.cell.degree,
            a.cell.k,
            ms.join(" "),
            a.result.outcome.label()
        );
        describe(&a.result, s);
        log.push((a.cell.degree, a.result.outcome.label()));
        if found.is_none() {
            if let Some(c) = a.result.outcome.certificate() {
                found = Some(c.clone());
            }
        }
    }
    Ok(match found {
        Some(c) => {
            arts.push(Artifact { name: format!("{}.cert", cfg.name), contents: write_certificate(&c) });
            EXIT_OK
        }
        None if attempts.iter().any(|a| exit_for(&a.result) == EXIT_AUDIT_FAIL) => EXIT_AUDIT_FAIL,
        None => EXIT_NOT_FOUND,
    })
}

fn task_discrete(cfg: &RunConfig, s: &mut String) -> Result<i32> {
    let d = cfg.discrete.as_ref().ok_or_else(|| Error::validation("missing [discrete] table"))?;
    let ts = d.build()?;
    let inst = d.instances(&ts)?;
    let names = ts.names();
    let reached = reach(&ts);
    let list = |v: &mut dyn Iterator<Item = &usize>| v.map(|i| names[*i].clone()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "reachable {}", list(&mut reached.iter()));
    let bad: Vec<usize> = ts.unsafe_states().intersection(&reached).copied().collect();
    let _ = writeln!(s, "unsafe-reachable {}", if bad.is_empty() { "none".to_string() } else { list(&mut bad.iter()) });
    let _ = writeln!(
        s,
        "instances {} step {} trans {} exclusion {}",
        d.instances,
        inst.step.len(),
        inst.trans.len(),
        inst.exclusion.len()
    );
    let mut exit = EXIT_OK;
    let mut certified = false;
    if let Some(cc) = &d.cc {
        let grid = lambda_grid(cc.lambda_max, cc.lambda_step);
        match cc_feasible_quadratic(&ts, &grid, cc.eta, &inst)? {
            CcFeasibility::FeasibleAt { lambda, t, audit } => {
                certified = true;
                let _ = writeln!(s, "cc feasible-at lambda {lambda} T {}", t.to_text());
                s.push_str(&audit.to_text());
            }
            CcFeasibility::InfeasibleOnGrid { margins } => {
                let best = margins.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(
                    s,
                    "cc infeasible-on-grid points {} lambda 0..{} step {} eta {} best-margin {best:.6e}",
                    margins.len(),
                    cc.lambda_max,
                    cc.lambda_step,
                    cc.eta
                );
            }
        }
    }
    for v in &d.vcc {
        let space = crate::discrete::pair_space();
        let funcs = v
            .functions
            .iter()
            .map(|f| crate::expr::parse_polynomial(f, &space, &cfg.constants))
            .collect::<Result<Vec<Polynomial>>>()?;
        let opts = DiscreteAuditOptions {
            assignment: v.assignment.as_deref().map(zero_based).transpose()?,
            rounding_tol: v.rounding_tol,
        };
        let audit = vcc_audit_discrete(&ts, &funcs, &v.a, v.eta, &inst, &opts)?;
        let _ = writeln!(s, "vcc {} A {} eta {}", v.label, fmt_matrix(&v.a), v.eta);
        s.push_str(&audit.to_text());
        match audit.verdict {
            Verdict::Pass => certified = true,
            Verdict::PassWithRounding => {}
            Verdict::Fail => exit = exit.max(EXIT_AUDIT_FAIL),
        }
    }
    if let Some(search) = &d.search {
        let asg = zero_based(&search.assignment)?;
        match quadratic_vcc(&ts, &search.a, search.eta, &inst, &asg)? {
            QuadraticVcc::Found { funcs, margin, audit } => {
                certified = true;
                let _ = writeln!(s, "search A {} found margin {margin:.6e}", fmt_matrix(&search.a));
                for (i, f) in funcs.iter().enumerate() {
                    let _ = writeln!(s, "T{} {}", i + 1, f.to_text());
                }
                s.push_str(&audit.to_text());
            }
            QuadraticVcc::NotFound { margin, status } => {
                let _ =
                    writeln!(s, "search A {} not-found margin {margin:.6e} status {status:?}", fmt_matrix(&search.a));
                if exit == EXIT_OK {
                    exit = EXIT_NOT_FOUND;
                }
            }
        }
    }
    if certified && !bad.is_empty() {
        return Err(Error::Numerical("a certificate passed although an unsafe state is reachable".into()));
    }
    Ok(exit)
}

/// Execute a parsed configuration. `base` resolves relative paths in it.
pub fn execute(cfg: &RunConfig, base: &Path) -> Result<RunOutput> {
    let start = Instant::now();
    let mut s = String::new();
    let mut arts = Vec::new();
    let mut log = Vec::new();
    let _ = writeln!(s, "run {}", cfg.name);
    let _ = writeln!(s, "task {:?}", cfg.task);
    let exit = match cfg.task {
        TaskName::Synth => task_synth(cfg, &mut s, &mut arts, &mut log)?,
        TaskName::Audit => task_audit(cfg, base, &mut s)?,
        TaskName::Sweep => task_sweep(cfg, &mut s, &mut arts, &mut log)?,
        TaskName::Discrete => task_discrete(cfg, &mut s)?,
    };
    let _ = writeln!(s, "exit {exit}");
    arts.push(Artifact { name: format!("{}.report", cfg.name), contents: s.clone() });
    Ok(RunOutput { exit, report: s, artifacts: arts, attempts: log, wall_time: start.elapsed() })
}

/// Command-line adjustments applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub task: Option<TaskName>,
    /// Certificate file for an audit, relative to the working directory.
    pub certificate: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_rows: Option<usize>,
    pub rounding_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub samples: Option<usize>,
    pub transcribed: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(t) = self.task {
            cfg.task = t;
        }
        if let Some(p) = &self.certificate {
            let abs = std::path::absolute(p)?;
            let c = cfg.certificate.as_mut().ok_or_else(|| Error::validation("missing [certificate] table"))?;
            c.file = Some(abs.to_string_lossy().into_owned());
        }
        cfg.solver.tol = self.tol.or(cfg.solver.tol);
        cfg.solver.max_rows = self.max_rows.or(cfg.solver.max_rows);
        cfg.audit.rounding_tol = self.rounding_tol.or(cfg.audit.rounding_tol);
        cfg.audit.rel_tol = self.rel_tol.or(cfg.audit.rel_tol);
        cfg.audit.samples = self.samples.or(cfg.audit.samples);
        if self.transcribed {
            cfg.audit.mode = Some("transcribed".into());
        }
        if let Some(d) = cfg.discrete.as_mut() {
            if let Some(r) = self.rounding_tol {
                d.vcc.iter_mut().for_each(|v| v.rounding_tol = Some(r));
            }
        }
        Ok(())
    }
}

/// Load and execute a config file; every failure becomes exit code 1 with
/// the message in the report.
pub fn run_path(path: &Path) -> RunOutput {
    run_path_with(path, &Overrides::default())
}

pub fn run_path_with(path: &Path, ov: &Overrides) -> RunOutput {
    let stem = path.file_stem().map_or("run".to_string(), |s| s.to_string_lossy().into_owned());
    let (mut cfg, src) = match load_config(path) {
        Ok(c) => c,
        Err(e) => return RunOutput::error(&stem, &e),
    };
    if let Err(e) = ov.apply(&mut cfg) {
        return RunOutput::error(&cfg.name, &e);
    }
    let base = path.parent().unwrap_or(Path::new("."));
    execute(&cfg, base).unwrap_or_else(|e| {
        let e = match e {
            Error::Validation(msg) => {
                let line = anchor(&src, &msg);
                if line > 0 {
                    Error::Parse { line, msg }
                } else {
                    Error::Validation(msg)
                }
            }
            other => other,
        };
        RunOutput::error(&cfg.name, &e)
    })
}

/// Best-effort line for a validation message naming a config key.
fn anchor(src: &str, msg: &str) -> usize {
    for key in ["A1", "A2", "A3", "A", "assignment", "gamma", "rho", "lambda", "eta_lb", "degree", "k"] {
        if msg.contains(&format!("matrix {key} ")) || msg.starts_with(&format!("{key} ")) {
            return crate::config::line_of(src, key);
        }
    }
    0
}

/// Output directory: the environment override, else `output.dir` relative
/// to the config, else `out` next to it.
pub fn output_dir(cfg_dir: &Path, declared: Option<&str>) -> PathBuf {
    if let Some(d) = std::env::var_os(OUT_DIR_ENV) {
        return PathBuf::from(d);
    }
    cfg_dir.join(declared.unwrap_or("out"))
}

pub fn write_artifacts(arts: &[Artifact], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    arts.iter()
        .map(|a| {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.contents)?;
            Ok(p)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TableRow {
    pub file: String,
    pub system: String,
    pub certificate: String,
    pub reference_degree: String,
    pub reference_time: String,
    pub result: String,
    pub exit: i32,
    pub wall_time: Duration,
}

/// Summary cell for one row: degree found, or how far the search went.
fn row_result(out: &RunOutput) -> String {
    let tried = |label: &'static str| out.attempts.iter().filter(move |a| a.1 == label).map(|a| a.0);
    if out.exit == EXIT_ERROR {
        return "error".into();
    }
    if out.exit == EXIT_AUDIT_FAIL {
        return "audit fail".into();
    }
    if let Some(d) = tried("certificate").min() {
        return format!("found d={d}");
    }
    let solved = tried("not-found").chain(tried("solver-failure")).max();
    let skipped = tried("skipped").min();
    match (solved, skipped) {
        (Some(d), None) => format!("NF (<= {d})"),
        (Some(d), Some(e)) => format!("NF (<= {d}), skipped d>={e}"),
        (None, Some(e)) => format!("skipped d={e} (size limit)"),
        (None, None) => "no attempts".into(),
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub rows: Vec<TableRow>,
    pub runs: Vec<RunOutput>,
}

impl Table {
    pub fn exit(&self) -> i32 {
        if self.rows.is_empty() {
            EXIT_NOT_FOUND
        } else if self.rows.iter().any(|r| r.exit == EXIT_ERROR) {
            EXIT_ERROR
        } else {
            EXIT_OK
        }
    }

    /// Deterministic table text; reference values are the published ones
    /// and do not bind this implementation.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14} {:<20} {:<30} {:<14} {:<12}",
            "system", "method", "this run", "ref degree", "ref time (s)"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<14} {:<20} {:<30} {:<14} {:<12}",
                r.system, r.certificate, r.result, r.reference_degree, r.reference_time
            );
        }
        if self.rows.is_empty() {
            s.push_str("(no rows)\n");
        }
        s.push_str("reference columns are published values from different tooling; informational only\n");
        s
    }

    pub fn timing_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "{} {:.3}", r.file, r.wall_time.as_secs_f64());
        }
        s
    }

    /// Every row artifact plus the table, in row order.
    pub fn artifacts(&self) -> Vec<Artifact> {
        let mut out: Vec<Artifact> = self.runs.iter().flat_map(|r| r.artifacts.iter().cloned()).collect();
        out.push(Artifact { name: "table1.txt".into(), contents: self.to_text() });
        out
    }
}

/// Run every `*.cfg` in `dir` that declares a `[reference]` row, in file
/// name order. Failing rows are recorded and the harness continues.
pub fn table1_harness(dir: &Path) -> Result<Table> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for f in files {
        let file = f.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned());
        let reference = match load_config(&f) {
            Ok((cfg, _)) => match cfg.reference {
                Some(r) => r,
                None => continue,
            },
            Err(e) => {
                let out = RunOutput::error(&file, &e);
                rows.push(TableRow {
                    file,
                    system: "?".into(),
                    certificate: "?".into(),
                    reference_degree: String::new(),
                    reference_time: String::new(),
                    result: "error".into(),
                    exit: EXIT_ERROR,
                    wall_time: Duration::ZERO,
                });
                runs.push(out);
                continue;
            }
        };
        let out = run_path(&f);
        rows.push(TableRow {
            file,
            system: reference.system,
            certificate: reference.certificate,
            reference_degree: reference.degree,
            reference_time: reference.time.unwrap_or_else(|| "-".into()),
            result: row_result(&out),
            exit: out.exit,
            wall_time: out.wall_time,
        });
        runs.push(out);
    }
    Ok(Table { rows, runs })
}
