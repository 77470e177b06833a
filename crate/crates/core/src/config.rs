//! Run configurations in TOML.
//!
//! Every file starts with `schema = 1` and names one task (`synth`,
//! `audit`, `sweep` or `discrete`). Unknown keys are rejected. Sets are
//! trees of `box`, `union`, `product`, `complement`, `poly` and `ref`
//! nodes:
//!
//! ```toml
//! schema = 1
//! name = "rotation"
//! task = "synth"
//!
//! [system]
//! variables = ["x1", "x2"]
//! dynamics = ["x2", "-x1"]
//! state = { box = { lo = [-4, -4], hi = [4, 4] } }
//! init = { box = { lo = [0, -3.5], hi = [0.5, -3] } }
//!
//! [sets]
//! bad = { union = [{ box = { lo = [-4, 1], hi = [-1, 4] } }, { box = { lo = [1, -4], hi = [4, -1] } }] }
//!
//! [spec]
//! kind = "safety"
//! unsafe = { ref = "bad" }
//!
//! [certificate]
//! kind = "vcc-safety"
//! degree = 3
//! k = 2
//! A = [[0, 1], [1, 0]]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use crate::audit::{AuditMode, AuditOptions};
use crate::discrete::{FiniteSystem, Instances};
use crate::error::{Error, Result};
use crate::expr::parse_polynomial;
use crate::poly::{Polynomial, VariableSpace};
use crate::semialg::{box_set, complement_of_union, AxisBox, RegionUnion, SemiAlgebraicSet};
use crate::synth::{CertificateKind, Matrix, Problem, SynthOptions};
use crate::sysmodel::{BuchiAutomaton, DynamicalSystem, LabelingPartition};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskName {
    Synth,
    Audit,
    Sweep,
    Discrete,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub name: String,
    pub task: TaskName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub system: Option<SystemDecl>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetNode>,
    pub spec: Option<SpecDecl>,
    pub certificate: Option<CertDecl>,
    pub sweep: Option<SweepDecl>,
    pub discrete: Option<DiscreteDecl>,
    #[serde(default)]
    pub solver: SolverDecl,
    #[serde(default)]
    pub audit: AuditDecl,
    #[serde(default)]
    pub output: OutputDecl,
    /// Row label and reference values for the comparison table.
    pub reference: Option<ReferenceDecl>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDecl {
    pub variables: Vec<String>,
    pub dynamics: Vec<String>,
    pub state: SetNode,
    pub init: SetNode,
    /// Extra named regions attached to the system (e.g. for trajectory audits).
    #[serde(default)]
    pub regions: BTreeMap<String, SetNode>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SetNode {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Union(Vec<SetNode>),
    /// Cartesian product of boxes over consecutive variable blocks.
    Product(Vec<SetNode>),
    /// `outer` minus a union of boxes.
    Complement {
        outer: Box<SetNode>,
        remove: Vec<SetNode>,
    },
    /// `{x : g(x) >= 0}` with a bounding box for sampling.
    Poly {
        constraints: Vec<String>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ref(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Safety,
    Persistence,
    Ltl,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDecl {
    pub kind: SpecKind,
    #[serde(rename = "unsafe")]
    pub unsafe_set: Option<SetNode>,
    pub vf: Option<SetNode>,
    #[serde(default)]
    pub labels: Vec<LabelDecl>,
    pub automaton: Option<AutomatonDecl>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelDecl {
    pub letter: String,
    pub set: SetNode,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonDecl {
    pub states: Vec<String>,
    pub letters: Vec<String>,
    pub initial: Vec<String>,
    pub accepting: Vec<String>,
    /// `[from, letter, to]` triples.
    pub edges: Vec<[String; 3]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertDecl {
    pub kind: String,
    pub degree: Option<u32>,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(rename = "A")]
    pub a: Option<Matrix>,
    #[serde(rename = "A1")]
    pub a1: Option<Matrix>,
    #[serde(rename = "A2")]
    pub a2: Option<Matrix>,
    #[serde(rename = "A3")]
    pub a3: Option<Matrix>,
    pub gamma: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    /// 1-based function number per region piece or accepting state.
    pub assignment: Option<Vec<usize>>,
    pub eta_lb: Option<f64>,
    /// Certificate file to audit, relative to the config file.
    pub file: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDecl {
    /// Certificate family: `vcc-safety`, `vcc-persistence`, `vcc-ltl`,
    /// `vcbrf-persistence`, `vcbrf-ltl`, `cc` or `bc`.
    pub family: String,
    pub degrees: Vec<u32>,
    #[serde(default = "ones")]
    pub k: Vec<usize>,
    /// Each candidate is a list of matrices: `[A]` or `[A1, A2, A3]`.
    #[serde(default)]
    pub candidates: Vec<Vec<Matrix>>,
    /// Decay values for scalar closure sweeps (shorthand for 1x1 candidates).
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "unit_f")]
    pub gamma: f64,
    #[serde(default = "unit_f")]
    pub rho: f64,
    #[serde(default)]
    pub exhaustive: bool,
}

fn ones() -> Vec<usize> {
    vec![1]
}

fn unit_f() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteDecl {
    pub states: Vec<String>,
    pub embedding: Vec<f64>,
    pub initial: Vec<String>,
    #[serde(rename = "unsafe")]
    pub unsafe_states: Vec<String>,
    pub edges: Vec<[String; 2]>,
    /// `full` or `explicit`; explicit lists are read from `step`, `trans`, `exclusion`.
    #[serde(default = "full_str")]
    pub instances: String,
    #[serde(default)]
    pub step: Vec<[String; 2]>,
    #[serde(default)]
    pub trans: Vec<[String; 3]>,
    #[serde(default)]
    pub exclusion: Vec<[String; 2]>,
    pub cc: Option<DiscreteCcDecl>,
    #[serde(default)]
    pub vcc: Vec<DiscreteVccDecl>,
    pub search: Option<DiscreteSearchDecl>,
}

fn full_str() -> String {
    "full".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteCcDecl {
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteVccDecl {
    pub label: String,
    /// Polynomials in `x` and `y`.
    pub functions: Vec<String>,
    #[serde(rename = "A")]
    pub a: Matrix,
    pub eta: f64,
    pub assignment: Option<Vec<usize>>,
    pub rounding_tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSearchDecl {
    #[serde(rename = "A")]
    pub a: Matrix,
    pub eta: f64,
    pub assignment: Vec<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDecl {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub verbosity: Option<u8>,
    pub max_rows: Option<usize>,
    pub degree_boost: Option<u32>,
    pub trace_weight: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditDecl {
    /// `synthesized` or `transcribed`.
    pub mode: Option<String>,
    pub samples: Option<usize>,
    pub boundary_fraction: Option<f64>,
    pub rel_tol: Option<f64>,
    pub rounding_tol: Option<f64>,
    pub psd_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub strict_disjunction: Option<bool>,
    /// Simulated trajectories for persistence problems.
    pub trajectories: Option<usize>,
    pub horizon: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDecl {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDecl {
    pub system: String,
    pub certificate: String,
    /// Reference outcome, e.g. `5` or `NF (<= 4)`.
    pub degree: String,
    pub time: Option<String>,
}

/// 1-based line of the first occurrence of `key` as a TOML key or table
/// header, for anchoring semantic errors.
pub fn line_of(src: &str, key: &str) -> usize {
    src.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
                || t.trim_end() == format!("[{key}]")
                || t.trim_end() == format!("[[{key}]]")
        })
        .map_or(0, |i| i + 1)
}

/// Parse and check the schema version; the TOML layer reports unknown
/// keys with their line.
pub fn parse_config(src: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map_or(0, |s| src[..s.start.min(src.len())].matches('\n').count() + 1);
        Error::parse(line, e.message().to_string())
    })?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(Error::parse(
            line_of(src, "schema"),
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", cfg.schema),
        ));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<(RunConfig, String)> {
    let src = std::fs::read_to_string(path)?;
    Ok((parse_config(&src)?, src))
}

/// Intermediate set value: boxes stay boxes so products and complements
/// can combine them.
enum SetVal {
    Boxes(Vec<AxisBox>),
    Pieces(Vec<SemiAlgebraicSet>),
}

struct SetCtx<'a> {
    space: &'a VariableSpace,
    consts: &'a BTreeMap<String, f64>,
    named: &'a BTreeMap<String, SetNode>,
}

impl SetCtx<'_> {
    fn eval(&self, node: &SetNode, depth: usize) -> Result<SetVal> {
        if depth > 32 {
            return Err(Error::validation("set references nest too deeply (cycle?)"));
        }
        Ok(match node {
            SetNode::Box { lo, hi } => SetVal::Boxes(vec![AxisBox::new(lo.clone(), hi.clone())?]),
            SetNode::Union(parts) => {
                let vals = parts.iter().map(|p| self.eval(p, depth + 1)).collect::<Result<Vec<_>>>()?;
                if vals.iter().all(|v| matches!(v, SetVal::Boxes(_))) {
                    SetVal::Boxes(
                        vals.into_iter()
                            .flat_map(|v| match v {
                                SetVal::Boxes(b) => b,
                                SetVal::Pieces(_) => unreachable!(),
                            })
                            .collect(),
                    )
                } else {
                    let mut pieces = Vec::new();
                    for v in vals {
                        pieces.extend(self.pieces(v, "union")?);
                    }
                    SetVal::Pieces(pieces)
                }
            }
            SetNode::Product(parts) => {
                let mut acc: Vec<AxisBox> = Vec::new();
                for (i, p) in parts.iter().enumerate() {
                    let SetVal::Boxes(bs) = self.eval(p, depth + 1)? else {
                        return Err(Error::validation("product factors must be boxes or unions of boxes"));
                    };
                    acc = if i == 0 {
                        bs
                    } else {
                        acc.iter().flat_map(|a| bs.iter().map(move |b| a.concat(b))).collect()
                    };
                }
                SetVal::Boxes(acc)
            }
            SetNode::Complement { outer, remove } => {
                let SetVal::Boxes(o) = self.eval(outer, depth + 1)? else {
                    return Err(Error::validation("complement needs a box as outer set"));
                };
                let [outer] = o.as_slice() else {
                    return Err(Error::validation("complement needs a single outer box"));
                };
                let mut inner = Vec::new();
                for r in remove {
                    match self.eval(r, depth + 1)? {
                        SetVal::Boxes(b) => inner.extend(b),
                        SetVal::Pieces(_) => return Err(Error::validation("complement removes boxes only")),
                    }
                }
                let u = complement_of_union(self.space, outer, &inner, "complement")?;
                SetVal::Boxes(u.as_boxes().unwrap_or_default())
            }
            SetNode::Poly { constraints, lo, hi } => {
                let g = constraints
                    .iter()
                    .map(|c| parse_polynomial(c, self.space, self.consts))
                    .collect::<Result<Vec<Polynomial>>>()?;
                let b = AxisBox::new(lo.clone(), hi.clone())?;
                // The box is part of the set so that Putinar multipliers see it.
                let mut all = box_set(self.space, &b, "box")?.constraints().to_vec();
                all.extend(g);
                SetVal::Pieces(vec![SemiAlgebraicSet::new(self.space, all, "poly", Some(b))?])
            }
            SetNode::Ref(name) => {
                let n = self.named.get(name).ok_or_else(|| Error::validation(format!("unknown set `{name}`")))?;
                self.eval(n, depth + 1)?
            }
        })
    }

    fn pieces(&self, v: SetVal, label: &str) -> Result<Vec<SemiAlgebraicSet>> {
        match v {
            SetVal::Boxes(bs) => bs
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    if b.dim() != self.space.arity() {
                        return Err(Error::structural(format!(
                            "box of dimension {} in a {}-dimensional space",
                            b.dim(),
                            self.space.arity()
                        )));
                    }
                    box_set(self.space, b, format!("{label}[{}]", i + 1))
                })
                .collect(),
            SetVal::Pieces(ps) => Ok(ps),
        }
    }

    fn region(&self, node: &SetNode, label: &str) -> Result<RegionUnion> {
        let v = self.eval(node, 0)?;
        let pieces = self
            .pieces(v, label)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.with_label(format!("{label}[{}]", i + 1)))
            .collect();
        RegionUnion::new(self.space, pieces)
    }

    fn single(&self, node: &SetNode, label: &str) -> Result<SemiAlgebraicSet> {
        let mut ps = self.pieces(self.eval(node, 0)?, label)?;
        if ps.len() != 1 {
            return Err(Error::validation(format!("{label} must be a single box or polynomial set")));
        }
        Ok(ps.remove(0).with_label(label))
    }
}

impl RunConfig {
    pub fn certificate_kind(&self) -> Result<CertificateKind> {
        let c = self.certificate.as_ref().ok_or_else(|| Error::validation("missing [certificate] table"))?;
        CertificateKind::from_name(&c.kind)
            .ok_or_else(|| Error::validation(format!("unknown certificate kind `{}`", c.kind)))
    }

    pub fn build_system(&self) -> Result<DynamicalSystem> {
        let s = self.system.as_ref().ok_or_else(|| Error::validation("missing [system] table"))?;
        let space = VariableSpace::new(s.variables.iter().cloned())?;
        let f = s.dynamics.iter().map(|d| parse_polynomial(d, &space, &self.constants)).collect::<Result<Vec<_>>>()?;
        let ctx = SetCtx { space: &space, consts: &self.constants, named: &self.sets };
        let state = ctx.single(&s.state, "X")?;
        let init = ctx.single(&s.init, "X0")?;
        let mut sys = DynamicalSystem::new(&space, f, state, init)?;
        for (name, node) in &s.regions {
            sys = sys.with_region(name.clone(), ctx.region(node, name)?)?;
        }
        Ok(sys)
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let mut sys = self.build_system()?;
        let spec = self.spec.as_ref().ok_or_else(|| Error::validation("missing [spec] table"))?;
        let space = sys.space().clone();
        let ctx = SetCtx { space: &space, consts: &self.constants, named: &self.sets };
        Ok(match spec.kind {
            SpecKind::Safety => {
                let u = spec.unsafe_set.as_ref().ok_or_else(|| Error::validation("safety needs `unsafe`"))?;
                Problem::safety(sys, ctx.region(u, "Xu")?)
            }
            SpecKind::Persistence => {
                let v = spec.vf.as_ref().ok_or_else(|| Error::validation("persistence needs `vf`"))?;
                let vf = ctx.region(v, "VF")?;
                if sys.region("VF").is_none() {
                    sys = sys.with_region("VF", vf.clone())?;
                }
                Problem::persistence(sys, vf)
            }
            SpecKind::Ltl => {
                let a = spec.automaton.as_ref().ok_or_else(|| Error::validation("ltl needs `automaton`"))?;
                let letters = spec
                    .labels
                    .iter()
                    .map(|l| Ok((l.letter.clone(), ctx.region(&l.set, &l.letter)?)))
                    .collect::<Result<Vec<_>>>()?;
                let lab = LabelingPartition::new(letters)?;
                let edges: Vec<(&str, &str, &str)> =
                    a.edges.iter().map(|[x, l, y]| (x.as_str(), l.as_str(), y.as_str())).collect();
                let aut = BuchiAutomaton::new(
                    &strs(&a.states),
                    &strs(&a.letters),
                    &strs(&a.initial),
                    &strs(&a.accepting),
                    &edges,
                )?;
                Problem::ltl(sys, lab, aut)
            }
        })
    }

    pub fn audit_options(&self) -> Result<AuditOptions> {
        let a = &self.audit;
        let mut o = match a.mode.as_deref() {
            None | Some("synthesized") => AuditOptions::default(),
            Some("transcribed") => AuditOptions::transcribed(),
            Some(m) => return Err(Error::validation(format!("unknown audit mode `{m}`"))),
        };
        o.seed = self.seed;
        if let Some(v) = a.samples {
            o.samples = v;
        }
        if let Some(v) = a.boundary_fraction {
            o.boundary_fraction = v;
        }
        if let Some(v) = a.rel_tol {
            o.rel_tol = v;
        }
        if let Some(v) = a.rounding_tol {
            o.rounding_tol = v;
        }
        if let Some(v) = a.psd_tol {
            o.psd_tol = v;
        }
        if let Some(v) = a.residual_tol {
            o.residual_tol = v;
        }
        if let Some(v) = a.strict_disjunction {
            o.strict_disjunction = v;
        }
        debug_assert!(matches!(o.mode, AuditMode::Synthesized | AuditMode::TranscribedRounded));
        Ok(o)
    }

    pub fn synth_options(&self) -> Result<SynthOptions> {
        let mut o = SynthOptions { audit: self.audit_options()?, ..SynthOptions::default() };
        if let Some(c) = &self.certificate {
            if let Some(d) = c.degree {
                o.degree = d;
            }
            if let Some(e) = c.eta_lb {
                o.eta_lb = e;
            }
        }
        let s = &self.solver;
        if let Some(v) = s.tol {
            o.solver.tol = v;
        }
        if let Some(v) = s.max_iter {
            o.solver.max_iter = v;
        }
        if let Some(v) = s.verbosity {
            o.solver.verbosity = v;
        }
        if let Some(v) = s.max_rows {
            o.max_rows = v;
        }
        if let Some(v) = s.degree_boost {
            o.degree_boost = v;
        }
        if let Some(v) = s.trace_weight {
            o.trace_weight = v;
        }
        Ok(o)
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

impl DiscreteDecl {
    pub fn build(&self) -> Result<FiniteSystem> {
        let idx = |name: &str| {
            self.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::validation(format!("unknown state `{name}`")))
        };
        let set = |v: &[String]| v.iter().map(|s| idx(s)).collect::<Result<BTreeSet<usize>>>();
        let edges = self.edges.iter().map(|[a, b]| Ok((idx(a)?, idx(b)?))).collect::<Result<BTreeSet<_>>>()?;
        FiniteSystem::new(
            self.states.clone(),
            self.embedding.clone(),
            set(&self.initial)?,
            set(&self.unsafe_states)?,
            edges,
        )
    }

    pub fn instances(&self, ts: &FiniteSystem) -> Result<Instances> {
        match self.instances.as_str() {
            "full" => Ok(Instances::full(ts)),
            "explicit" => {
                let i = |n: &str| ts.index_of(n);
                let inst = Instances {
                    step: self.step.iter().map(|[a, b]| Ok((i(a)?, i(b)?))).collect::<Result<_>>()?,
                    trans: self.trans.iter().map(|[a, b, y]| Ok((i(a)?, i(b)?, i(y)?))).collect::<Result<_>>()?,
                    exclusion: self.exclusion.iter().map(|[a, b]| Ok((i(a)?, i(b)?))).collect::<Result<_>>()?,
                };
                inst.validate(ts)?;
                Ok(inst)
            }
            other => Err(Error::validation(format!("instances must be `full` or `explicit`, not `{other}`"))),
        }
    }
}

/// 1-based assignment from a config into 0-based indices.
pub fn zero_based(v: &[usize]) -> Result<Vec<usize>> {
    v.iter()
        .map(|a| a.checked_sub(1).ok_or_else(|| Error::validation("assignment entries are 1-based function numbers")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROT: &str = r#"
schema = 1
name = "rotation"
task = "synth"

[system]
variables = ["x1", "x2"]
dynamics = ["x2", "-x1"]
state = { box = { lo = [-4, -4], hi = [4, 4] } }
init = { box = { lo = [0, -3.5], hi = [0.5, -3] } }

[sets]
bad = { union = [{ box = { lo = [-4, 1], hi = [-1, 4] } }, { box = { lo = [1, -4], hi = [4, -1] } }] }

[spec]
kind = "safety"
unsafe = { ref = "bad" }

[certificate]
kind = "vcc-safety"
degree = 3
k = 2
A = [[0, 1], [1, 0]]
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = parse_config(ROT).unwrap();
        let p = cfg.build_problem().unwrap();
        assert_eq!(p.unsafe_set().unwrap().len(), 2);
        assert_eq!(cfg.synth_options().unwrap().degree, 3);
        assert_eq!(cfg.certificate_kind().unwrap(), CertificateKind::VccSafety);
    }

    #[test]
    fn unknown_key_has_line() {
        let src = ROT.replace("k = 2", "k = 2\nbogus = 1");
        match parse_config(&src) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, line_of(&src, "bogus"), "{msg}");
                assert!(msg.contains("bogus"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_version_checked() {
        let src = ROT.replace("schema = 1", "schema = 7");
        assert!(matches!(parse_config(&src), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn complement_and_product() {
        let src = format!(
            "{ROT}\n[system.regions]\nring = {{ complement = {{ outer = {{ product = [{{ box = {{ lo = [-1], hi = [1] }} }}, {{ box = {{ lo = [-1], hi = [1] }} }}] }}, remove = [{{ box = {{ lo = [-0.5, -0.5], hi = [0.5, 0.5] }} }}] }} }}\n"
        );
        let sys = parse_config(&src).unwrap().build_system().unwrap();
        let ring = sys.region("ring").unwrap();
        assert!(ring.contains(&[0.9, 0.0]));
        assert!(!ring.contains(&[0.1, 0.1]));
    }

    #[test]
    fn dangling_ref_rejected() {
        let src = ROT.replace("unsafe = { ref = \"bad\" }", "unsafe = { ref = \"nope\" }");
        let err = parse_config(&src).unwrap().build_problem().unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
