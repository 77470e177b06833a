//! Sum-of-squares programs over polynomial templates, lowered to SDPs.
//!
//! A constraint "`expr` is SOS on `{g >= 0}`" becomes the identity
//! `expr = z0' Q0 z0 + sum_i g_i zi' Qi zi` with PSD Gram matrices `Q`,
//! matched coefficient by coefficient over every monomial of degree `<= D`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{monomial_basis, Composer, Monomial, Polynomial, VariableSpace};
use crate::sdp::{Entry, Row, SdpProblem, SdpSolution};
use crate::semialg::SemiAlgebraicSet;

pub type ScalarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemplateId(pub usize);

#[derive(Clone, Debug)]
pub struct ScalarVar {
    pub name: String,
    pub lower: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Template {
    pub name: String,
    pub space: VariableSpace,
    pub degree: u32,
    pub basis: Vec<Monomial>,
    /// Coefficient `m` is scalar `first + m`.
    pub first: ScalarId,
}

/// `constant + sum_s s * weight_s`, affine in the decision scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePolyExpr {
    space: VariableSpace,
    constant: Polynomial,
    linear: BTreeMap<ScalarId, Polynomial>,
}

impl AffinePolyExpr {
    pub fn zero(space: &VariableSpace) -> Self {
        Self { space: space.clone(), constant: Polynomial::zero(space), linear: BTreeMap::new() }
    }

    pub fn constant(p: Polynomial) -> Self {
        Self { space: p.space().clone(), constant: p, linear: BTreeMap::new() }
    }

    pub fn scalar(space: &VariableSpace, id: ScalarId, weight: Polynomial) -> Result<Self> {
        if weight.space() != space {
            return Err(Error::structural("scalar weight lives in another space"));
        }
        let mut e = Self::zero(space);
        if !weight.is_zero() {
            e.linear.insert(id, weight);
        }
        Ok(e)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn constant_part(&self) -> &Polynomial {
        &self.constant
    }

    pub fn linear_part(&self) -> &BTreeMap<ScalarId, Polynomial> {
        &self.linear
    }

    pub fn is_constant(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.linear.values().map(Polynomial::degree).fold(self.constant.degree(), u32::max)
    }

    pub fn add_scaled(&mut self, other: &AffinePolyExpr, s: f64) -> Result<()> {
        if other.space != self.space {
            return Err(Error::structural("adding expressions over different spaces"));
        }
        self.constant.add_scaled(&other.constant, s);
        for (id, w) in &other.linear {
            let slot = self.linear.entry(*id).or_insert_with(|| Polynomial::zero(&self.space));
            slot.add_scaled(w, s);
            if slot.is_zero() {
                self.linear.remove(id);
            }
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &AffinePolyExpr) -> Result<AffinePolyExpr> {
        let mut out = self.clone();
        out.add_scaled(other, 1.0)?;
        Ok(out)
    }

    pub fn checked_sub(&self, other: &AffinePolyExpr) -> Result<AffinePolyExpr> {
        let mut out = self.clone();
        out.add_scaled(other, -1.0)?;
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> AffinePolyExpr {
        let mut out = AffinePolyExpr::zero(&self.space);
        out.add_scaled(self, s).expect("same space");
        out
    }

    /// Multiply by a fixed polynomial.
    pub fn mul_poly(&self, p: &Polynomial) -> Result<AffinePolyExpr> {
        let mut out = AffinePolyExpr::constant(self.constant.checked_mul(p)?);
        for (id, w) in &self.linear {
            let prod = w.checked_mul(p)?;
            if !prod.is_zero() {
                out.linear.insert(*id, prod);
            }
        }
        Ok(out)
    }

    /// Product of two expressions; fails if both carry decision scalars.
    pub fn checked_mul(&self, other: &AffinePolyExpr) -> Result<AffinePolyExpr> {
        match (self.is_constant(), other.is_constant()) {
            (_, true) => self.mul_poly(&other.constant),
            (true, false) => other.mul_poly(&self.constant),
            (false, false) => Err(Error::validation("product of two decision-bearing expressions is bilinear")),
        }
    }

    /// Substitute scalar values.
    pub fn evaluate(&self, scalars: &[f64]) -> Polynomial {
        let mut out = self.constant.clone();
        for (id, w) in &self.linear {
            out.add_scaled(w, scalars[*id]);
        }
        out
    }
}

/// `head - sum_i c_i * antecedent_i` with fixed nonnegative constants `c_i`.
pub fn s_procedure_expr(head: &AffinePolyExpr, antecedents: &[(f64, AffinePolyExpr)]) -> Result<AffinePolyExpr> {
    let mut out = head.clone();
    for (c, a) in antecedents {
        if !(*c >= 0.0) || !c.is_finite() {
            return Err(Error::validation(format!("S-procedure multiplier {c} must be a nonnegative number")));
        }
        if *c != 0.0 {
            out.add_scaled(a, -c)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SosConstraint {
    pub label: String,
    pub expr: AffinePolyExpr,
    pub domain: SemiAlgebraicSet,
    /// Even certificate degree.
    pub degree: u32,
}

impl SosConstraint {
    pub fn principal_degree(&self) -> u32 {
        self.degree / 2
    }

    pub fn multiplier_degrees(&self) -> Vec<u32> {
        self.domain.constraints().iter().map(|g| (self.degree - g.degree()) / 2).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct SosProgram {
    scalars: Vec<ScalarVar>,
    templates: Vec<Template>,
    constraints: Vec<SosConstraint>,
    objective: BTreeMap<ScalarId, f64>,
    /// Weight on the trace of every Gram block in the objective.
    pub trace_weight: f64,
    /// Extra `2 * boost` degrees on every certificate.
    pub degree_boost: u32,
}

impl SosProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalars(&self) -> &[ScalarVar] {
        &self.scalars
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn template(&self, id: TemplateId) -> &Template {
        &self.templates[id.0]
    }

    pub fn constraints(&self) -> &[SosConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &BTreeMap<ScalarId, f64> {
        &self.objective
    }

    pub fn add_scalar(&mut self, name: impl Into<String>, lower: Option<f64>) -> ScalarId {
        self.scalars.push(ScalarVar { name: name.into(), lower });
        self.scalars.len() - 1
    }

    pub fn set_objective(&mut self, id: ScalarId, weight: f64) {
        self.objective.insert(id, weight);
    }

    /// A polynomial with one fresh coefficient per basis monomial of degree `<= degree`.
    pub fn declare_template(&mut self, name: impl Into<String>, space: &VariableSpace, degree: u32) -> TemplateId {
        let name = name.into();
        let basis = monomial_basis(space.arity(), degree);
        let first = self.scalars.len();
        for m in &basis {
            let mut label = String::new();
            let _ = fmt::write(&mut label, format_args!("{name}[{}]", monomial_label(m)));
            self.scalars.push(ScalarVar { name: label, lower: None });
        }
        self.templates.push(Template { name, space: space.clone(), degree, basis, first });
        TemplateId(self.templates.len() - 1)
    }

    /// The template as an expression over its own space.
    pub fn template_expr(&self, id: TemplateId) -> AffinePolyExpr {
        let t = &self.templates[id.0];
        let mut e = AffinePolyExpr::zero(&t.space);
        for (k, m) in t.basis.iter().enumerate() {
            e.linear.insert(t.first + k, Polynomial::monomial(&t.space, m.clone(), 1.0));
        }
        e
    }

    /// The template with each of its variables replaced by `images[i]`,
    /// polynomials over `target`.
    pub fn template_at(&self, id: TemplateId, images: &[Polynomial], target: &VariableSpace) -> Result<AffinePolyExpr> {
        let t = &self.templates[id.0];
        if images.len() != t.space.arity() {
            return Err(Error::structural(format!(
                "template {} takes {} arguments, got {}",
                t.name,
                t.space.arity(),
                images.len()
            )));
        }
        let mut comp = Composer::new(images, target)?;
        let mut e = AffinePolyExpr::zero(target);
        for (k, m) in t.basis.iter().enumerate() {
            let w = comp.apply(&Polynomial::monomial(&t.space, m.clone(), 1.0))?;
            if !w.is_zero() {
                e.linear.insert(t.first + k, w);
            }
        }
        Ok(e)
    }

    pub fn template_poly(&self, id: TemplateId, scalars: &[f64]) -> Polynomial {
        let t = &self.templates[id.0];
        Polynomial::from_terms(&t.space, t.basis.iter().enumerate().map(|(k, m)| (m.clone(), scalars[t.first + k])))
            .expect("basis lives in the template space")
    }

    /// Require `expr >= 0` on `domain` via a Putinar certificate of even
    /// degree `degree` (default: the smallest even degree covering `expr`
    /// and the domain constraints).
    pub fn add_sos_on_set(
        &mut self,
        label: impl Into<String>,
        expr: AffinePolyExpr,
        domain: &SemiAlgebraicSet,
        degree: Option<u32>,
    ) -> Result<usize> {
        if domain.space() != expr.space() {
            return Err(Error::structural("SOS domain and expression spaces differ"));
        }
        if let Some(&bad) = expr.linear.keys().find(|&&id| id >= self.scalars.len()) {
            return Err(Error::structural(format!("unknown scalar {bad}")));
        }
        let need = expr.degree();
        let gmax = domain.constraints().iter().map(Polynomial::degree).max().unwrap_or(0);
        let d = match degree {
            Some(d) => {
                if d % 2 == 1 {
                    return Err(Error::Sizing(format!("certificate degree {d} is odd")));
                }
                if d < need || d < gmax {
                    return Err(Error::Sizing(format!(
                        "certificate degree {d} is below the expression degree {need} or a constraint degree {gmax}"
                    )));
                }
                d
            }
            None => 2 * need.max(gmax).div_ceil(2) + 2 * self.degree_boost,
        };
        self.constraints.push(SosConstraint { label: label.into(), expr, domain: domain.clone(), degree: d });
        Ok(self.constraints.len() - 1)
    }

    pub fn size_report(&self) -> SizeReport {
        let mut r = SizeReport::default();
        for c in &self.constraints {
            let n = c.expr.space().arity();
            r.blocks.push(crate::poly::binomial(n + c.principal_degree() as usize, n));
            for d in c.multiplier_degrees() {
                r.blocks.push(crate::poly::binomial(n + d as usize, n));
            }
            r.equalities += crate::poly::binomial(n + c.degree as usize, n);
        }
        r.constraints = self.constraints.len();
        r.scalars = self.scalars.len();
        r.bounded = self.scalars.iter().filter(|s| s.lower.is_some()).count();
        r
    }

    /// Lower to an SDP. Blocks are ordered constraint by constraint (principal
    /// block first, then one block per domain constraint), followed by one
    /// 1x1 block per lower-bounded scalar.
    pub fn compile(&self) -> Result<CompiledProgram> {
        for (id, s) in self.scalars.iter().enumerate() {
            if let Some(lb) = s.lower {
                if !lb.is_finite() {
                    return Err(Error::validation(format!("scalar {id} has a non-finite bound")));
                }
            }
        }
        let mut blocks = Vec::new();
        let mut layouts = Vec::new();
        let mut rows: Vec<Row> = Vec::new();
        // Scalar placement is fixed before rows so bounded scalars get their blocks last.
        let n_gram_blocks: usize = self.constraints.iter().map(|c| 1 + c.domain.constraints().len()).sum();
        let mut placement = Vec::with_capacity(self.scalars.len());
        let (mut n_free, mut n_bounded) = (0, 0);
        for s in &self.scalars {
            match s.lower {
                None => {
                    placement.push(ScalarPlacement::Free(n_free));
                    n_free += 1;
                }
                Some(lb) => {
                    placement.push(ScalarPlacement::Shifted { block: n_gram_blocks + n_bounded, lb });
                    n_bounded += 1;
                }
            }
        }
        for c in &self.constraints {
            let n = c.expr.space().arity();
            let first_row = rows.len();
            let row_basis = monomial_basis(n, c.degree);
            let row_of: BTreeMap<&Monomial, usize> = row_basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
            let mut local: Vec<Row> = vec![Row::default(); row_basis.len()];
            let principal = monomial_basis(n, c.principal_degree());
            let pblock = blocks.len();
            blocks.push(principal.len());
            for a in 0..principal.len() {
                for b in a..principal.len() {
                    let m = principal[a].mul(&principal[b]);
                    local[row_of[&m]].entries.push(Entry { block: pblock, r: a, c: b, v: 1.0 });
                }
            }
            let mut mults = Vec::new();
            for (g, d) in c.domain.constraints().iter().zip(c.multiplier_degrees()) {
                let basis = monomial_basis(n, d);
                let block = blocks.len();
                blocks.push(basis.len());
                for a in 0..basis.len() {
                    for b in a..basis.len() {
                        let ab = basis[a].mul(&basis[b]);
                        for (gm, gc) in g.terms() {
                            let m = ab.mul(gm);
                            local[row_of[&m]].entries.push(Entry { block, r: a, c: b, v: *gc });
                        }
                    }
                }
                mults.push((block, basis, g.clone()));
            }
            for (m, v) in c.expr.constant.terms() {
                local[row_of[m]].rhs += v;
            }
            for (id, w) in &c.expr.linear {
                for (m, v) in w.terms() {
                    let row = &mut local[row_of[m]];
                    match placement[*id] {
                        ScalarPlacement::Free(k) => row.free.push((k, -v)),
                        ScalarPlacement::Shifted { block, lb } => {
                            row.entries.push(Entry { block, r: 0, c: 0, v: -v });
                            row.rhs += v * lb;
                        }
                    }
                }
            }
            rows.extend(local);
            layouts.push(ConstraintLayout {
                principal_block: pblock,
                principal_basis: principal,
                multipliers: mults,
                rows: first_row..rows.len(),
            });
        }
        blocks.extend(std::iter::repeat_n(1, n_bounded));
        let mut sdp = SdpProblem::new(blocks, n_free);
        sdp.rows = rows;
        let mut offset = 0.0;
        for (id, w) in &self.objective {
            match placement[*id] {
                ScalarPlacement::Free(k) => sdp.c_free[k] += w,
                ScalarPlacement::Shifted { block, lb } => {
                    sdp.c_entries.push(Entry { block, r: 0, c: 0, v: *w });
                    offset += w * lb;
                }
            }
        }
        if self.trace_weight != 0.0 {
            for b in 0..n_gram_blocks {
                for i in 0..sdp.blocks[b] {
                    sdp.c_entries.push(Entry { block: b, r: i, c: i, v: self.trace_weight });
                }
            }
        }
        sdp.canonicalize();
        Ok(CompiledProgram { sdp, constraints: layouts, placement, objective_offset: offset })
    }
}

fn monomial_label(m: &Monomial) -> String {
    let parts: Vec<String> = m.exponents().map(|e| e.to_string()).collect();
    parts.join(",")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarPlacement {
    Free(usize),
    /// `value = lb + t` with `t` the single entry of `block`.
    Shifted {
        block: usize,
        lb: f64,
    },
}

#[derive(Clone, Debug)]
pub struct ConstraintLayout {
    pub principal_block: usize,
    pub principal_basis: Vec<Monomial>,
    pub multipliers: Vec<(usize, Vec<Monomial>, Polynomial)>,
    pub rows: std::ops::Range<usize>,
}

#[derive(Clone, Debug)]
pub struct CompiledProgram {
    pub sdp: SdpProblem,
    pub constraints: Vec<ConstraintLayout>,
    pub placement: Vec<ScalarPlacement>,
    pub objective_offset: f64,
}

/// Gram data of one solved SOS constraint.
#[derive(Clone, Debug)]
pub struct GramCertificate {
    pub label: String,
    pub principal: DMatrix<f64>,
    pub principal_basis: Vec<Monomial>,
    pub multipliers: Vec<(DMatrix<f64>, Vec<Monomial>, Polynomial)>,
    /// The constraint polynomial with scalar values substituted.
    pub target: Polynomial,
}

fn gram_poly(space: &VariableSpace, q: &DMatrix<f64>, basis: &[Monomial]) -> Polynomial {
    let mut p = Polynomial::zero(space);
    for a in 0..basis.len() {
        for b in a..basis.len() {
            let w = if a == b { 1.0 } else { 2.0 };
            p.add_term(basis[a].mul(&basis[b]), w * q[(a, b)]);
        }
    }
    p
}

impl GramCertificate {
    /// `z0' Q0 z0 + sum_i g_i zi' Qi zi`.
    pub fn reconstruct(&self) -> Polynomial {
        let space = self.target.space();
        let mut p = gram_poly(space, &self.principal, &self.principal_basis);
        for (q, basis, g) in &self.multipliers {
            p.add_scaled(&(&gram_poly(space, q, basis) * g), 1.0);
        }
        p
    }

    /// Max-abs coefficient difference between the target and its reconstruction.
    pub fn residual(&self) -> f64 {
        (&self.target - &self.reconstruct()).max_abs_coeff()
    }

    pub fn min_eigenvalues(&self) -> Vec<f64> {
        std::iter::once(&self.principal)
            .chain(self.multipliers.iter().map(|m| &m.0))
            .map(|q| if q.nrows() == 0 { 0.0 } else { q.clone().symmetric_eigenvalues().min() })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ProgramSolution {
    pub scalars: Vec<f64>,
    pub grams: Vec<GramCertificate>,
}

impl CompiledProgram {
    pub fn extract(&self, prog: &SosProgram, sol: &SdpSolution) -> ProgramSolution {
        let scalars: Vec<f64> = self
            .placement
            .iter()
            .map(|p| match *p {
                ScalarPlacement::Free(k) => sol.free[k],
                ScalarPlacement::Shifted { block, lb } => lb + sol.x[block][(0, 0)],
            })
            .collect();
        let grams = prog
            .constraints
            .iter()
            .zip(&self.constraints)
            .map(|(c, lay)| GramCertificate {
                label: c.label.clone(),
                principal: sol.x[lay.principal_block].clone(),
                principal_basis: lay.principal_basis.clone(),
                multipliers: lay
                    .multipliers
                    .iter()
                    .map(|(b, basis, g)| (sol.x[*b].clone(), basis.clone(), g.clone()))
                    .collect(),
                target: c.expr.evaluate(&scalars),
            })
            .collect();
        ProgramSolution { scalars, grams }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SizeReport {
    pub constraints: usize,
    pub blocks: Vec<usize>,
    pub equalities: usize,
    pub scalars: usize,
    pub bounded: usize,
}

impl SizeReport {
    pub fn largest_block(&self) -> usize {
        self.blocks.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "constraints {} blocks {} largest {} equalities {} scalars {} bounded {}",
            self.constraints,
            self.blocks.len(),
            self.largest_block(),
            self.equalities,
            self.scalars,
            self.bounded
        )
    }
}
