//! Scalar baselines: barrier certificates, closure certificates and
//! co-Büchi ranking functions with a fixed decay constant `lambda`.
//!
//! These are written independently of the vector builders; with `k = 1`
//! and `A = [lambda]` both must compile to the same SDP.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::semialg::product_in;
use crate::sosprog::{s_procedure_expr, AffinePolyExpr};
use crate::sysmodel::{product_constraint_instances, ProductInstance};

use super::vector::{letter_piece, outside};
use super::{
    block_vars, concat_images, dyn_block, finish, pair_space, triple_space, Built, CertificateKind, FnKey, Problem,
    Spec, SynthOptions, SynthesisResult,
};

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::validation(format!("decay constant {lambda} must be nonnegative")));
    }
    Ok(())
}

fn one(space: &crate::poly::VariableSpace) -> Polynomial {
    Polynomial::constant(space, 1.0)
}

/// Barrier certificate: `-B(x0) >= 0` on `X0`, `B(x_u) - eta_j >= 0` on
/// each unsafe piece, `lambda B(x) - B(f(x)) >= 0` on `X`.
pub fn build_bc(problem: &Problem, lambda: f64, opts: &SynthOptions) -> Result<Built> {
    check_lambda(lambda)?;
    let unsafe_set = problem.unsafe_set()?;
    let sys = &problem.sys;
    let xs = sys.space().clone();
    let mut b = Built::new(CertificateKind::Bc, 1, &xs, opts);
    b.lambda = Some(lambda);
    b.assignment = vec![0; unsafe_set.len()];
    let id = b.template(FnKey::plain(0), || "B".into(), opts.degree);
    let bx = b.program.template_expr(id);
    b.program.add_sos_on_set("barrier-init", bx.scale(-1.0), sys.init_set(), None)?;
    for (j, piece) in unsafe_set.pieces().iter().enumerate() {
        let eta = b.add_eta(format!("eta{}", j + 1));
        let mut expr = bx.clone();
        expr.add_scaled(&AffinePolyExpr::scalar(&xs, eta, one(&xs))?, -1.0)?;
        b.program.add_sos_on_set(format!("barrier-unsafe[{}]", j + 1), expr, piece, None)?;
    }
    let mut expr = bx.scale(lambda);
    expr.add_scaled(&b.program.template_at(id, sys.dynamics(), &xs)?, -1.0)?;
    b.program.add_sos_on_set("barrier-step", expr, sys.state_set(), None)?;
    Ok(b)
}

pub fn synth_scalar_bc(problem: &Problem, lambda: f64, opts: &SynthOptions) -> Result<SynthesisResult> {
    finish(&build_bc(problem, lambda, opts)?, problem, opts)
}

/// `T(x, f(x))` on `X` and `T(x, y) - lambda T(f(x), y)` on `X x X`.
fn closure_pair(b: &mut Built, problem: &Problem, lambda: f64, degree: u32) -> Result<()> {
    let sys = &problem.sys;
    let n = sys.dim();
    let xs = sys.space().clone();
    let pair = b.space.clone();
    let id = b.template(FnKey::plain(0), || "T1".into(), degree);
    let mut images = block_vars(&xs, 0, n);
    images.extend(sys.dynamics().iter().cloned());
    let expr = b.program.template_at(id, &images, &xs)?;
    b.program.add_sos_on_set("closure-step", expr, sys.state_set(), None)?;
    let mut shifted = dyn_block(sys, &pair, 0)?;
    shifted.extend(block_vars(&pair, n, n));
    let mut expr = b.program.template_expr(id);
    if lambda != 0.0 {
        expr.add_scaled(&b.program.template_at(id, &shifted, &pair)?, -lambda)?;
    }
    let dom = product_in(&pair, &[sys.state_set(), sys.state_set()])?;
    b.program.add_sos_on_set("closure-trans", expr, &dom, None)?;
    Ok(())
}

/// Closure certificate for safety, one `eta_j` per unsafe piece.
pub fn build_cc_safety(problem: &Problem, lambda: f64, opts: &SynthOptions) -> Result<Built> {
    check_lambda(lambda)?;
    let unsafe_set = problem.unsafe_set()?;
    let sys = &problem.sys;
    let pair = pair_space(sys.space())?;
    let mut b = Built::new(CertificateKind::CcSafety, 1, &pair, opts);
    b.lambda = Some(lambda);
    b.assignment = vec![0; unsafe_set.len()];
    closure_pair(&mut b, problem, lambda, opts.degree)?;
    let id = b.templates[0].1;
    for (j, piece) in unsafe_set.pieces().iter().enumerate() {
        let eta = b.add_eta(format!("eta{}", j + 1));
        let mut expr = b.program.template_expr(id).scale(-1.0);
        expr.add_scaled(&AffinePolyExpr::scalar(&pair, eta, one(&pair))?, -1.0)?;
        let dom = product_in(&pair, &[sys.init_set(), piece])?;
        b.program.add_sos_on_set(format!("exclusion[{}]", j + 1), expr, &dom, None)?;
    }
    Ok(b)
}

/// Closure certificate for persistence. The decrease condition is imposed
/// with `y`, `y'` in the same region piece.
pub fn build_cc_persistence(
    problem: &Problem,
    lambda: f64,
    gamma: f64,
    rho: f64,
    opts: &SynthOptions,
) -> Result<Built> {
    check_lambda(lambda)?;
    let vf = problem.vf()?;
    let sys = &problem.sys;
    let n = sys.dim();
    let pair = pair_space(sys.space())?;
    let triple = triple_space(sys.space())?;
    let mut b = Built::new(CertificateKind::CcPersistence, 1, &pair, opts);
    b.lambda = Some(lambda);
    b.gamma = vec![gamma];
    b.rho = vec![rho];
    b.assignment = vec![0; vf.len()];
    closure_pair(&mut b, problem, lambda, opts.degree)?;
    let id = b.templates[0].1;
    let at = |b: &Built, first: usize, second: usize| {
        let images = concat_images(&[&block_vars(&triple, first * n, n), &block_vars(&triple, second * n, n)]);
        b.program.template_at(id, &images, &triple)
    };
    for (j, piece) in vf.pieces().iter().enumerate() {
        let eta = b.add_eta(format!("eta{}", j + 1));
        let t_xy = at(&b, 0, 1)?;
        let mut head = t_xy.clone();
        head.add_scaled(&AffinePolyExpr::scalar(&triple, eta, one(&triple))?, -1.0)?;
        head.add_scaled(&at(&b, 0, 2)?, -1.0)?;
        let expr = s_procedure_expr(&head, &[(gamma, t_xy), (rho, at(&b, 1, 2)?)])?;
        let dom = product_in(&triple, &[sys.init_set(), piece, piece])?;
        b.program.add_sos_on_set(format!("decrease[{}]", j + 1), expr, &dom, None)?;
    }
    Ok(b)
}

/// Closure certificate over the product with a Büchi automaton.
pub fn build_cc_ltl(problem: &Problem, lambda: f64, gamma: f64, rho: f64, opts: &SynthOptions) -> Result<Built> {
    check_lambda(lambda)?;
    let (lab, aut) = problem.ltl_parts()?;
    let sys = &problem.sys;
    let n = sys.dim();
    let xs = sys.space().clone();
    let pair = pair_space(&xs)?;
    let triple = triple_space(&xs)?;
    let inst = product_constraint_instances(sys, lab, aut, 0)?;
    let mut b = Built::new(CertificateKind::CcLtl, 1, &pair, opts);
    b.lambda = Some(lambda);
    b.gamma = vec![gamma];
    b.rho = vec![rho];
    b.assignment = vec![0; aut.accepting().len()];
    b.warnings.extend(inst.warnings.iter().cloned());
    let names = aut.states().to_vec();
    let deg = opts.degree;
    let t = |b: &mut Built, q: usize, p: usize| {
        b.template(FnKey::pair(0, q, p), || format!("T1[{},{}]", names[q], names[p]), deg)
    };
    let accepting: Vec<usize> = aut.accepting().iter().copied().collect();
    let mut etas = Vec::new();
    for r in &accepting {
        etas.push(b.add_eta(format!("eta[{}]", names[*r])));
    }
    let mut step = block_vars(&xs, 0, n);
    step.extend(sys.dynamics().iter().cloned());
    let mut shifted = dyn_block(sys, &pair, 0)?;
    shifted.extend(block_vars(&pair, n, n));
    let part = |k: usize| block_vars(&triple, k * n, n);
    for ins in &inst.closure {
        match *ins {
            ProductInstance::ClosureStep { letter, piece, from, to } => {
                let id = t(&mut b, from, to);
                let expr = b.program.template_at(id, &step, &xs)?;
                let dom = letter_piece(problem, letter, piece)?;
                b.program.add_sos_on_set(
                    format!("closure-step[{}:{}][{}->{}]", aut.alphabet()[letter], piece + 1, names[from], names[to]),
                    expr,
                    &dom,
                    None,
                )?;
            }
            ProductInstance::ClosureTrans { letter, piece, from, to, target } => {
                let head = t(&mut b, from, target);
                let mut expr = b.program.template_expr(head);
                if lambda != 0.0 {
                    let next = t(&mut b, to, target);
                    expr.add_scaled(&b.program.template_at(next, &shifted, &pair)?, -lambda)?;
                }
                let dom = product_in(&pair, &[&letter_piece(problem, letter, piece)?, sys.state_set()])?;
                b.program.add_sos_on_set(
                    format!(
                        "closure-trans[{}:{}][{}->{},{}]",
                        aut.alphabet()[letter],
                        piece + 1,
                        names[from],
                        names[to],
                        names[target]
                    ),
                    expr,
                    &dom,
                    None,
                )?;
            }
            ProductInstance::ClosureRecur { q0, r } => {
                let jr = accepting.iter().position(|s| *s == r).expect("r is accepting");
                let id = t(&mut b, q0, r);
                let t_xy = b.program.template_at(id, &concat_images(&[&part(0), &part(1)]), &triple)?;
                let mut head = t_xy.clone();
                head.add_scaled(&AffinePolyExpr::scalar(&triple, etas[jr], one(&triple))?, -1.0)?;
                head.add_scaled(&b.program.template_at(id, &concat_images(&[&part(0), &part(2)]), &triple)?, -1.0)?;
                let rr = t(&mut b, r, r);
                let t_yz = b.program.template_at(rr, &concat_images(&[&part(1), &part(2)]), &triple)?;
                let expr = s_procedure_expr(&head, &[(gamma, t_xy), (rho, t_yz)])?;
                let dom = product_in(&triple, &[sys.init_set(), sys.state_set(), sys.state_set()])?;
                b.program.add_sos_on_set(format!("decrease[{}][{}]", names[q0], names[r]), expr, &dom, None)?;
            }
            _ => {}
        }
    }
    Ok(b)
}

/// Scalar closure certificate for whichever property `problem` states.
pub fn synth_scalar_cc(
    problem: &Problem,
    lambda: f64,
    gamma: f64,
    rho: f64,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    let built = match problem.spec {
        Spec::Safety { .. } => build_cc_safety(problem, lambda, opts)?,
        Spec::Persistence { .. } => build_cc_persistence(problem, lambda, gamma, rho, opts)?,
        Spec::Ltl { .. } => build_cc_ltl(problem, lambda, gamma, rho, opts)?,
    };
    finish(&built, problem, opts)
}

/// Co-Büchi ranking function: `B(x0) >= 0`, `B(f(x)) >= lambda B(x)`,
/// non-increase outside the region and decrease by `eta` inside it.
pub fn build_brf_persistence(problem: &Problem, lambda: f64, opts: &SynthOptions) -> Result<Built> {
    check_lambda(lambda)?;
    let vf = problem.vf()?;
    let sys = &problem.sys;
    let xs = sys.space().clone();
    let mut b = Built::new(CertificateKind::BrfPersistence, 1, &xs, opts);
    b.lambda = Some(lambda);
    let id = b.template(FnKey::plain(0), || "B1".into(), opts.degree);
    let bx = b.program.template_expr(id);
    let bfx = b.program.template_at(id, sys.dynamics(), &xs)?;
    b.program.add_sos_on_set("rank-init", bx.clone(), sys.init_set(), None)?;
    let mut expr = bfx.clone();
    expr.add_scaled(&bx, -lambda)?;
    b.program.add_sos_on_set("rank-step", expr, sys.state_set(), None)?;
    let rest = outside(problem, vf)?;
    let eta = (!vf.is_empty()).then(|| b.add_eta("eta".into()));
    if eta.is_none() {
        b.warnings.push("the finitely-visited region is empty; persistence holds vacuously".into());
    }
    let drop = bx.checked_sub(&bfx)?;
    for (c, piece) in rest.iter().enumerate() {
        b.program.add_sos_on_set(format!("rank-stay[{}]", c + 1), drop.clone(), piece, None)?;
    }
    for (v, piece) in vf.pieces().iter().enumerate() {
        let mut expr = drop.clone();
        expr.add_scaled(&AffinePolyExpr::scalar(&xs, eta.expect("nonempty"), one(&xs))?, -1.0)?;
        b.program.add_sos_on_set(format!("rank-decrease[{}]", v + 1), expr, piece, None)?;
    }
    Ok(b)
}

/// Co-Büchi ranking function over the product with a Büchi automaton.
pub fn build_brf_ltl(problem: &Problem, lambda: f64, opts: &SynthOptions) -> Result<Built> {
    check_lambda(lambda)?;
    let (lab, aut) = problem.ltl_parts()?;
    let sys = &problem.sys;
    let xs = sys.space().clone();
    let inst = product_constraint_instances(sys, lab, aut, 0)?;
    let mut b = Built::new(CertificateKind::BrfLtl, 1, &xs, opts);
    b.lambda = Some(lambda);
    b.warnings.extend(inst.warnings.iter().cloned());
    let names = aut.states().to_vec();
    let deg = opts.degree;
    let t = |b: &mut Built, q: usize| b.template(FnKey::state(0, q), || format!("B1[{}]", names[q]), deg);
    let has_accepting_edge = inst.ranking.iter().any(|r| matches!(r, ProductInstance::RankAccept { .. }));
    let eta = has_accepting_edge.then(|| b.add_eta("eta".into()));
    for ins in &inst.ranking {
        match *ins {
            ProductInstance::RankInit { q0 } => {
                let id = t(&mut b, q0);
                let expr = b.program.template_expr(id);
                b.program.add_sos_on_set(format!("rank-init[{}]", names[q0]), expr, sys.init_set(), None)?;
            }
            ProductInstance::RankStep { letter, piece, from, to } => {
                let next = t(&mut b, to);
                let mut expr = b.program.template_at(next, sys.dynamics(), &xs)?;
                if lambda != 0.0 {
                    let cur = t(&mut b, from);
                    expr.add_scaled(&b.program.template_expr(cur), -lambda)?;
                }
                let dom = letter_piece(problem, letter, piece)?;
                b.program.add_sos_on_set(
                    format!("rank-step[{}:{}][{}->{}]", aut.alphabet()[letter], piece + 1, names[from], names[to]),
                    expr,
                    &dom,
                    None,
                )?;
            }
            ProductInstance::RankStay { letter, piece, from, to }
            | ProductInstance::RankAccept { letter, piece, from, to } => {
                let cur = t(&mut b, from);
                let next = t(&mut b, to);
                let mut expr = b.program.template_expr(cur);
                expr.add_scaled(&b.program.template_at(next, sys.dynamics(), &xs)?, -1.0)?;
                let tag = if let ProductInstance::RankAccept { .. } = ins {
                    expr.add_scaled(&AffinePolyExpr::scalar(&xs, eta.expect("accepting edge"), one(&xs))?, -1.0)?;
                    "rank-decrease"
                } else {
                    "rank-stay"
                };
                let dom = letter_piece(problem, letter, piece)?;
                b.program.add_sos_on_set(
                    format!("{tag}[{}:{}][{}->{}]", aut.alphabet()[letter], piece + 1, names[from], names[to]),
                    expr,
                    &dom,
                    None,
                )?;
            }
            _ => {}
        }
    }
    Ok(b)
}
