//! Builders for vector closure certificates and vector co-Büchi ranking
//! functions.

use crate::error::{Error, Result};
use crate::semialg::{complement_of_union, product_in, RegionUnion, SemiAlgebraicSet};
use crate::sosprog::{s_procedure_expr, AffinePolyExpr};
use crate::sysmodel::{product_constraint_instances, ProductInstance};

use super::{
    block_vars, concat_images, dyn_block, finish, pair_space, triple_space, validate_matrix, Built, CertificateKind,
    FnKey, Matrix, Problem, SynthOptions, SynthesisResult,
};

fn check_assignment(assignment: &[usize], pieces: usize, k: usize) -> Result<()> {
    if assignment.len() != pieces {
        return Err(Error::validation(format!("assignment has {} entries for {pieces} regions", assignment.len())));
    }
    if let Some(a) = assignment.iter().find(|a| **a >= k) {
        return Err(Error::validation(format!("region assigned to function {} but k = {k}", a + 1)));
    }
    Ok(())
}

fn check_constants(name: &str, v: &[f64], k: usize) -> Result<()> {
    if v.len() != k {
        return Err(Error::validation(format!("{name} needs {k} entries, got {}", v.len())));
    }
    if v.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::validation(format!("{name} entries must be nonnegative")));
    }
    Ok(())
}

fn k_of(a: &Matrix) -> Result<usize> {
    if a.is_empty() {
        return Err(Error::validation("matrix A must have at least one row"));
    }
    Ok(a.len())
}

/// `T_i(x, f(x))` on `X` and `T_i(x, y) - sum_j A_ij T_j(f(x), y)` on `X x X`.
fn closure_invariance(b: &mut Built, problem: &Problem, a: &Matrix, degree: u32) -> Result<()> {
    let sys = &problem.sys;
    let n = sys.dim();
    let xs = sys.space().clone();
    let pair = b.space.clone();
    let k = b.k;
    let ids: Vec<_> = (0..k).map(|i| b.template(FnKey::plain(i), || format!("T{}", i + 1), degree)).collect();
    let x_in_state = block_vars(&xs, 0, n);
    let step = concat_images(&[&x_in_state, sys.dynamics()]);
    for (i, id) in ids.iter().enumerate() {
        let expr = b.program.template_at(*id, &step, &xs)?;
        b.program.add_sos_on_set(format!("closure-step[{}]", i + 1), expr, sys.state_set(), None)?;
    }
    let xx = product_in(&pair, &[sys.state_set(), sys.state_set()])?;
    let fx = dyn_block(sys, &pair, 0)?;
    let y = block_vars(&pair, n, n);
    let shifted = concat_images(&[&fx, &y]);
    for i in 0..k {
        let mut expr = b.program.template_expr(ids[i]);
        for j in 0..k {
            if a[i][j] != 0.0 {
                let t = b.program.template_at(ids[j], &shifted, &pair)?;
                expr.add_scaled(&t, -a[i][j])?;
            }
        }
        b.program.add_sos_on_set(format!("closure-trans[{}]", i + 1), expr, &xx, None)?;
    }
    Ok(())
}

/// Vector closure certificate for safety.
pub fn build_vcc_safety(problem: &Problem, a: &Matrix, assignment: &[usize], opts: &SynthOptions) -> Result<Built> {
    let k = k_of(a)?;
    validate_matrix("A", a, k)?;
    let unsafe_set = problem.unsafe_set()?;
    check_assignment(assignment, unsafe_set.len(), k)?;
    let sys = &problem.sys;
    let pair = pair_space(sys.space())?;
    let mut b = Built::new(CertificateKind::VccSafety, k, &pair, opts);
    b.matrices.insert("A".into(), a.clone());
    b.assignment = assignment.to_vec();
    closure_invariance(&mut b, problem, a, opts.degree)?;
    if unsafe_set.is_empty() {
        b.warnings.push("the unsafe set is empty; safety holds vacuously".into());
    }
    for (j, piece) in unsafe_set.pieces().iter().enumerate() {
        let eta = b.add_eta(format!("eta{}", j + 1));
        let id = b.templates[assignment[j]].1;
        let mut expr = AffinePolyExpr::scalar(&pair, eta, crate::poly::Polynomial::constant(&pair, -1.0))?;
        expr.add_scaled(&b.program.template_expr(id), -1.0)?;
        let dom = product_in(&pair, &[sys.init_set(), piece])?;
        b.program.add_sos_on_set(format!("exclusion[{}]", j + 1), expr, &dom, None)?;
    }
    Ok(b)
}

pub fn synth_vcc_safety(
    problem: &Problem,
    a: &Matrix,
    assignment: &[usize],
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    finish(&build_vcc_safety(problem, a, assignment, opts)?, problem, opts)
}

/// Vector closure certificate for persistence.
pub fn build_vcc_persistence(
    problem: &Problem,
    a: &Matrix,
    gamma: &[f64],
    rho: &[f64],
    assignment: &[usize],
    opts: &SynthOptions,
) -> Result<Built> {
    let k = k_of(a)?;
    validate_matrix("A", a, k)?;
    check_constants("gamma", gamma, k)?;
    check_constants("rho", rho, k)?;
    let vf = problem.vf()?;
    check_assignment(assignment, vf.len(), k)?;
    let sys = &problem.sys;
    let n = sys.dim();
    let pair = pair_space(sys.space())?;
    let triple = triple_space(sys.space())?;
    let mut b = Built::new(CertificateKind::VccPersistence, k, &pair, opts);
    b.matrices.insert("A".into(), a.clone());
    b.gamma = gamma.to_vec();
    b.rho = rho.to_vec();
    b.assignment = assignment.to_vec();
    closure_invariance(&mut b, problem, a, opts.degree)?;
    if vf.is_empty() {
        b.warnings.push("the finitely-visited region is empty; persistence holds vacuously".into());
    }
    let x = block_vars(&triple, 0, n);
    let y = block_vars(&triple, n, n);
    let z = block_vars(&triple, 2 * n, n);
    let xy = concat_images(&[&x, &y]);
    let xz = concat_images(&[&x, &z]);
    let yz = concat_images(&[&y, &z]);
    for (j, piece) in vf.pieces().iter().enumerate() {
        let eta = b.add_eta(format!("eta{}", j + 1));
        let id = b.templates[assignment[j]].1;
        let mut head = b.program.template_at(id, &xy, &triple)?;
        head.add_scaled(&AffinePolyExpr::scalar(&triple, eta, crate::poly::Polynomial::constant(&triple, 1.0))?, -1.0)?;
        head.add_scaled(&b.program.template_at(id, &xz, &triple)?, -1.0)?;
        let mut ante = Vec::new();
        for i in 0..k {
            let ti = b.templates[i].1;
            ante.push((gamma[i], b.program.template_at(ti, &xy, &triple)?));
            ante.push((rho[i], b.program.template_at(ti, &yz, &triple)?));
        }
        let expr = s_procedure_expr(&head, &ante)?;
        let dom = product_in(&triple, &[sys.init_set(), piece, piece])?;
        b.program.add_sos_on_set(format!("decrease[{}]", j + 1), expr, &dom, None)?;
    }
    Ok(b)
}

pub fn synth_vcc_persistence(
    problem: &Problem,
    a: &Matrix,
    gamma: &[f64],
    rho: &[f64],
    assignment: &[usize],
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    finish(&build_vcc_persistence(problem, a, gamma, rho, assignment, opts)?, problem, opts)
}

/// `X \ X_VF` for box regions inside a box state set.
pub(crate) fn outside(problem: &Problem, vf: &RegionUnion) -> Result<Vec<SemiAlgebraicSet>> {
    let sys = &problem.sys;
    let outer = sys.state_set().as_box().ok_or_else(|| Error::validation("complements need a box state set"))?;
    if vf.is_empty() {
        return Ok(vec![sys.state_set().clone()]);
    }
    let inners =
        vf.as_boxes().ok_or_else(|| Error::validation("complements need box-shaped finitely-visited regions"))?;
    match complement_of_union(sys.space(), outer, &inners, "outside") {
        Ok(u) => Ok(u.pieces().to_vec()),
        Err(Error::Validation(_)) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// Vector co-Büchi ranking function for persistence. All components share
/// one `eta`.
pub fn build_vcbrf_persistence(
    problem: &Problem,
    a1: &Matrix,
    a2: &Matrix,
    a3: &Matrix,
    opts: &SynthOptions,
) -> Result<Built> {
    let k = k_of(a1)?;
    for (name, m) in [("A1", a1), ("A2", a2), ("A3", a3)] {
        validate_matrix(name, m, k)?;
    }
    let vf = problem.vf()?;
    let sys = &problem.sys;
    let xs = sys.space().clone();
    let mut b = Built::new(CertificateKind::VcbrfPersistence, k, &xs, opts);
    for (name, m) in [("A1", a1), ("A2", a2), ("A3", a3)] {
        b.matrices.insert(name.into(), m.clone());
    }
    let ids: Vec<_> = (0..k).map(|i| b.template(FnKey::plain(i), || format!("B{}", i + 1), opts.degree)).collect();
    let fx = sys.dynamics().to_vec();
    for (i, id) in ids.iter().enumerate() {
        let expr = b.program.template_expr(*id);
        b.program.add_sos_on_set(format!("rank-init[{}]", i + 1), expr, sys.init_set(), None)?;
    }
    for i in 0..k {
        let mut expr = b.program.template_at(ids[i], &fx, &xs)?;
        for j in 0..k {
            expr.add_scaled(&b.program.template_expr(ids[j]), -a1[i][j])?;
        }
        b.program.add_sos_on_set(format!("rank-step[{}]", i + 1), expr, sys.state_set(), None)?;
    }
    let rest = outside(problem, vf)?;
    let eta = if vf.is_empty() {
        b.warnings.push("the finitely-visited region is empty; persistence holds vacuously".into());
        None
    } else {
        Some(b.add_eta("eta".into()))
    };
    for (c, piece) in rest.iter().enumerate() {
        for i in 0..k {
            let mut expr = b.program.template_expr(ids[i]);
            expr.add_scaled(&b.program.template_at(ids[i], &fx, &xs)?, -1.0)?;
            for j in 0..k {
                expr.add_scaled(&b.program.template_expr(ids[j]), -a2[i][j])?;
            }
            b.program.add_sos_on_set(format!("rank-stay[{}][{}]", c + 1, i + 1), expr, piece, None)?;
        }
    }
    for (v, piece) in vf.pieces().iter().enumerate() {
        let eta = eta.expect("nonempty region has an eta");
        for i in 0..k {
            let mut expr = b.program.template_expr(ids[i]);
            expr.add_scaled(&b.program.template_at(ids[i], &fx, &xs)?, -1.0)?;
            expr.add_scaled(&AffinePolyExpr::scalar(&xs, eta, crate::poly::Polynomial::constant(&xs, 1.0))?, -1.0)?;
            for j in 0..k {
                expr.add_scaled(&b.program.template_expr(ids[j]), -a3[i][j])?;
            }
            b.program.add_sos_on_set(format!("rank-decrease[{}][{}]", v + 1, i + 1), expr, piece, None)?;
        }
    }
    Ok(b)
}

pub fn synth_vcbrf_persistence(
    problem: &Problem,
    a1: &Matrix,
    a2: &Matrix,
    a3: &Matrix,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    finish(&build_vcbrf_persistence(problem, a1, a2, a3, opts)?, problem, opts)
}

/// Vector co-Büchi ranking function over the product with a Büchi automaton:
/// one function per component and automaton state.
pub fn build_vcbrf_ltl(problem: &Problem, a1: &Matrix, a2: &Matrix, a3: &Matrix, opts: &SynthOptions) -> Result<Built> {
    let k = k_of(a1)?;
    for (name, m) in [("A1", a1), ("A2", a2), ("A3", a3)] {
        validate_matrix(name, m, k)?;
    }
    let (lab, aut) = problem.ltl_parts()?;
    let sys = &problem.sys;
    let xs = sys.space().clone();
    let inst = product_constraint_instances(sys, lab, aut, 0)?;
    let mut b = Built::new(CertificateKind::VcbrfLtl, k, &xs, opts);
    for (name, m) in [("A1", a1), ("A2", a2), ("A3", a3)] {
        b.matrices.insert(name.into(), m.clone());
    }
    b.warnings.extend(inst.warnings.iter().cloned());
    let fx = sys.dynamics().to_vec();
    let names = aut.states().to_vec();
    let deg = opts.degree;
    let tmpl =
        |b: &mut Built, i: usize, q: usize| b.template(FnKey::state(i, q), || format!("B{}[{}]", i + 1, names[q]), deg);
    let eta = if inst.ranking.iter().any(|r| matches!(r, ProductInstance::RankAccept { .. })) {
        Some(b.add_eta("eta".into()))
    } else {
        None
    };
    for ins in &inst.ranking {
        match *ins {
            ProductInstance::RankInit { q0 } => {
                for i in 0..k {
                    let id = tmpl(&mut b, i, q0);
                    let expr = b.program.template_expr(id);
                    b.program.add_sos_on_set(
                        format!("rank-init[{}][{}]", i + 1, aut.states()[q0]),
                        expr,
                        sys.init_set(),
                        None,
                    )?;
                }
            }
            ProductInstance::RankStep { letter, piece, from, to } => {
                let dom = letter_piece(problem, letter, piece)?;
                for i in 0..k {
                    let id = tmpl(&mut b, i, to);
                    let mut expr = b.program.template_at(id, &fx, &xs)?;
                    for j in 0..k {
                        if a1[i][j] != 0.0 {
                            let t = tmpl(&mut b, j, from);
                            expr.add_scaled(&b.program.template_expr(t), -a1[i][j])?;
                        }
                    }
                    b.program.add_sos_on_set(
                        format!(
                            "rank-step[{}][{}:{}][{}->{}]",
                            i + 1,
                            aut.alphabet()[letter],
                            piece + 1,
                            names[from],
                            names[to]
                        ),
                        expr,
                        &dom,
                        None,
                    )?;
                }
            }
            ProductInstance::RankStay { letter, piece, from, to }
            | ProductInstance::RankAccept { letter, piece, from, to } => {
                let accept = matches!(ins, ProductInstance::RankAccept { .. });
                let mat = if accept { a3 } else { a2 };
                let dom = letter_piece(problem, letter, piece)?;
                for i in 0..k {
                    let head = tmpl(&mut b, i, from);
                    let next = tmpl(&mut b, i, to);
                    let mut expr = b.program.template_expr(head);
                    expr.add_scaled(&b.program.template_at(next, &fx, &xs)?, -1.0)?;
                    if accept {
                        let e = eta.expect("accepting edges have an eta");
                        expr.add_scaled(
                            &AffinePolyExpr::scalar(&xs, e, crate::poly::Polynomial::constant(&xs, 1.0))?,
                            -1.0,
                        )?;
                    }
                    for j in 0..k {
                        if mat[i][j] != 0.0 {
                            let t = tmpl(&mut b, j, from);
                            expr.add_scaled(&b.program.template_expr(t), -mat[i][j])?;
                        }
                    }
                    let tag = if accept { "rank-decrease" } else { "rank-stay" };
                    b.program.add_sos_on_set(
                        format!(
                            "{tag}[{}][{}:{}][{}->{}]",
                            i + 1,
                            aut.alphabet()[letter],
                            piece + 1,
                            names[from],
                            names[to]
                        ),
                        expr,
                        &dom,
                        None,
                    )?;
                }
            }
            _ => {}
        }
    }
    Ok(b)
}

pub fn synth_vcbrf_ltl(
    problem: &Problem,
    a1: &Matrix,
    a2: &Matrix,
    a3: &Matrix,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    finish(&build_vcbrf_ltl(problem, a1, a2, a3, opts)?, problem, opts)
}

pub(crate) fn letter_piece(problem: &Problem, letter: usize, piece: usize) -> Result<SemiAlgebraicSet> {
    let (lab, aut) = problem.ltl_parts()?;
    let name = &aut.alphabet()[letter];
    let region = lab
        .letters()
        .iter()
        .find(|(l, _)| l == name)
        .map(|(_, r)| r)
        .ok_or_else(|| Error::validation(format!("letter {name} has no labeling region")))?;
    region.pieces().get(piece).cloned().ok_or_else(|| Error::structural(format!("letter {name} has no piece {piece}")))
}

/// Vector closure certificate over the product with a Büchi automaton: one
/// function per component and automaton state pair. Accepting state number
/// `j` (in increasing state order) is handled by function `assignment[j]`
/// with its own `eta_j`.
pub fn build_vcc_ltl(
    problem: &Problem,
    a: &Matrix,
    gamma: &[f64],
    rho: &[f64],
    assignment: &[usize],
    opts: &SynthOptions,
) -> Result<Built> {
    let k = k_of(a)?;
    validate_matrix("A", a, k)?;
    check_constants("gamma", gamma, k)?;
    check_constants("rho", rho, k)?;
    let (lab, aut) = problem.ltl_parts()?;
    check_assignment(assignment, aut.accepting().len(), k)?;
    let sys = &problem.sys;
    let n = sys.dim();
    let xs = sys.space().clone();
    let pair = pair_space(&xs)?;
    let triple = triple_space(&xs)?;
    let inst = product_constraint_instances(sys, lab, aut, 0)?;
    let mut b = Built::new(CertificateKind::VccLtl, k, &pair, opts);
    b.matrices.insert("A".into(), a.clone());
    b.gamma = gamma.to_vec();
    b.rho = rho.to_vec();
    b.assignment = assignment.to_vec();
    b.warnings.extend(inst.warnings.iter().cloned());
    let names = aut.states().to_vec();
    let deg = opts.degree;
    let tmpl = |b: &mut Built, i: usize, q: usize, p: usize| {
        b.template(FnKey::pair(i, q, p), || format!("T{}[{},{}]", i + 1, names[q], names[p]), deg)
    };
    let accepting: Vec<usize> = aut.accepting().iter().copied().collect();
    let etas: Vec<_> = accepting.iter().map(|r| b.add_eta(format!("eta[{}]", names[*r]))).collect();
    let x_state = block_vars(&xs, 0, n);
    let step = concat_images(&[&x_state, sys.dynamics()]);
    let fx = dyn_block(sys, &pair, 0)?;
    let y = block_vars(&pair, n, n);
    let shifted = concat_images(&[&fx, &y]);
    let (tx, ty, tz) = (block_vars(&triple, 0, n), block_vars(&triple, n, n), block_vars(&triple, 2 * n, n));
    let (xy, xz, yz) = (concat_images(&[&tx, &ty]), concat_images(&[&tx, &tz]), concat_images(&[&ty, &tz]));
    for ins in &inst.closure {
        match *ins {
            ProductInstance::ClosureStep { letter, piece, from, to } => {
                let dom = letter_piece(problem, letter, piece)?;
                for i in 0..k {
                    let id = tmpl(&mut b, i, from, to);
                    let expr = b.program.template_at(id, &step, &xs)?;
                    b.program.add_sos_on_set(
                        format!(
                            "closure-step[{}][{}:{}][{}->{}]",
                            i + 1,
                            aut.alphabet()[letter],
                            piece + 1,
                            names[from],
                            names[to]
                        ),
                        expr,
                        &dom,
                        None,
                    )?;
                }
            }
            ProductInstance::ClosureTrans { letter, piece, from, to, target } => {
                let dom = product_in(&pair, &[&letter_piece(problem, letter, piece)?, sys.state_set()])?;
                for i in 0..k {
                    let id = tmpl(&mut b, i, from, target);
                    let mut expr = b.program.template_expr(id);
                    for j in 0..k {
                        if a[i][j] != 0.0 {
                            let t = tmpl(&mut b, j, to, target);
                            expr.add_scaled(&b.program.template_at(t, &shifted, &pair)?, -a[i][j])?;
                        }
                    }
                    b.program.add_sos_on_set(
                        format!(
                            "closure-trans[{}][{}:{}][{}->{},{}]",
                            i + 1,
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
            }
            ProductInstance::ClosureRecur { q0, r } => {
                let jr = accepting.iter().position(|s| *s == r).expect("r is accepting");
                let j = assignment[jr];
                let head_id = tmpl(&mut b, j, q0, r);
                let mut head = b.program.template_at(head_id, &xy, &triple)?;
                head.add_scaled(
                    &AffinePolyExpr::scalar(&triple, etas[jr], crate::poly::Polynomial::constant(&triple, 1.0))?,
                    -1.0,
                )?;
                head.add_scaled(&b.program.template_at(head_id, &xz, &triple)?, -1.0)?;
                let mut ante = Vec::new();
                for i in 0..k {
                    let t0 = tmpl(&mut b, i, q0, r);
                    let tr = tmpl(&mut b, i, r, r);
                    ante.push((gamma[i], b.program.template_at(t0, &xy, &triple)?));
                    ante.push((rho[i], b.program.template_at(tr, &yz, &triple)?));
                }
                let expr = s_procedure_expr(&head, &ante)?;
                let dom = product_in(&triple, &[sys.init_set(), sys.state_set(), sys.state_set()])?;
                b.program.add_sos_on_set(format!("decrease[{}][{}]", names[q0], names[r]), expr, &dom, None)?;
            }
            _ => {}
        }
    }
    Ok(b)
}

pub fn synth_vcc_ltl(
    problem: &Problem,
    a: &Matrix,
    gamma: &[f64],
    rho: &[f64],
    assignment: &[usize],
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    finish(&build_vcc_ltl(problem, a, gamma, rho, assignment, opts)?, problem, opts)
}
