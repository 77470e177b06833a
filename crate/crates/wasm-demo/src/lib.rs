//! Browser bindings: trajectory simulation from a run config, grid
//! evaluation of a polynomial, and the five-state closure certificate audit.

use vcert::config::parse_config;
use vcert::discrete::{
    pair_space, quadratic_vcc, vcc_audit_discrete, DiscreteAuditOptions, FiniteSystem, Instances, QuadraticVcc,
};
use vcert::poly::{Polynomial, VariableSpace};
use vcert::sysmodel::simulate;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Row-major square matrix from a flat list.
fn square(flat: &[f64]) -> Result<Vec<Vec<f64>>, JsError> {
    let k = (flat.len() as f64).sqrt().round() as usize;
    if k == 0 || k * k != flat.len() {
        return Err(JsError::new("matrix entries must form a square"));
    }
    Ok(flat.chunks(k).map(<[f64]>::to_vec).collect())
}

/// Iterate the system of a TOML run config from `x0`. Returns the visited
/// states flattened row by row; the dimension is the length of `x0`.
#[wasm_bindgen]
pub fn simulate_config(config: &str, x0: &[f64], steps: usize) -> Result<Vec<f64>, JsError> {
    let cfg = parse_config(config).map_err(js)?;
    let sys = cfg.build_system().map_err(js)?;
    let traj = simulate(&sys, x0, steps).map_err(js)?;
    Ok(traj.states.concat())
}

/// Values of `expr` in variables `x`, `y` on an `n` by `n` grid over
/// `[xlo, xhi] x [ylo, yhi]`, row `j` holding `y = ylo + j * dy`.
#[wasm_bindgen]
pub fn eval_grid(expr: &str, xlo: f64, xhi: f64, ylo: f64, yhi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if !(2..=400).contains(&n) {
        return Err(JsError::new("grid size must be between 2 and 400"));
    }
    let space = VariableSpace::new(["x", "y"]).map_err(js)?;
    let p = Polynomial::parse(&space, expr).map_err(js)?;
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(p.eval(&[step(xlo, xhi, i), step(ylo, yhi, j)]).map_err(js)?);
        }
    }
    Ok(out)
}

/// Audit a two-function closure certificate on the five-state system over
/// the instances its safety proof uses. Functions are in `x`, `y`; `a` is
/// row-major. Returns the per-instance report.
#[wasm_bindgen]
pub fn fig1_audit(t1: &str, t2: &str, a: &[f64], eta: f64, rounding_tol: f64) -> Result<String, JsError> {
    let ts = FiniteSystem::fig1();
    let space = pair_space();
    let funcs = [t1, t2].iter().map(|t| Polynomial::parse(&space, t)).collect::<Result<Vec<_>, _>>().map_err(js)?;
    let opts = DiscreteAuditOptions {
        assignment: Some(vec![0, 1]),
        rounding_tol: (rounding_tol > 0.0).then_some(rounding_tol),
    };
    let audit = vcc_audit_discrete(&ts, &funcs, &square(a)?, eta, &Instances::fig1_proof(), &opts).map_err(js)?;
    Ok(audit.to_text())
}

/// Search for quadratic functions passing the exact audit for a fixed `a`.
#[wasm_bindgen]
pub fn fig1_search(a: &[f64], eta: f64) -> Result<String, JsError> {
    let ts = FiniteSystem::fig1();
    let r = quadratic_vcc(&ts, &square(a)?, eta, &Instances::fig1_proof(), &[0, 1]).map_err(js)?;
    Ok(match r {
        QuadraticVcc::Found { funcs, audit, .. } => {
            let mut s = String::new();
            for (i, f) in funcs.iter().enumerate() {
                s.push_str(&format!("T{} = {}\n", i + 1, f.to_text()));
            }
            s + &audit.to_text()
        }
        QuadraticVcc::NotFound { margin, status } => format!("not found: best margin {margin:e} ({status:?})\n"),
    })
}
