//! Infeasible-start primal-dual interior-point method with the HKM search
//! direction and Mehrotra predictor-corrector steps.
//!
//! The Schur complement `M_ij = tr(A_i X A_j Z^-1)` is block diagonal over
//! groups of rows that share no PSD block, and each group is factored on its
//! own. Free variables enter through the bordered system
//! `[M F; F^T 0]`, solved by eliminating `dy` and factoring `F^T M^-1 F`.
//!
//! Infeasibility is reported from a Farkas certificate read off the dual
//! iterate: with `y_bar = y / (b . y)`, `-A^T(y_bar)` PSD and `F^T y_bar = 0`
//! prove that no primal point exists. A symmetric test on the primal iterate
//! detects unboundedness.

use nalgebra::{DMatrix, DVector};

use super::{Finding, SdpProblem, SdpSolution, SdpStatus};
use crate::error::{Error, Result};

/// Rounds of iterative refinement applied to each Newton system.
const REFINE_STEPS: usize = 3;

/// Search direction `(dX, dy, df, dZ)`.
type Direction = (Vec<DMatrix<f64>>, DVector<f64>, DVector<f64>, Vec<DMatrix<f64>>);

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Farkas certificates are accepted when their violation is below this.
    pub infeasibility_tol: f64,
    /// Residual and gap level accepted as near-optimal when the iteration
    /// cannot continue.
    pub near_tol: f64,
    pub verbosity: u8,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, infeasibility_tol: 1e-8, near_tol: 1e-5, verbosity: 0 }
    }
}

/// Full (both triangles) entries of one row restricted to one block.
struct RowBlock {
    row: usize,
    entries: Vec<(usize, usize, f64)>,
}

struct Layout {
    /// For each block, the rows touching it.
    block_rows: Vec<Vec<RowBlock>>,
    groups: Vec<Vec<usize>>,
    /// Row -> (group, index within group).
    row_pos: Vec<(usize, usize)>,
    block_group: Vec<Option<usize>>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl Layout {
    fn new(p: &SdpProblem) -> Self {
        let nb = p.blocks.len();
        let m = p.rows.len();
        // Union rows through blocks: nodes 0..m are rows, m..m+nb are blocks.
        let mut parent: Vec<usize> = (0..m + nb).collect();
        let mut block_rows: Vec<Vec<RowBlock>> = (0..nb).map(|_| Vec::new()).collect();
        for (i, row) in p.rows.iter().enumerate() {
            let mut per_block: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> = Default::default();
            for e in &row.entries {
                let list = per_block.entry(e.block).or_default();
                list.push((e.r, e.c, e.v));
                if e.r != e.c {
                    list.push((e.c, e.r, e.v));
                }
            }
            for (b, entries) in per_block {
                let (ri, rb) = (find(&mut parent, i), find(&mut parent, m + b));
                parent[ri] = rb;
                block_rows[b].push(RowBlock { row: i, entries });
            }
        }
        let mut root_group = std::collections::BTreeMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut row_pos = vec![(0, 0); m];
        for (i, pos) in row_pos.iter_mut().enumerate() {
            let r = find(&mut parent, i);
            let g = *root_group.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            *pos = (g, groups[g].len());
            groups[g].push(i);
        }
        let block_group = (0..nb).map(|b| block_rows[b].first().map(|rb| row_pos[rb.row].0)).collect();
        Self { block_rows, groups, row_pos, block_group }
    }
}

struct Work<'a> {
    p: &'a SdpProblem,
    lay: Layout,
    c: Vec<DMatrix<f64>>,
}

impl Work<'_> {
    fn a_op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.p.rows.len());
        for (b, rows) in self.lay.block_rows.iter().enumerate() {
            let xb = &x[b];
            for rb in rows {
                let mut s = 0.0;
                for &(r, c, v) in &rb.entries {
                    s += v * xb[(r, c)];
                }
                out[rb.row] += s;
            }
        }
        out
    }

    fn f_op(&self, f: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.p.rows.len(),
            self.p.rows.iter().map(|row| row.free.iter().map(|&(k, v)| v * f[k]).sum::<f64>()),
        )
    }

    fn ft_op(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.p.n_free);
        for (i, row) in self.p.rows.iter().enumerate() {
            for &(k, v) in &row.free {
                out[k] += v * y[i];
            }
        }
        out
    }

    fn at_op(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.p.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (b, rows) in self.lay.block_rows.iter().enumerate() {
            let ob = &mut out[b];
            for rb in rows {
                let yi = y[rb.row];
                if yi == 0.0 {
                    continue;
                }
                for &(r, c, v) in &rb.entries {
                    ob[(r, c)] += yi * v;
                }
            }
        }
        out
    }

    /// Dense Schur complement blocks, one per row group.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let mut ms: Vec<DMatrix<f64>> = self.lay.groups.iter().map(|g| DMatrix::zeros(g.len(), g.len())).collect();
        for (b, rows) in self.lay.block_rows.iter().enumerate() {
            let Some(g) = self.lay.block_group[b] else { continue };
            let n = self.p.blocks[b];
            let xs = x[b].as_slice();
            let zs = zinv[b].as_slice();
            let m = &mut ms[g];
            for (ii, ri) in rows.iter().enumerate() {
                let li = self.lay.row_pos[ri.row].1;
                for rj in &rows[ii..] {
                    let lj = self.lay.row_pos[rj.row].1;
                    let mut s = 0.0;
                    for &(a, bb, v) in &ri.entries {
                        let mut t = 0.0;
                        for &(c, d, w) in &rj.entries {
                            t += w * xs[bb + c * n] * zs[d + a * n];
                        }
                        s += v * t;
                    }
                    m[(li, lj)] += s;
                    if li != lj {
                        m[(lj, li)] += s;
                    }
                }
            }
        }
        ms
    }
}

enum Factor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        if m.nrows() == 0 {
            return Some(Factor::Chol(nalgebra::Cholesky::new(m)?));
        }
        if let Some(c) = nalgebra::Cholesky::new(m.clone()) {
            return Some(Factor::Chol(c));
        }
        let scale = m.diagonal().amax().max(1e-300);
        for k in [1e-14, 1e-12, 1e-10] {
            let mut r = m.clone();
            for i in 0..r.nrows() {
                r[(i, i)] += k * scale;
            }
            if let Some(c) = nalgebra::Cholesky::new(r) {
                return Some(Factor::Chol(c));
            }
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(Factor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Chol(c) => c.solve(b),
            Factor::Lu(l) => l.solve(b).unwrap_or_else(|| DVector::zeros(b.len())),
        }
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.clone().symmetric_eigenvalues().min()
}

/// Largest `a` with `x + a dx` PSD (infinity if unbounded).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n == 1 {
        return if dx[(0, 0)] < 0.0 { -x[(0, 0)] / dx[(0, 0)] } else { f64::INFINITY };
    }
    let Some(ch) = x.clone().cholesky() else { return 0.0 };
    let l = ch.l();
    let Some(w1) = l.solve_lower_triangular(dx) else { return 0.0 };
    let Some(w) = l.solve_lower_triangular(&w1.transpose()) else { return 0.0 };
    let lam = min_eig(&sym(&w));
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn inverse_spd(z: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if z.nrows() == 1 {
        let v = z[(0, 0)];
        return (v > 0.0).then(|| DMatrix::from_element(1, 1, 1.0 / v));
    }
    Some(sym(&z.clone().cholesky()?.inverse()))
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    f: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    pres: f64,
    dres: f64,
    gap: f64,
}

/// Solve `p` to relative accuracy `opts.tol`. Deterministic for identical inputs.
pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    if let Some(f) = p.validate().into_iter().find(Finding::is_error) {
        return Err(Error::structural(format!("malformed SDP: {f}")));
    }
    p.check_size()?;
    if let Some(i) = p.rows.iter().position(|r| r.entries.iter().all(|e| e.v == 0.0)) {
        return Err(Error::structural(format!("row {i} involves no PSD entry")));
    }
    let mut c: Vec<DMatrix<f64>> = p.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for e in &p.c_entries {
        c[e.block][(e.r, e.c)] += e.v;
        if e.r != e.c {
            c[e.block][(e.c, e.r)] += e.v;
        }
    }
    let w = Work { p, lay: Layout::new(p), c };
    let m = p.rows.len();
    let nf = p.n_free;
    let b = DVector::from_iterator(m, p.rows.iter().map(|r| r.rhs));
    let cf = DVector::from_column_slice(&p.c_free);
    let cone: f64 = p.cone_dim() as f64;
    let norm_b = b.norm();
    let norm_c = fro(&w.c) + cf.norm();

    let mut it = initial_point(&w);
    let measure = |it: &Iterate| -> Measures {
        let ax = w.a_op(&it.x) + w.f_op(&it.f);
        let rp = &b - ax;
        let aty = w.at_op(&it.y);
        let rd: Vec<DMatrix<f64>> = (0..p.blocks.len()).map(|k| &w.c[k] - &aty[k] - &it.z[k]).collect();
        let rf = &cf - w.ft_op(&it.y);
        let pobj = inner(&w.c, &it.x) + cf.dot(&it.f);
        let dobj = b.dot(&it.y);
        Measures {
            pobj,
            dobj,
            pres: rp.norm() / (1.0 + norm_b),
            dres: (fro(&rd) + rf.norm()) / (1.0 + norm_c),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        }
    };

    let finish = |it: Iterate, status: SdpStatus, iters: usize| -> SdpSolution {
        let ms = measure(&it);
        let near = ms.pres <= opts.near_tol && ms.dres <= opts.near_tol && ms.gap <= opts.near_tol;
        let status = if status == SdpStatus::NumericalFailure && near { SdpStatus::NearOptimal } else { status };
        SdpSolution {
            status,
            x: it.x,
            free: it.f.iter().copied().collect(),
            y: it.y.iter().copied().collect(),
            z: it.z,
            primal_objective: ms.pobj,
            dual_objective: ms.dobj,
            primal_residual: ms.pres,
            dual_residual: ms.dres,
            gap: ms.gap,
            iterations: iters,
        }
    };

    let note = |msg: &str| {
        if opts.verbosity > 0 {
            eprintln!("stop: {msg}");
        }
    };
    let mut stalls = 0;
    for iter in 0..opts.max_iter {
        let ms = measure(&it);
        let mu = inner(&it.x, &it.z) / cone.max(1.0);
        if opts.verbosity > 0 {
            eprintln!(
                "{iter:3} pobj {:+.8e} dobj {:+.8e} pres {:.2e} dres {:.2e} gap {:.2e} mu {:.2e}",
                ms.pobj, ms.dobj, ms.pres, ms.dres, ms.gap, mu
            );
        }
        if ms.pres <= opts.tol && ms.dres <= opts.tol && ms.gap <= opts.tol {
            return Ok(finish(it, SdpStatus::Optimal, iter));
        }
        if iter >= 3 {
            if farkas_dual(&w, &it.y, &b, opts.infeasibility_tol) {
                return Ok(finish(it, SdpStatus::Infeasible, iter));
            }
            if farkas_primal(&w, &it, &b, opts.infeasibility_tol) {
                return Ok(finish(it, SdpStatus::Unbounded, iter));
            }
        }

        let Some(zinv) = it.z.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            note("dual slack lost definiteness");
            return Ok(finish(it, SdpStatus::NumericalFailure, iter));
        };
        let rp = &b - w.a_op(&it.x) - w.f_op(&it.f);
        let aty = w.at_op(&it.y);
        let rd: Vec<DMatrix<f64>> = (0..p.blocks.len()).map(|k| &w.c[k] - &aty[k] - &it.z[k]).collect();
        let rf = &cf - w.ft_op(&it.y);

        let schur = w.schur(&it.x, &zinv);
        let Some(factors) = schur.iter().cloned().map(Factor::new).collect::<Option<Vec<_>>>() else {
            note("Schur complement is singular");
            return Ok(finish(it, SdpStatus::NumericalFailure, iter));
        };
        let msolve = |v: &DVector<f64>| -> DVector<f64> {
            let mut out = DVector::zeros(m);
            for (g, rows) in w.lay.groups.iter().enumerate() {
                let local = DVector::from_iterator(rows.len(), rows.iter().map(|&i| v[i]));
                let s = factors[g].solve(&local);
                for (k, &i) in rows.iter().enumerate() {
                    out[i] = s[k];
                }
            }
            out
        };
        // M^-1 F, column by column.
        let mut minv_f = DMatrix::zeros(m, nf);
        if nf > 0 {
            let mut fcols = DMatrix::zeros(m, nf);
            for (i, row) in p.rows.iter().enumerate() {
                for &(k, v) in &row.free {
                    fcols[(i, k)] += v;
                }
            }
            for k in 0..nf {
                let col = msolve(&fcols.column(k).into_owned());
                minv_f.set_column(k, &col);
            }
        }
        let s_fact = if nf > 0 {
            let mut s = DMatrix::zeros(nf, nf);
            for (i, row) in p.rows.iter().enumerate() {
                for &(k, v) in &row.free {
                    for l in 0..nf {
                        s[(k, l)] += v * minv_f[(i, l)];
                    }
                }
            }
            match Factor::new(sym(&s)) {
                Some(f) => Some(f),
                None => {
                    note("free-variable Schur complement is singular");
                    return Ok(finish(it, SdpStatus::NumericalFailure, iter));
                }
            }
        } else {
            None
        };

        let mmul = |v: &DVector<f64>| -> DVector<f64> {
            let mut out = DVector::zeros(m);
            for (g, rows) in w.lay.groups.iter().enumerate() {
                let local = DVector::from_iterator(rows.len(), rows.iter().map(|&i| v[i]));
                let s = &schur[g] * local;
                for (k, &i) in rows.iter().enumerate() {
                    out[i] = s[k];
                }
            }
            out
        };
        // Solves `M dy + F df = h`, `F^T dy = r`.
        let kkt = |h: &DVector<f64>, r: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
            let minv_h = msolve(h);
            let df = match &s_fact {
                Some(sf) => sf.solve(&(w.ft_op(&minv_h) - r)),
                None => DVector::zeros(0),
            };
            let dy = if nf > 0 { &minv_h - &minv_f * &df } else { minv_h };
            (dy, df)
        };
        let direction = |k: &[DMatrix<f64>]| -> Direction {
            let g: Vec<DMatrix<f64>> =
                (0..p.blocks.len()).map(|q| sym(&(&k[q] - &it.x[q] * &rd[q] * &zinv[q]))).collect();
            let h = &rp - w.a_op(&g);
            let (mut dy, mut df) = kkt(&h, &rf);
            // Iterative refinement against the unregularized system.
            let scale = h.amax() + rf.amax() + 1e-300;
            for _ in 0..REFINE_STEPS {
                let r1 = &h - mmul(&dy) - w.f_op(&df);
                let r2 = &rf - w.ft_op(&dy);
                if r1.amax() + r2.amax() <= 1e-14 * scale {
                    break;
                }
                let (cy, cf) = kkt(&r1, &r2);
                dy += cy;
                if nf > 0 {
                    df += cf;
                }
            }
            let atdy = w.at_op(&dy);
            let dz: Vec<DMatrix<f64>> = (0..p.blocks.len()).map(|q| &rd[q] - &atdy[q]).collect();
            let dx: Vec<DMatrix<f64>> =
                (0..p.blocks.len()).map(|q| sym(&(&k[q] - &it.x[q] * &dz[q] * &zinv[q]))).collect();
            (dx, df, dy, dz)
        };
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| -> (f64, f64) {
            let ap = (0..p.blocks.len()).map(|q| max_step(&it.x[q], &dx[q])).fold(f64::INFINITY, f64::min);
            let ad = (0..p.blocks.len()).map(|q| max_step(&it.z[q], &dz[q])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let k_aff: Vec<DMatrix<f64>> = it.x.iter().map(|x| -x).collect();
        let (dxa, _, _, dza) = direction(&k_aff);
        let (apa, ada) = steps(&dxa, &dza);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let x_aff: Vec<DMatrix<f64>> = (0..p.blocks.len()).map(|q| &it.x[q] + &dxa[q] * apa).collect();
        let z_aff: Vec<DMatrix<f64>> = (0..p.blocks.len()).map(|q| &it.z[q] + &dza[q] * ada).collect();
        let mu_aff = inner(&x_aff, &z_aff) / cone.max(1.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let k_cor: Vec<DMatrix<f64>> =
            (0..p.blocks.len()).map(|q| &zinv[q] * (sigma * mu) - &it.x[q] - &dxa[q] * &dza[q] * &zinv[q]).collect();
        let (dx, df, dy, dz) = direction(&k_cor);
        let (ap, ad) = steps(&dx, &dz);
        let tau = 0.95;
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if opts.verbosity > 1 {
            eprintln!("    step primal {ap:.3e} dual {ad:.3e} sigma {sigma:.3e}");
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                note("step lengths stalled");
                return Ok(finish(it, SdpStatus::NumericalFailure, iter));
            }
        } else {
            stalls = 0;
        }
        for q in 0..p.blocks.len() {
            it.x[q] += &dx[q] * ap;
            it.z[q] += &dz[q] * ad;
            it.x[q] = sym(&it.x[q]);
            it.z[q] = sym(&it.z[q]);
        }
        if nf > 0 {
            it.f += df * ap;
        }
        it.y += dy * ad;
    }
    let iters = opts.max_iter;
    Ok(finish(it, SdpStatus::MaxIter, iters))
}

fn initial_point(w: &Work) -> Iterate {
    let p = w.p;
    let mut row_norm = vec![0.0f64; p.rows.len()];
    for rows in &w.lay.block_rows {
        for rb in rows {
            row_norm[rb.row] += rb.entries.iter().map(|e| e.2 * e.2).sum::<f64>();
        }
    }
    let row_norm: Vec<f64> = row_norm.into_iter().map(f64::sqrt).collect();
    let max_ratio = p.rows.iter().zip(&row_norm).map(|(r, n)| (1.0 + r.rhs.abs()) / (1.0 + n)).fold(0.0, f64::max);
    let max_norm = row_norm.iter().copied().fold(0.0, f64::max);
    let x = p
        .blocks
        .iter()
        .map(|&n| {
            let nf = n as f64;
            DMatrix::identity(n, n) * 10f64.max(nf.sqrt()).max(nf * max_ratio)
        })
        .collect();
    let z = p
        .blocks
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let nf = n as f64;
            DMatrix::identity(n, n) * 10f64.max(nf.sqrt()).max(max_norm).max(w.c[b].norm())
        })
        .collect();
    Iterate { x, f: DVector::zeros(p.n_free), y: DVector::zeros(p.rows.len()), z }
}

fn farkas_dual(w: &Work, y: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    let by = b.dot(y);
    if by <= 0.0 {
        return false;
    }
    let ybar = y / by;
    if w.ft_op(&ybar).amax() > tol {
        return false;
    }
    let z = w.at_op(&ybar);
    z.iter().all(|m| min_eig(&(-m)) >= -tol)
}

fn farkas_primal(w: &Work, it: &Iterate, b: &DVector<f64>, tol: f64) -> bool {
    let cx = inner(&w.c, &it.x) + w.p.c_free.iter().zip(it.f.iter()).map(|(a, c)| a * c).sum::<f64>();
    if cx >= 0.0 {
        return false;
    }
    let s = -1.0 / cx;
    let xs: Vec<DMatrix<f64>> = it.x.iter().map(|m| m * s).collect();
    let fs = &it.f * s;
    let r = w.a_op(&xs) + w.f_op(&fs);
    let _ = b;
    r.amax() <= tol
}
