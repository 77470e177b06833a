//! Standard-form semidefinite programs and a dense interior-point solver.
//!
//! Primal form:
//!
//! ```text
//! minimize    sum_b <C_b, X_b> + c_f . f
//! subject to  sum_b <A_ib, X_b> + F_i . f = b_i      (i = 1..m)
//!             X_b PSD,  f free
//! ```
//!
//! Matrices are addressed by upper-triangle entries `(r, c)` with `r <= c`;
//! an entry `v` at `r != c` denotes the symmetric pair, so it contributes
//! `2 v X[r,c]` to `<A, X>`. A 1x1 block is a nonnegative scalar.
//!
//! # Text format
//!
//! One record per line, whitespace separated, zero-based indices:
//!
//! ```text
//! sdp 1
//! blocks <n_1> <n_2> ...
//! free <p>
//! rows <m>
//! c <block> <r> <c> <value>        objective entry on a PSD block
//! cf <index> <value>               objective coefficient of a free variable
//! a <row> <block> <r> <c> <value>  constraint entry on a PSD block
//! f <row> <index> <value>          constraint coefficient of a free variable
//! b <row> <value>                  right-hand side
//! ```
//!
//! Records appear in the order above, sorted by index, so equal problems
//! serialize to identical text.

mod solver;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use solver::{solve, SolveOptions};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Problems with more equality rows than this are rejected before solving.
pub const MAX_ROWS: usize = 4000;

/// Skipped programs up to this many rows are still compiled and validated.
pub const COMPILE_LIMIT: usize = 250_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub r: usize,
    pub c: usize,
    pub v: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub entries: Vec<Entry>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub n_free: usize,
    pub rows: Vec<Row>,
    pub c_entries: Vec<Entry>,
    pub c_free: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// Stopped by numerical trouble with residuals and gap below
    /// `SolveOptions::near_tol` but above `tol`.
    NearOptimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<DMatrix<f64>>,
    pub free: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `||b - A(X) - F f|| / (1 + ||b||)`.
    pub primal_residual: f64,
    /// Relative dual residual including the free-variable equations.
    pub dual_residual: f64,
    /// `|pobj - dobj| / (1 + |pobj| + |dobj|)`.
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn min_eigenvalue(&self) -> f64 {
        self.x.iter().map(|m| m.clone().symmetric_eigenvalues().min()).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    ZeroRow(usize),
    DuplicateRows(usize, usize),
    EmptyBlock(usize),
    UnusedBlock(usize),
    UnusedFree(usize),
    /// A free variable with no objective weight that appears in a single row.
    WeaklyDetermined(usize),
    BadIndex(String),
}

impl Finding {
    pub fn is_error(&self) -> bool {
        matches!(self, Finding::ZeroRow(_) | Finding::EmptyBlock(_) | Finding::BadIndex(_))
    }
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::ZeroRow(i) => write!(f, "error: row {i} has no coefficients"),
            Finding::DuplicateRows(i, j) => write!(f, "warning: rows {i} and {j} are identical"),
            Finding::EmptyBlock(b) => write!(f, "error: block {b} has dimension 0"),
            Finding::UnusedBlock(b) => write!(f, "warning: block {b} appears in no row"),
            Finding::UnusedFree(k) => write!(f, "warning: free variable {k} appears in no row"),
            Finding::WeaklyDetermined(k) => {
                write!(f, "warning: free variable {k} appears in one row only")
            }
            Finding::BadIndex(s) => write!(f, "error: {s}"),
        }
    }
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, n_free: usize) -> Self {
        Self { blocks, n_free, rows: Vec::new(), c_entries: Vec::new(), c_free: vec![0.0; n_free] }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Total PSD dimension, the barrier parameter of the cone.
    pub fn cone_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Sort entries, merge duplicates, and drop zeros so that equal problems
    /// have equal representations.
    pub fn canonicalize(&mut self) {
        fn merge(entries: &mut Vec<Entry>) {
            for e in entries.iter_mut() {
                if e.r > e.c {
                    std::mem::swap(&mut e.r, &mut e.c);
                }
            }
            let mut map: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
            for e in entries.iter() {
                *map.entry((e.block, e.r, e.c)).or_insert(0.0) += e.v;
            }
            *entries =
                map.into_iter().filter(|(_, v)| *v != 0.0).map(|((block, r, c), v)| Entry { block, r, c, v }).collect();
        }
        merge(&mut self.c_entries);
        for row in &mut self.rows {
            merge(&mut row.entries);
            let mut map: BTreeMap<usize, f64> = BTreeMap::new();
            for &(k, v) in &row.free {
                *map.entry(k).or_insert(0.0) += v;
            }
            row.free = map.into_iter().filter(|(_, v)| *v != 0.0).collect();
        }
    }

    pub fn validate(&self) -> Vec<Finding> {
        let mut out = Vec::new();
        for (b, &n) in self.blocks.iter().enumerate() {
            if n == 0 {
                out.push(Finding::EmptyBlock(b));
            }
        }
        let check = |e: &Entry, out: &mut Vec<Finding>, what: &str| {
            if e.block >= self.blocks.len() || e.c >= self.blocks[e.block] || e.r > e.c {
                out.push(Finding::BadIndex(format!("{what} entry {e:?} is out of range")));
            }
        };
        for e in &self.c_entries {
            check(e, &mut out, "objective");
        }
        let mut block_used = vec![false; self.blocks.len()];
        let mut free_rows = vec![0usize; self.n_free];
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            for e in &row.entries {
                check(e, &mut out, &format!("row {i}"));
                if e.block < block_used.len() {
                    block_used[e.block] = true;
                }
            }
            for &(k, _) in &row.free {
                if k >= self.n_free {
                    out.push(Finding::BadIndex(format!("row {i} references free variable {k}")));
                } else {
                    free_rows[k] += 1;
                }
            }
            if row.entries.iter().all(|e| e.v == 0.0) && row.free.iter().all(|(_, v)| *v == 0.0) {
                out.push(Finding::ZeroRow(i));
                continue;
            }
            let key = format!("{:?}|{:?}|{:?}", row.entries, row.free, row.rhs);
            if let Some(&j) = seen.get(&key) {
                out.push(Finding::DuplicateRows(j, i));
            } else {
                seen.insert(key, i);
            }
        }
        for (b, used) in block_used.into_iter().enumerate() {
            if !used && self.blocks[b] > 0 {
                out.push(Finding::UnusedBlock(b));
            }
        }
        for (k, &n) in free_rows.iter().enumerate() {
            if n == 0 {
                out.push(Finding::UnusedFree(k));
            } else if n == 1 && self.c_free.get(k).copied().unwrap_or(0.0) == 0.0 {
                out.push(Finding::WeaklyDetermined(k));
            }
        }
        out
    }

    pub fn check_size(&self) -> Result<()> {
        if self.rows.len() > MAX_ROWS {
            return Err(Error::Sizing(format!(
                "{} equality rows exceed the dense solver limit of {MAX_ROWS}",
                self.rows.len()
            )));
        }
        Ok(())
    }

    /// `<A_i, X> + F_i . f` for every row.
    pub fn apply(&self, x: &[DMatrix<f64>], f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                let mut s = 0.0;
                for e in &row.entries {
                    let w = if e.r == e.c { 1.0 } else { 2.0 };
                    s += w * e.v * x[e.block][(e.r, e.c)];
                }
                for &(k, v) in &row.free {
                    s += v * f[k];
                }
                s
            })
            .collect()
    }

    pub fn objective(&self, x: &[DMatrix<f64>], f: &[f64]) -> f64 {
        let mut s = 0.0;
        for e in &self.c_entries {
            let w = if e.r == e.c { 1.0 } else { 2.0 };
            s += w * e.v * x[e.block][(e.r, e.c)];
        }
        s + self.c_free.iter().zip(f).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sdp 1");
        let dims: Vec<String> = self.blocks.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "blocks {}", dims.join(" "));
        let _ = writeln!(s, "free {}", self.n_free);
        let _ = writeln!(s, "rows {}", self.rows.len());
        for e in &self.c_entries {
            let _ = writeln!(s, "c {} {} {} {:?}", e.block, e.r, e.c, e.v);
        }
        for (k, v) in self.c_free.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(s, "cf {k} {v:?}");
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            for e in &row.entries {
                let _ = writeln!(s, "a {i} {} {} {} {:?}", e.block, e.r, e.c, e.v);
            }
            for (k, v) in &row.free {
                let _ = writeln!(s, "f {i} {k} {v:?}");
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.rhs != 0.0 {
                let _ = writeln!(s, "b {i} {:?}", row.rhs);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = SdpProblem::default();
        let mut have_header = false;
        for (ln, line) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let idx = |k: usize| -> Result<usize> {
                toks.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, format!("expected an index in `{line}`")))
            };
            let val = |k: usize| -> Result<f64> {
                toks.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, format!("expected a number in `{line}`")))
            };
            let row = |p: &mut SdpProblem, i: usize| -> Result<usize> {
                if i >= p.rows.len() {
                    return Err(Error::parse(line_no, format!("row {i} out of range")));
                }
                Ok(i)
            };
            match toks[0] {
                "sdp" => {
                    if idx(1)? != 1 {
                        return Err(Error::parse(line_no, "unsupported format version"));
                    }
                    have_header = true;
                }
                "blocks" => {
                    p.blocks = (1..toks.len()).map(idx).collect::<Result<_>>()?;
                }
                "free" => {
                    p.n_free = idx(1)?;
                    p.c_free = vec![0.0; p.n_free];
                }
                "rows" => p.rows = vec![Row::default(); idx(1)?],
                "c" => p.c_entries.push(Entry { block: idx(1)?, r: idx(2)?, c: idx(3)?, v: val(4)? }),
                "cf" => {
                    let k = idx(1)?;
                    *p.c_free
                        .get_mut(k)
                        .ok_or_else(|| Error::parse(line_no, format!("free variable {k} out of range")))? = val(2)?;
                }
                "a" => {
                    let i = row(&mut p, idx(1)?)?;
                    let e = Entry { block: idx(2)?, r: idx(3)?, c: idx(4)?, v: val(5)? };
                    p.rows[i].entries.push(e);
                }
                "f" => {
                    let i = row(&mut p, idx(1)?)?;
                    let e = (idx(2)?, val(3)?);
                    p.rows[i].free.push(e);
                }
                "b" => {
                    let i = row(&mut p, idx(1)?)?;
                    p.rows[i].rhs = val(2)?;
                }
                other => return Err(Error::parse(line_no, format!("unknown record `{other}`"))),
            }
        }
        if !have_header {
            return Err(Error::parse(1, "missing `sdp 1` header"));
        }
        if let Some(f) = p.validate().into_iter().find(|f| matches!(f, Finding::BadIndex(_))) {
            return Err(Error::parse(0, f.to_string()));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SdpProblem {
        // minimize X11 + X22 s.t. X12 = 1
        let mut p = SdpProblem::new(vec![2], 0);
        p.c_entries = vec![Entry { block: 0, r: 0, c: 0, v: 1.0 }, Entry { block: 0, r: 1, c: 1, v: 1.0 }];
        p.rows.push(Row { entries: vec![Entry { block: 0, r: 0, c: 1, v: 0.5 }], free: vec![], rhs: 1.0 });
        p
    }

    #[test]
    fn text_round_trip() {
        let mut p = tiny();
        p.blocks.push(1);
        p.n_free = 1;
        p.c_free = vec![0.25];
        p.rows[0].free.push((0, -1.5));
        p.rows[0].entries.push(Entry { block: 1, r: 0, c: 0, v: 1e-17 });
        let q = SdpProblem::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_text(), p.to_text());
    }

    #[test]
    fn apply_uses_symmetric_weights() {
        let p = tiny();
        let x = vec![DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])];
        assert_eq!(p.apply(&x, &[]), vec![1.0]);
        assert_eq!(p.objective(&x, &[]), 2.0);
    }

    #[test]
    fn validate_flags_problems() {
        let mut p = tiny();
        p.rows.push(p.rows[0].clone());
        p.rows.push(Row::default());
        let f = p.validate();
        assert!(f.contains(&Finding::DuplicateRows(0, 1)));
        assert!(f.contains(&Finding::ZeroRow(2)));
        assert!(f.iter().any(Finding::is_error));
        assert!(tiny().validate().is_empty());
    }

    #[test]
    fn size_guard() {
        let mut p = tiny();
        p.rows = vec![p.rows[0].clone(); MAX_ROWS + 1];
        assert!(matches!(p.check_size(), Err(Error::Sizing(_))));
    }

    #[test]
    fn canonicalize_merges() {
        let mut p = SdpProblem::new(vec![2], 1);
        p.rows.push(Row {
            entries: vec![
                Entry { block: 0, r: 1, c: 0, v: 1.0 },
                Entry { block: 0, r: 0, c: 1, v: 2.0 },
                Entry { block: 0, r: 0, c: 0, v: 0.0 },
            ],
            free: vec![(0, 1.0), (0, -1.0)],
            rhs: 0.0,
        });
        p.canonicalize();
        assert_eq!(p.rows[0].entries, vec![Entry { block: 0, r: 0, c: 1, v: 3.0 }]);
        assert!(p.rows[0].free.is_empty());
    }
}
