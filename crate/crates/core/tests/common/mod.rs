//! Randomized SDPs built around a known interior primal-dual pair.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcert::sdp::{Entry, Row, SdpProblem};

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n) * 0.5
}

/// A feasible problem with a strictly feasible primal-dual pair, and the
/// norm scale of that pair.
pub fn random_problem(seed: u64) -> (SdpProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.random_range(1..4);
    let blocks: Vec<usize> = (0..nb).map(|_| rng.random_range(1..6)).collect();
    let n_free = rng.random_range(0..3);
    let dim: usize = blocks.iter().map(|n| n * (n + 1) / 2).sum();
    let m = rng.random_range(1..dim + 1);
    let x0: Vec<DMatrix<f64>> = blocks.iter().map(|&n| random_pd(&mut rng, n)).collect();
    let z0: Vec<DMatrix<f64>> = blocks.iter().map(|&n| random_pd(&mut rng, n)).collect();
    let f0: Vec<f64> = (0..n_free).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut p = SdpProblem::new(blocks.clone(), n_free);
    for _ in 0..m {
        let mut row = Row::default();
        for (b, &n) in blocks.iter().enumerate() {
            for r in 0..n {
                for c in r..n {
                    if rng.random_bool(0.6) {
                        row.entries.push(Entry { block: b, r, c, v: rng.random_range(-1.0..1.0) });
                    }
                }
            }
        }
        if row.entries.is_empty() {
            row.entries.push(Entry { block: 0, r: 0, c: 0, v: 1.0 });
        }
        for k in 0..n_free {
            row.free.push((k, rng.random_range(-1.0..1.0)));
        }
        p.rows.push(row);
    }
    let ax = p.apply(&x0, &f0);
    for (row, v) in p.rows.iter_mut().zip(ax) {
        row.rhs = v;
    }
    // C = A^T y0 + Z0 and c_f = F^T y0 make (X0, f0, y0, Z0) primal-dual feasible.
    let mut c: Vec<DMatrix<f64>> = z0.clone();
    for (row, &y) in p.rows.iter().zip(&y0) {
        for e in &row.entries {
            c[e.block][(e.r, e.c)] += y * e.v;
            if e.r != e.c {
                c[e.block][(e.c, e.r)] += y * e.v;
            }
        }
        for &(k, v) in &row.free {
            p.c_free[k] += y * v;
        }
    }
    for (b, &n) in blocks.iter().enumerate() {
        for r in 0..n {
            for cc in r..n {
                p.c_entries.push(Entry { block: b, r, c: cc, v: c[b][(r, cc)] });
            }
        }
    }
    let scale = x0.iter().chain(&z0).map(|m| m.norm()).fold(1.0, f64::max);
    (p, scale)
}
