//! Sweeps over template degree, vector dimension and fixed matrices.

use crate::error::{Error, Result};

use super::{
    default_assignment, synth_scalar_bc, synth_scalar_cc, synth_vcbrf_ltl, synth_vcbrf_persistence, synth_vcc_ltl,
    synth_vcc_persistence, synth_vcc_safety, Matrix, Outcome, Problem, SynthOptions, SynthesisResult,
};

/// Which certificate family to sweep. Per-component constants are
/// broadcast to every component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepTask {
    VccSafety,
    VccPersistence {
        gamma: f64,
        rho: f64,
    },
    VccLtl {
        gamma: f64,
        rho: f64,
    },
    VcbrfPersistence,
    VcbrfLtl,
    /// Scalar closure certificate for whatever specification the problem has;
    /// candidates are 1x1 matrices holding `lambda`.
    ScalarCc {
        gamma: f64,
        rho: f64,
    },
    Bc,
}

impl SweepTask {
    /// Matrices per candidate.
    pub fn arity(self) -> usize {
        match self {
            SweepTask::VcbrfPersistence | SweepTask::VcbrfLtl => 3,
            _ => 1,
        }
    }

    fn is_scalar(self) -> bool {
        matches!(self, SweepTask::ScalarCc { .. } | SweepTask::Bc)
    }
}

/// One fixed choice of matrices: `[A]` for closure certificates, `[A1, A2, A3]`
/// for ranking functions.
pub type Candidate = Vec<Matrix>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepCell {
    pub degree: u32,
    pub k: usize,
    /// Index into the candidates of size `k`.
    pub candidate: usize,
}

#[derive(Clone, Debug)]
pub struct Attempt {
    pub cell: SweepCell,
    pub matrices: Candidate,
    pub result: SynthesisResult,
}

fn unit() -> Candidate {
    vec![vec![vec![1.0]]]
}

/// Try every `(degree, k, candidate)` in that lexicographic order. Stops
/// at the first certificate unless `exhaustive`.
pub fn sweep(
    problem: &Problem,
    task: SweepTask,
    degrees: &[u32],
    ks: &[usize],
    candidates: &[Candidate],
    base: &SynthOptions,
    exhaustive: bool,
) -> Result<Vec<Attempt>> {
    for c in candidates {
        if c.len() != task.arity() {
            return Err(Error::validation(format!(
                "each candidate for {task:?} needs {} matrices, got {}",
                task.arity(),
                c.len()
            )));
        }
    }
    let mut degrees = degrees.to_vec();
    degrees.sort_unstable();
    degrees.dedup();
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if task.is_scalar() && ks.iter().any(|&k| k != 1) {
        return Err(Error::validation("scalar certificates have k = 1"));
    }
    let mut out = Vec::new();
    for &degree in &degrees {
        let opts = SynthOptions { degree, ..base.clone() };
        for &k in &ks {
            let mut pool: Vec<Candidate> = candidates.iter().filter(|c| c[0].len() == k).cloned().collect();
            if pool.is_empty() {
                if k != 1 {
                    return Err(Error::validation(format!("no candidate matrices of size {k}")));
                }
                pool.push(if task.arity() == 3 {
                    vec![unit()[0].clone(), vec![vec![0.0]], vec![vec![0.0]]]
                } else {
                    unit()
                });
            }
            for (idx, cand) in pool.into_iter().enumerate() {
                let result = run_one(problem, task, &cand, k, &opts)?;
                let found = matches!(result.outcome, Outcome::Certificate(_));
                out.push(Attempt { cell: SweepCell { degree, k, candidate: idx }, matrices: cand, result });
                if found && !exhaustive {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn run_one(
    problem: &Problem,
    task: SweepTask,
    cand: &Candidate,
    k: usize,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    let pieces = |n: usize| default_assignment(n, k);
    match task {
        SweepTask::VccSafety => synth_vcc_safety(problem, &cand[0], &pieces(problem.unsafe_set()?.len()), opts),
        SweepTask::VccPersistence { gamma, rho } => {
            synth_vcc_persistence(problem, &cand[0], &vec![gamma; k], &vec![rho; k], &pieces(problem.vf()?.len()), opts)
        }
        SweepTask::VccLtl { gamma, rho } => {
            let (_, aut) = problem.ltl_parts()?;
            synth_vcc_ltl(problem, &cand[0], &vec![gamma; k], &vec![rho; k], &pieces(aut.accepting().len()), opts)
        }
        SweepTask::VcbrfPersistence => synth_vcbrf_persistence(problem, &cand[0], &cand[1], &cand[2], opts),
        SweepTask::VcbrfLtl => synth_vcbrf_ltl(problem, &cand[0], &cand[1], &cand[2], opts),
        SweepTask::ScalarCc { gamma, rho } => synth_scalar_cc(problem, cand[0][0][0], gamma, rho, opts),
        SweepTask::Bc => synth_scalar_bc(problem, cand[0][0][0], opts),
    }
}
