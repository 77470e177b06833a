//! Synthesis and audit of vector certificates for discrete-time polynomial
//! systems: vector closure certificates (VCCs) and vector co-Büchi ranking
//! functions (VCBRFs), together with scalar barrier and closure certificate
//! baselines.
//!
//! The pipeline is: [`poly`] and [`semialg`] describe the problem data,
//! [`sysmodel`] holds dynamics and Büchi automata, [`synth`] builds an
//! [`sosprog::SosProgram`] per certificate kind, [`sdp`] solves the compiled
//! semidefinite program, and [`audit`] checks the extracted certificate by
//! sampling and Gram reconstruction. [`discrete`] handles finite transition
//! systems exactly.

// `!(x > 0.0)` is used on purpose to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audit;
pub mod certfile;
pub mod config;
pub mod discrete;
mod error;
pub mod expr;
pub mod poly;
pub mod run;
pub mod sdp;
pub mod semialg;
pub mod sosprog;
pub mod synth;
pub mod sysmodel;

pub use error::{Error, Result};
