//! Iterative solver for box-constrained nonlinear semidefinite programs
//!
//! ```text
//! min f(X)  subject to  O ⪯ X ⪯ I,   X symmetric n×n
//! ```
//!
//! Each iteration splits the gradient spectrally into its positive and
//! non-positive parts, measures how far the iterate is from the lower and
//! upper spectral boundary along those eigenspaces, and builds a search
//! direction `D(X)` from that distance information. Any step of length at
//! most `‖D‖_F / ‖∇f‖_2` along `-D/‖D‖_F` stays feasible. The step length is
//! chosen by minimizing a one-dimensional quadratic model, capped by an
//! adaptive radius that grows or shrinks with the ratio of actual to
//! predicted decrease. Second-order information enters only through the
//! scalar `⟨S|∇²f(X)|S⟩`.
//!
//! Modules:
//! - [`symmat`]: dense symmetric matrices, eigendecomposition, fractional powers.
//! - [`objective`]: the objective contract and finite-difference checks.
//! - [`direction`]: gradient split, boundary matrices, `D(X)`, `N(X)`, optimality certificate.
//! - [`solver`]: the iteration with its step-length model and radius update.
//! - [`problems`]: the seven benchmark objectives and the general `[L, U]` box wrapper.
//! - [`bench`]: single runs, sweeps, trace and summary files.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod direction;
pub mod error;
pub mod objective;
pub mod problems;
pub mod sampling;
pub mod solver;
pub mod symmat;

pub use error::{Error, Result};
pub use objective::{Counted, EvalCounts, Objective};
pub use solver::{solve, SolveResult, SolveStatus, SolverConfig};
pub use symmat::{EigenPair, SymMat};
