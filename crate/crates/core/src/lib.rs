//! Markov semigroups on matrix-valued functions.
//!
//! The crate computes matrix Φ-entropies, carré du champ operators and
//! Dirichlet forms for semigroups `P_t` acting on functions `f: Ω → 𝕄_d^sa`
//! over a finite state space, checks the exponential decay inequalities they
//! satisfy, and estimates spectral-gap and modified log-Sobolev constants.
//!
//! Modules, bottom-up:
//!
//! - [`matcore`]: Hermitian spectral calculus and Fréchet derivatives.
//! - [`ensemble`]: state spaces, measures, matrix functions, quantum ensembles.
//! - [`phi_entropy`]: variance, entropy, Holevo quantity, subadditivity.
//! - [`semigroup`]: CP kernels, generators, Γ, Dirichlet forms, de Bruijn.
//! - [`channels`]: depolarizing, phase-damping and Lindblad semigroups.
//! - [`hypercube`]: the jump process on `{0,1}ⁿ` and the Efron–Stein functional.
//! - [`sobolev`]: Sobolev ratios and their numerical suprema.
//! - [`mixing`]: classical weight-matrix kernels and mixing times.

#![forbid(unsafe_code)]
// NaN must fail range checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channels;
pub mod ensemble;
pub mod error;
pub mod hypercube;
pub mod matcore;
pub mod mixing;
pub mod phi_entropy;
pub mod semigroup;
pub mod sobolev;

pub use error::{Error, Result};
