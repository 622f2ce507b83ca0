//! Weighted Bergman reproducing kernels on the Kepler manifold
//! `H = {z ∈ C^{n+1} : z·z = 0, z ≠ 0}` and on the minimal ball in `C^n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`measures`] turns a radial measure into its moment sequence `q_k`;
//! * [`kernels`] sums the kernel series `Σ N(l) t^l / q_{2l}` and the closed
//!   forms it must agree with, plus the large-parameter (TYZ) expansion;
//! * [`mittag_leffler`] provides `E_{α,β}` and its derivatives on the positive ray;
//! * [`hankel`] builds the diagonal spectrum of the Hankel operator and the
//!   Schatten-class cut-off diagnostics;
//! * [`minimal_ball`] assembles kernels on `C^n` with the minimal norm;
//! * [`geometry`] samples the boundary orbit and checks orthogonality by Monte Carlo.
//!
//! Every closed form is paired with an independent oracle; [`verify`]
//! runs those comparisons and reports pass/fail per check.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod hankel;
pub mod kernels;
pub mod measures;
pub mod minimal_ball;
pub mod mittag_leffler;
pub mod numeric;
pub mod quadrature;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
