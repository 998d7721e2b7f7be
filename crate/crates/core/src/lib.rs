//! Numerical core for dimension-free Harnack experiments on SDEs with irregular drift.
//!
//! The crate is `no_std` (it needs `alloc`). It provides:
//!
//! - [`fields`]: analytic coefficient fields and probe-based structural checks,
//! - [`sde`]: Euler–Maruyama ensembles for Brownian and symmetric α-stable drivers,
//!   plus the shared-noise coupling with Girsanov reweighting,
//! - [`pde`]: implicit finite-difference solvers for the backward (Zvonkin) and
//!   resolvent (Itô–Tanaka) parabolic systems,
//! - [`transforms`]: the drift-removing maps built from those solutions, their
//!   inverses, transformed coefficients and the explicit Harnack constants,
//! - [`semigroup`]: Monte Carlo estimates of `P_t f`, `P_t log f`, `P_t f^p` and
//!   the L² gradient estimate,
//! - [`harnack`]: inequality instances with three-valued verdicts,
//! - [`presets`]: named drifts, diffusions and test functions with parameter schemas.
//!
//! Everything is deterministic given a seed: each simulated path draws from its own
//! counter-based ChaCha stream, so results do not depend on scheduling. With the
//! `parallel` feature, ensembles are simulated with rayon.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod fields;
pub mod harnack;
pub mod linalg;
pub(crate) mod math;
pub(crate) mod par;
pub mod pde;
pub mod presets;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod semigroup;
pub mod stats;
pub mod transforms;

pub use error::{Error, Result};

/// Largest state dimension supported by the simulators.
pub const MAX_DIM: usize = 3;
