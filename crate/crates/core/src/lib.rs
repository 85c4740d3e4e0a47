//! Nonparametric estimation of the diffusion and jump coefficients of a
//! discretely observed jump diffusion
//!
//! ```text
//! dX_t = b(X_t) dt + sigma(X_t) dW_t + xi(X_{t-}) dL_t
//! ```
//!
//! from observations `X_0, X_delta, ..., X_{n delta}`.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`levy`]: jump laws, Lévy measures and exact jump samplers over a time step;
//! * [`model`]: the model description and the four built-in benchmark models;
//! * [`sim`]: an Euler scheme with exactly embedded jump times;
//! * [`spline`]: dyadic B-spline spaces on a compact interval and their normal equations;
//! * [`estimator`]: least-squares fits, jump truncation, penalties and adaptive selection;
//! * [`linalg`]: the small dense symmetric solvers used by the fits.
//!
//! IO, file formats, the Monte Carlo harness and the command line live in the
//! `jumpvol` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimator;
pub mod levy;
pub mod linalg;
mod math;
pub mod model;
pub mod sim;
pub mod spline;

pub use crate::error::Error;
pub use crate::estimator::{
    estimate_g, estimate_sigma2, estimate_xi2, fit_ls, plugin_bounds, select, truncate,
    AdaptiveResult, BoundSource, Bounds, Fit, FittedFunction, GridConfig, GridFit, Penalty,
    PenaltyKind, TruncationRule, XiSquaredEstimate,
};
pub use crate::levy::{sample_jumps, second_moment, JumpDraw, JumpLaw, JumpSampler, LevyMeasure};
pub use crate::model::{builtin_model, InitialLaw, ModelSpec};
pub use crate::sim::{increments, simulate, Path, SimConfig};
pub use crate::spline::{assemble, build_basis, DesignSystem, Interval, SplineBasis};
