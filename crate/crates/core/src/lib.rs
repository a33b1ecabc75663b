//! Free-boundary simulation of the reaction porous medium equation
//!
//! ```text
//! u_t = (u^m)_xx + f(x,u)[κ(x) − u],   x ∈ ℝ,  m > 1
//! ```
//!
//! in 1-periodic media, and extraction of its periodic sharp traveling wave by
//! renormalizing a Heaviside-started solution at integer front crossings.

pub mod diagnostics;
pub(crate) mod linalg;
pub mod model;
mod ode;
pub mod phaseplane;
pub mod renorm;
pub mod solver;
pub mod stationary;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
