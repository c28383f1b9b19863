//! Anisotropic (Finsler) norm geometry and numerical verification of the
//! classified solutions of `-Δ_N^H u = e^u` in `R^N`.
//!
//! The crate is organized bottom-up:
//!
//! * [`anisotropy`]: gauges `H` with value, gradient and Hessian of `H²`.
//! * [`dual_geometry`]: dual gauges `H0`, `Ĥ0`, Wulff shapes, volumes and
//!   boundary quadrature.
//! * [`solution`]: the explicit solution family and its closed-form level-set
//!   quantities.
//! * [`operator`]: the Finsler p-Laplacian by finite-difference divergence of
//!   the analytic flux.
//! * [`quadrature`]: radial, Monte Carlo and Wulff-interior integration.
//! * [`identities`]: individual checks and the suite runner that produces a
//!   [`identities::VerificationReport`].
//! * [`config`]: JSON norm and run specifications.

pub mod anisotropy;
pub mod config;
pub mod dual_geometry;
pub mod error;
pub mod identities;
pub mod linalg;
pub mod operator;
pub mod quadrature;
pub mod sampling;
pub mod solution;

pub use anisotropy::AnisotropyNorm;
pub use dual_geometry::{DualGauge, WulffShape};
pub use error::{Error, Result};
pub use solution::LiouvilleSolution;
