//! Robust bivariate correlation estimation built around the spatial sign
//! correlation coefficient.
//!
//! The crate is organised in layers:
//!
//! - [`numerics`]: 2×2 eigensolver, Kronecker products, normal and χ²
//!   quantiles, compensated summation.
//! - [`sscm`]: spatial signs, the spatial median, the spatial sign covariance
//!   matrix and the spatial sign correlation (plain, two-stage, with Wald
//!   intervals).
//! - [`asymptotics`]: closed-form asymptotic variances, influence function and
//!   gross-error sensitivity of the spatial sign correlation.
//! - [`estimators`]: twelve competitor estimators (rank based,
//!   Gnanadesikan–Kettenring, affine equivariant scatter) and the robust scale
//!   estimators they rely on.
//! - [`distributions`]: reproducible samplers for elliptical and skewed models
//!   plus contamination mechanisms.
//! - [`simulation`]: the Monte Carlo engine and its CSV/JSON result format.
//! - [`highdim`]: pairwise correlation matrices and positive semidefinite
//!   repair.

pub mod asymptotics;
pub mod data;
pub mod distributions;
mod error;
pub mod estimators;
pub mod highdim;
pub mod numerics;
pub mod simulation;
pub mod sscm;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use estimators::{estimate, CorrEstimate, EstimatorId};
pub use numerics::SymMat2;
pub use sscm::{spatial_sign_corr, two_stage_spatial_sign_corr};
