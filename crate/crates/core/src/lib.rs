//! Deterministic hidden-variable models of spin measurements.
//!
//! The crate simulates a single spin-½ under the sign rule `X = sgn((P + λ)·a)`
//! and a singlet pair under models driven by two shared random unit vectors
//! `λ₁, λ₂`, where the product of the outcomes obeys
//! `XY = sgn(λ₁·λ₂ − a·b)`. Monte Carlo estimates are checked against the
//! closed forms in [`analytic`], and [`diagnostics`] audits CHSH violation,
//! statistical no-signaling, outcome dependence and the one-sided setting
//! dependence of the complete model.
//!
//! ```
//! use hvlab_core::estimator::{correlation_estimate, run_trials, RunConfig, Sampling};
//! use hvlab_core::models::{ModelSpec, SettingPair};
//!
//! let cfg = RunConfig {
//!     model: ModelSpec::Complete,
//!     settings: SettingPair::planar(std::f64::consts::FRAC_PI_3),
//!     sampling: Sampling::new(100_000, 42, 4).unwrap(),
//! };
//! let e = correlation_estimate(&run_trials(&cfg).unwrap()).unwrap();
//! assert!((e.value + 0.5).abs() < 5.0 * e.std_error);
//! ```

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod models;

pub use error::{AnalyticError, DiagnosticsError, EstimatorError, GeometryError, ModelError};
pub use geometry::{Sign, UnitVector3, Vector3};
pub use models::{ModelSpec, SettingPair};
