//! Gaussian continuous-variable simulation of the optimal universal phase
//! conjugator for bosonic modes.
//!
//! Units: `ħ = 1`, `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, so the vacuum
//! quadrature variance is `1/2`. Vectors and matrices use the interleaved
//! quadrature ordering `(x₁, p₁, x₂, p₂, …)`.
//!
//! The algebraic modules ([`gaussian`], [`transforms`], [`channels`] and the
//! closed-form half of [`constraints`]) are generic over the scalar type via
//! [`Real`]. Sampling ([`measurement`]) and the end-to-end experiments
//! ([`protocols`]) run in `f64`.

// `!(x > 0)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod constraints;
pub mod dd;
pub mod error;
pub mod gaussian;
pub mod measurement;
pub mod protocols;
pub mod scalar;
pub mod transforms;

pub use error::{Error, Result};
pub use dd::DoubleDouble;
pub use scalar::Real;

pub use channels::GaussianChannel;
pub use constraints::ConstraintReport;
pub use gaussian::{GaussianState, SymplecticForm};
pub use measurement::{Outcome, Quadrature, RngStream};
pub use protocols::{EprReport, EstimationReport, Strategy};
pub use transforms::{BogoliubovTransform, QuadratureMap};

/// Vacuum quadrature variance `Δx²_vac` in the chosen units.
pub const VACUUM_VARIANCE: f64 = 0.5;

pub type GaussianStateF64 = GaussianState<f64>;
pub type GaussianStateF32 = GaussianState<f32>;
pub type GaussianStateDD = GaussianState<DoubleDouble>;
pub type BogoliubovTransformF64 = BogoliubovTransform<f64>;
pub type BogoliubovTransformF32 = BogoliubovTransform<f32>;
pub type QuadratureMapF64 = QuadratureMap<f64>;
pub type GaussianChannelF64 = GaussianChannel<f64>;
pub type GaussianChannelF32 = GaussianChannel<f32>;
pub type GaussianChannelDD = GaussianChannel<DoubleDouble>;
pub type ConstraintReportF64 = ConstraintReport<f64>;
