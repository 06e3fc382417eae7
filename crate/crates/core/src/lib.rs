//! Plug-in estimation of a distribution function `F^Y(w)` from i.i.d.
//! samples of a related variable `X`, when the map between the Laplace
//! transforms of `X` and `Y` is known.
//!
//! The pipeline is: empirical transform of the samples on the contour
//! `Re(s) = c` ([`transforms`]), the transform map `Ψ` ([`psi_maps`], using
//! [`distinguished_log`]), and a truncated Bromwich integral of `Ψ(X̃ₙ)(s)/s`
//! ([`inversion`]). [`estimator`] wires these together with the fallback
//! for samples outside the map's domain.

pub mod distinguished_log;
pub mod error;
pub mod estimator;
pub mod experiments;

pub mod inversion;
pub mod psi_maps;
pub mod sample_file;
pub mod simulation;
pub mod transforms;

#[cfg(feature = "cli")]
pub mod cli;




pub use error::{Error, Result};
pub use estimator::{estimate_cdf, estimate_tail, EstimateResult, EstimatorConfig, Fallback};
pub use inversion::QuadratureSpec;
pub use psi_maps::PsiMap;
pub use simulation::{JobModel, QueueSpec, Seed};
pub use transforms::{AnalyticModel, ContourGrid, SampleSet, TransformValues};
