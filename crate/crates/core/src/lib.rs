//! Bayesian Cramér–Rao bounds indexed by log-Sobolev reference measures,
//! together with brute-force numerical oracles to check them against.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The aliases at the crate root fix the
//! scalar to `f64`, which is what reports, the CLI and the acceptance suite
//! use.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod models;
pub mod oracles;
pub mod quadrature;
pub mod scalar;
pub mod tilted;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Density = measures::DensityOnRn<f64>;
pub type Prior = measures::LogConcavePrior<f64>;
pub type Reference = measures::ReferenceMeasure<f64>;
pub type Quadrature = quadrature::QuadratureSpec<f64>;
pub type Support = quadrature::SupportBox<f64>;
pub type Model = models::ParametricModel<f64>;
