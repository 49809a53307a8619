//! Energy-stable time integrators for gradient flows `phi_t = G (L phi + F'(phi))`
//! on doubly periodic rectangles, discretized with a Fourier pseudo-spectral
//! method.
//!
//! The core types are generic over the floating-point type ([`Scalar`] is
//! implemented for `f32` and `f64`); the aliases below fix it to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod krylov;
pub mod models;
pub mod scalar;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid = spectral::Grid2D<f64>;
pub type Field = spectral::ScalarField2D<f64>;
pub type Symbol = spectral::OperatorSymbol<f64>;
pub type Model = models::ModelSpec<f64>;
pub type Potential = models::PotentialSpec<f64>;
pub type Record = models::EnergyRecord<f64>;
pub type Scheme = schemes::SchemeConfig<f64>;
pub type State = schemes::StepState<f64>;
pub type Run = diagnostics::RunConfig<f64>;
pub type Initial = diagnostics::InitialCondition<f64>;

pub type Grid32 = spectral::Grid2D<f32>;
pub type Field32 = spectral::ScalarField2D<f32>;
pub type Model32 = models::ModelSpec<f32>;
pub type Scheme32 = schemes::SchemeConfig<f32>;
