//! Normal-ordered exponential propagation of thermal and time-dependent
//! quantum amplitudes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boson;
pub mod error;
pub mod fctime;
pub mod fermion;
pub mod integrate;
pub mod io;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod units;
pub mod verify;

pub use error::{NoeError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

use num_complex::Complex;

pub type FermionModel = model::OneBodyFermionModel<f64>;
pub type ComplexFermionModel = model::OneBodyFermionModel<Complex<f64>>;
pub type FermionModel32 = model::OneBodyFermionModel<f32>;
pub type BosonModel = model::BosonQuadraticModel<f64>;
pub type BosonModel32 = model::BosonQuadraticModel<f32>;
pub type SurfaceSpec = model::VerticalSurfaceSpec<f64>;
