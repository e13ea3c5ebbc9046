//! Geometric phases of open quantum systems from exact reduced dynamics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dephasing;
pub mod engine;
pub mod error;
pub mod oracles;
pub mod qstate;
pub mod quadrature;
pub mod special;
pub mod spinbath;
pub mod sweep;
pub mod tolerances;
pub mod verify;

pub use error::{GeoPhaseError, Result};
pub use num_complex::Complex64;
pub use tolerances::Tolerances;
