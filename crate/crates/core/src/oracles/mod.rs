//! Brute-force references: dense matrix exponentials in truncated Fock space
//! and exhaustive enumeration of spin environments. They share no code with
//! the model modules beyond the matrix type.

pub mod expm;
pub mod fock;
pub mod spin_env;

pub use expm::{expm, propagator};
pub use fock::{
    fock_propagate, fock_propagate_auto, DephasingModel, FockResult, FockTruncation, MAX_JOINT_DIM,
};
pub use spin_env::{enumerate_spin_env, unitary_fixed_field, MAX_ENV_SPINS};
