//! Small-dimension Hermitian linear algebra, Bloch maps and eigen-trajectories.

pub mod bloch;
pub mod density;
pub mod eigen;
pub mod matrix;
pub mod trajectory;

pub use bloch::{bloch_from_density, density_from_bloch, BlochVector, BLOCH_NORM_SLACK};
pub use density::DensityMatrix;
pub use eigen::{eig_hermitian, eig_hermitian_matrix, EigenFrame};
pub use matrix::{inner, CMatrix};
pub use trajectory::{gauge_fix, EigenTrajectory, Gauge};
