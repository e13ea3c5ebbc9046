//! Numerical tolerances used across the crate.
//!
//! Every threshold lives here so a run configuration can override them
//! in one place. The defaults are the values the test-suite is pinned to.

/// Max |m_ij - conj(m_ji)| accepted as Hermitian.
pub const TOL_HERM: f64 = 1e-12;
/// Accepted deviation of the trace from one.
pub const TOL_TRACE: f64 = 1e-12;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const TOL_POSITIVITY: f64 = 1e-10;
/// Eigenvalue gap below which a pair is flagged as degenerate.
pub const GAP_TOL: f64 = 1e-9;
/// Off-diagonal Frobenius norm at which cyclic Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-14;
/// Branches whose initial weight is below this contribute nothing.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Grid-halving stops once the phase moves by less than this (rad).
pub const PHASE_TOL: f64 = 1e-6;
/// Maximum number of grid halvings.
pub const MAX_LEVELS: usize = 12;
/// Consecutive-frame overlap below which branch matching refuses.
pub const MIN_OVERLAP: f64 = 0.5;
/// Componentwise change at which Gauss-Hermite node doubling stops.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// First Gauss-Hermite node count tried.
pub const QUADRATURE_START_NODES: usize = 64;
/// Largest Gauss-Hermite node count tried.
pub const QUADRATURE_MAX_NODES: usize = 1024;
/// |p| below which the averaged spin is treated as maximally mixed.
pub const MIXED_FLOOR: f64 = 1e-12;

/// Runtime-overridable copy of the tolerances above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub herm: f64,
    pub gap: f64,
    pub jacobi: f64,
    pub weight_floor: f64,
    pub phase_tol: f64,
    pub max_levels: usize,
    pub min_overlap: f64,
    pub quadrature_tol: f64,
    pub quadrature_start_nodes: usize,
    pub quadrature_max_nodes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: TOL_HERM,
            gap: GAP_TOL,
            jacobi: JACOBI_TOL,
            weight_floor: WEIGHT_FLOOR,
            phase_tol: PHASE_TOL,
            max_levels: MAX_LEVELS,
            min_overlap: MIN_OVERLAP,
            quadrature_tol: QUADRATURE_TOL,
            quadrature_start_nodes: QUADRATURE_START_NODES,
            quadrature_max_nodes: QUADRATURE_MAX_NODES,
        }
    }
}

impl Tolerances {
    /// Rejects non-positive tolerances and nonsensical level counts.
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("herm", self.herm),
            ("gap", self.gap),
            ("jacobi", self.jacobi),
            ("weight_floor", self.weight_floor),
            ("phase_tol", self.phase_tol),
            ("min_overlap", self.min_overlap),
            ("quadrature_tol", self.quadrature_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::GeoPhaseError::InvalidInput(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        if self.max_levels == 0 || self.quadrature_start_nodes < 4 {
            return Err(crate::GeoPhaseError::InvalidInput(
                "max_levels must be >= 1 and quadrature_start_nodes >= 4".into(),
            ));
        }
        if self.quadrature_max_nodes < self.quadrature_start_nodes {
            return Err(crate::GeoPhaseError::InvalidInput(
                "quadrature_max_nodes below quadrature_start_nodes".into(),
            ));
        }
        Ok(())
    }
}
