use num_complex::Complex64;

use super::eigen::eig_hermitian_matrix;
use super::matrix::CMatrix;
use crate::tolerances::{TOL_HERM, TOL_POSITIVITY, TOL_TRACE};
use crate::{GeoPhaseError, Result, Tolerances};

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity before wrapping `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.dim() == 0 {
            return Err(GeoPhaseError::InvalidInput("zero-dimensional state".into()));
        }
        if !m.is_finite() {
            return Err(GeoPhaseError::InvalidInput(
                "non-finite matrix entry".into(),
            ));
        }
        let deviation = m.hermiticity_deviation();
        if deviation > TOL_HERM {
            return Err(GeoPhaseError::NonHermitian { deviation });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(GeoPhaseError::InvalidInput(format!(
                "trace {tr} differs from 1"
            )));
        }
        let frame = eig_hermitian_matrix(&m, &Tolerances::default())?;
        if let Some(&min) = frame.values.last() {
            if min < -TOL_POSITIVITY {
                return Err(GeoPhaseError::InvalidInput(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(Self(m))
    }

    /// Projector onto `v`, normalized first.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let n = super::matrix::norm(v);
        if !(n > 0.0 && n.is_finite()) {
            return Err(GeoPhaseError::InvalidInput("zero state vector".into()));
        }
        let unit: Vec<Complex64> = v.iter().map(|z| z / n).collect();
        Ok(Self(CMatrix::outer(&unit)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)))
    }

    /// Wraps a matrix the caller has constructed to be a valid state.
    ///
    /// Only hermiticity is re-checked (cheaply); used on hot paths where the
    /// matrix comes from a closed-form model.
    pub(crate) fn from_model(m: CMatrix) -> Result<Self> {
        let deviation = m.hermiticity_deviation();
        if deviation > TOL_HERM || !m.is_finite() {
            return Err(GeoPhaseError::NonHermitian { deviation });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        self.0.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }
}
