use num_complex::Complex64;

use super::density::DensityMatrix;
use super::matrix::CMatrix;
use crate::{GeoPhaseError, Result};

/// Slack allowed on |p| ≤ 1.
pub const BLOCH_NORM_SLACK: f64 = 1e-10;

/// Polarization p with ρ = (I + p·σ)/2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl BlochVector {
    pub const fn new(px: f64, py: f64, pz: f64) -> Self {
        Self { px, py, pz }
    }

    pub fn norm(&self) -> f64 {
        (self.px * self.px + self.py * self.py + self.pz * self.pz).sqrt()
    }

    pub fn components(&self) -> [f64; 3] {
        [self.px, self.py, self.pz]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.px - other.px)
            .abs()
            .max((self.py - other.py).abs())
            .max((self.pz - other.pz).abs())
    }
}

pub fn bloch_from_density(m: &DensityMatrix) -> Result<BlochVector> {
    if m.dim() != 2 {
        return Err(GeoPhaseError::DimensionMismatch {
            expected: 2,
            got: m.dim(),
        });
    }
    let rho01 = m.get(0, 1);
    Ok(BlochVector {
        px: 2.0 * rho01.re,
        py: -2.0 * rho01.im,
        pz: (m.get(0, 0) - m.get(1, 1)).re,
    })
}

pub fn density_from_bloch(p: &BlochVector) -> Result<DensityMatrix> {
    let n = p.norm();
    if !n.is_finite() || n > 1.0 + BLOCH_NORM_SLACK {
        return Err(GeoPhaseError::UnphysicalState { norm: n });
    }
    let m = CMatrix::from_rows(&[
        vec![
            Complex64::new(0.5 * (1.0 + p.pz), 0.0),
            Complex64::new(0.5 * p.px, -0.5 * p.py),
        ],
        vec![
            Complex64::new(0.5 * p.px, 0.5 * p.py),
            Complex64::new(0.5 * (1.0 - p.pz), 0.0),
        ],
    ]);
    DensityMatrix::from_model(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fully_mixed_and_pole_states() {
        let p = bloch_from_density(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!(p, BlochVector::new(0.0, 0.0, 0.0));
        let e = DensityMatrix::new(CMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert_eq!(
            bloch_from_density(&e).unwrap(),
            BlochVector::new(0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn equal_superposition_points_along_x() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        let p = bloch_from_density(&rho).unwrap();
        assert!(p.max_abs_diff(&BlochVector::new(1.0, 0.0, 0.0)) < 1e-15);
    }

    #[test]
    fn density_from_known_vectors() {
        let half = c(0.5, 0.0);
        let zero = c(0.0, 0.0);
        let rho = density_from_bloch(&BlochVector::default()).unwrap();
        assert_eq!(rho.matrix(), &CMatrix::diagonal(&[half, half]));
        let rho = density_from_bloch(&BlochVector::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(
            rho.matrix(),
            &CMatrix::from_rows(&[vec![half, half], vec![half, half]])
        );
        let rho = density_from_bloch(&BlochVector::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(rho.matrix(), &CMatrix::diagonal(&[zero, c(1.0, 0.0)]));
    }

    #[test]
    fn rejects_long_vectors_and_wrong_dimension() {
        assert!(matches!(
            density_from_bloch(&BlochVector::new(1.0, 0.1, 0.0)),
            Err(GeoPhaseError::UnphysicalState { .. })
        ));
        assert!(matches!(
            bloch_from_density(&DensityMatrix::maximally_mixed(3)),
            Err(GeoPhaseError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    fn physical_bloch() -> impl Strategy<Value = BlochVector> {
        (
            0.0..=1.0f64,
            0.0..std::f64::consts::PI,
            0.0..std::f64::consts::TAU,
        )
            .prop_map(|(r, th, ph)| {
                BlochVector::new(
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    r * th.cos(),
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn bloch_round_trip(p in physical_bloch()) {
            let rho = density_from_bloch(&p).unwrap();
            let back = bloch_from_density(&rho).unwrap();
            prop_assert!(back.max_abs_diff(&p) < 1e-12);
            let again = density_from_bloch(&back).unwrap();
            prop_assert!(again.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }
}
