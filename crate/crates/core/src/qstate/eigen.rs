//! Eigen-decomposition of small Hermitian matrices.
//!
//! Two-by-two matrices use the closed trigonometric form; anything larger
//! goes through cyclic complex Jacobi rotations.

use num_complex::Complex64;

use super::density::DensityMatrix;
use super::matrix::{inner, CMatrix};
use crate::{GeoPhaseError, Result, Tolerances};

/// Largest dimension accepted for density matrices.
pub const MAX_STATE_DIM: usize = 8;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and unit eigenvectors of a Hermitian matrix at
/// one instant of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub time: f64,
    /// Smallest gap between any two eigenvalues.
    pub min_gap: f64,
    /// Set when `min_gap` is below the degeneracy tolerance.
    pub degenerate: bool,
}

impl EigenFrame {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Σ_k ε_k |ψ_k⟩⟨ψ_k|
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n);
        for (val, vec) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += vec[i] * vec[j].conj() * *val;
                }
            }
        }
        m
    }

    /// Largest |⟨ψ_i|ψ_j⟩ - δ_ij|.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((inner(a, b) - Complex64::new(target, 0.0)).norm());
            }
        }
        err
    }

    pub(crate) fn from_parts(values: Vec<f64>, vectors: Vec<Vec<Complex64>>, gap_tol: f64) -> Self {
        let min_gap = values
            .windows(2)
            .map(|w| (w[0] - w[1]).abs())
            .fold(f64::INFINITY, f64::min);
        Self {
            values,
            vectors,
            time: 0.0,
            min_gap,
            degenerate: min_gap < gap_tol,
        }
    }
}

/// Eigen-decomposition of a density matrix (dim ≤ 8).
pub fn eig_hermitian(m: &DensityMatrix) -> Result<EigenFrame> {
    if m.dim() > MAX_STATE_DIM {
        return Err(GeoPhaseError::DimensionOverflow(format!(
            "state dimension {} exceeds {MAX_STATE_DIM}",
            m.dim()
        )));
    }
    eig_hermitian_matrix(m.matrix(), &Tolerances::default())
}

/// Eigen-decomposition of any Hermitian matrix; values sorted descending.
pub fn eig_hermitian_matrix(m: &CMatrix, tol: &Tolerances) -> Result<EigenFrame> {
    let deviation = m.hermiticity_deviation();
    // scale-aware for generic Hermitian input such as coupling matrices
    if deviation > tol.herm * m.frobenius_norm().max(1.0) {
        return Err(GeoPhaseError::NonHermitian { deviation });
    }
    let (values, vectors) = match m.dim() {
        0 => return Err(GeoPhaseError::InvalidInput("empty matrix".into())),
        1 => (vec![m[(0, 0)].re], vec![vec![Complex64::new(1.0, 0.0)]]),
        2 => eig2(m),
        _ => jacobi(m, tol.jacobi)?,
    };
    Ok(EigenFrame::from_parts(values, vectors, tol.gap))
}

/// Closed form for [[a, b], [b*, d]] = mean·I + r·(n·σ).
fn eig2(m: &CMatrix) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    // average the two off-diagonal estimates so tiny anti-Hermitian noise cancels
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let h = 0.5 * (a - d);
    let r = h.hypot(b.norm());
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);

    let upper = if r == 0.0 || b.norm() == 0.0 {
        if h >= 0.0 {
            vec![one, zero]
        } else {
            vec![zero, one]
        }
    } else if h >= 0.0 {
        let c = (0.5 * (1.0 + h / r)).sqrt();
        vec![Complex64::new(c, 0.0), b.conj() / (2.0 * r * c)]
    } else {
        let s = (0.5 * (1.0 - h / r)).sqrt();
        vec![b / (2.0 * r * s), Complex64::new(s, 0.0)]
    };
    // orthogonal complement of (x, y) is (-y*, x*)
    let lower = vec![-upper[1].conj(), upper[0].conj()];
    (vec![mean + r, mean - r], vec![upper, lower])
}

fn jacobi(m: &CMatrix, tol: f64) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = m.dim();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let threshold = tol * m.frobenius_norm().max(1.0);

    let off_norm = |a: &CMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) < threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r;
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let tau = (beta - alpha) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, e^{-iφ}) on (p, q) followed by a real rotation
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }
    if !converged && off_norm(&a) >= threshold {
        return Err(GeoPhaseError::NoConvergence {
            levels: MAX_SWEEPS,
            delta: off_norm(&a),
        });
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let col: Vec<Complex64> = (0..n).map(|i| v[(i, k)]).collect();
            let nrm = super::matrix::norm(&col);
            (a[(k, k)].re, col.into_iter().map(|z| z / nrm).collect())
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::matrix::norm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_state_is_its_own_eigenbasis() {
        let rho = DensityMatrix::new(CMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        let f = eig_hermitian(&rho).unwrap();
        assert_eq!(f.values, vec![1.0, 0.0]);
        assert!((f.vectors[0][0].norm() - 1.0).abs() < 1e-15);
        assert!((f.vectors[1][1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_level_dephased_state_matches_closed_form() {
        let theta = std::f64::consts::PI / 3.0;
        let f_abs = 0.5;
        let off = 0.5 * theta.sin() * f_abs;
        let m = CMatrix::from_rows(&[
            vec![c((theta / 2.0).cos().powi(2), 0.0), c(off, 0.0)],
            vec![c(off, 0.0), c((theta / 2.0).sin().powi(2), 0.0)],
        ]);
        let frame = eig_hermitian(&DensityMatrix::new(m.clone()).unwrap()).unwrap();
        let root = (theta.cos().powi(2) + theta.sin().powi(2) * f_abs * f_abs).sqrt();
        assert!((frame.values[0] - 0.5 * (1.0 + root)).abs() < 1e-15);
        assert!((frame.values[1] - 0.5 * (1.0 - root)).abs() < 1e-15);
        assert!(frame.reconstruct().max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn complex_off_diagonal_two_by_two() {
        for &h in &[0.3, -0.3, 0.0] {
            let b = c(0.1, -0.2);
            let m =
                CMatrix::from_rows(&[vec![c(0.5 + h, 0.0), b], vec![b.conj(), c(0.5 - h, 0.0)]]);
            let f = eig_hermitian_matrix(&m, &Tolerances::default()).unwrap();
            assert!(f.reconstruct().max_abs_diff(&m) < 1e-15);
            assert!(f.orthonormality_error() < 1e-15);
        }
    }

    #[test]
    fn jacobi_handles_degenerate_spectrum() {
        let m = CMatrix::diagonal(&[c(0.25, 0.0); 4]);
        let f = eig_hermitian_matrix(&m, &Tolerances::default()).unwrap();
        assert!(f.degenerate);
        assert!(f.reconstruct().max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn jacobi_three_by_three_hand_example() {
        // eigenvalues of [[2,1,0],[1,2,1],[0,1,2]] are 2+√2, 2, 2-√2
        let r = |x: f64| c(x, 0.0);
        let m = CMatrix::from_rows(&[
            vec![r(2.0), r(1.0), r(0.0)],
            vec![r(1.0), r(2.0), r(1.0)],
            vec![r(0.0), r(1.0), r(2.0)],
        ]);
        let f = eig_hermitian_matrix(&m, &Tolerances::default()).unwrap();
        let s2 = 2f64.sqrt();
        for (got, want) in f.values.iter().zip([2.0 + s2, 2.0, 2.0 - s2]) {
            assert!((got - want).abs() < 1e-13);
        }
        for v in &f.vectors {
            assert!((norm(v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn oversized_state_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(9);
        assert!(matches!(
            eig_hermitian(&rho),
            Err(GeoPhaseError::DimensionOverflow(_))
        ));
    }
}
