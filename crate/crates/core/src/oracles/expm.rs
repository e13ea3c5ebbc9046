use num_complex::Complex64;

use crate::qstate::CMatrix;

/// Dense matrix exponential by scaling and squaring of a Taylor series.
///
/// The argument is scaled so ‖A/2^s‖₁ ≤ 1/2 and the series is summed until
/// the next term is below 1e-18 relative to the partial sum, which keeps the
/// overall error near 1e-13 after squaring.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.dim();
    let norm = a.one_norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new(0.5f64.powi(s), 0.0));

    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..64 {
        term = (&term * &scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = &sum + &term;
        if term.one_norm() <= 1e-18 * sum.one_norm() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// e^{-iHt} for Hermitian H.
pub fn propagator(h: &CMatrix, t: f64) -> CMatrix {
    expm(&h.scale(Complex64::new(0.0, -t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_and_nilpotent_cases() {
        let d = CMatrix::diagonal(&[c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)]);
        let e = expm(&d);
        let want = CMatrix::diagonal(&[
            c(1f64.exp(), 0.0),
            c((-2f64).exp(), 0.0),
            Complex64::from_polar(1.0, 3.0),
        ]);
        assert!(e.max_abs_diff(&want) < 1e-13);
        // [[0, 1], [0, 0]] → [[1, 1], [0, 1]]
        let n = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        let want = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ]);
        assert!(expm(&n).max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn pauli_rotation_closed_form() {
        // e^{-iσ_x t} = cos t I - i sin t σ_x, with a large t to exercise squaring
        let sx = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        for &t in &[0.3, 7.0, 123.4] {
            let u = propagator(&sx, t);
            let want = CMatrix::from_rows(&[
                vec![c(t.cos(), 0.0), c(0.0, -t.sin())],
                vec![c(0.0, -t.sin()), c(t.cos(), 0.0)],
            ]);
            assert!(u.max_abs_diff(&want) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn propagator_is_unitary() {
        let h = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.3, -0.2), c(0.0, 0.5)],
            vec![c(0.3, 0.2), c(-0.7, 0.0), c(1.1, 0.0)],
            vec![c(0.0, -0.5), c(1.1, 0.0), c(0.2, 0.0)],
        ]);
        let u = propagator(&h, 9.0);
        let uu = &u.adjoint() * &u;
        assert!(uu.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
    }
}
