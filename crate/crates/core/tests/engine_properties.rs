use std::f64::consts::PI;

use geophase::dephasing::{two_level_phase, two_level_phase_analytic, TwoLevelDephasingParams};
use geophase::engine::{
    geometric_phase, geometric_phase_from_frames, phase_distance, GridScheme, TrajectoryGrid,
};
use geophase::qstate::{eig_hermitian, CMatrix, DensityMatrix};
use geophase::{Complex64, Result, Tolerances};
use proptest::prelude::*;

// mixed state whose Bloch vector of length r precesses at polar angle theta
fn precessing_mixed(theta: f64, r: f64) -> impl Fn(f64) -> Result<DensityMatrix> + Sync {
    move |t| {
        let (st, ct) = (theta.sin(), theta.cos());
        let off = Complex64::from_polar(0.5 * r * st, -t);
        DensityMatrix::new(CMatrix::from_rows(&[
            vec![Complex64::new(0.5 * (1.0 + r * ct), 0.0), off],
            vec![off.conj(), Complex64::new(0.5 * (1.0 - r * ct), 0.0)],
        ]))
    }
}

// closed form for a rigid precession of a mixed qubit
fn mixed_precession_phase(theta: f64, r: f64) -> f64 {
    let a = PI * (1.0 - theta.cos());
    (r * a.sin()).atan2(a.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_precession_matches_closed_form(theta in 0.1f64..3.0, r in 0.2f64..1.0) {
        let grid = TrajectoryGrid::adaptive(2.0 * PI).unwrap();
        let res = geometric_phase(&precessing_mixed(theta, r), &grid, &Tolerances::default()).unwrap();
        let want = -mixed_precession_phase(theta, r);
        prop_assert!(phase_distance(res.phase, want) < 1e-6, "{} vs {}", res.phase, want);
    }

    #[test]
    fn eigenvector_phases_do_not_matter(theta in 0.1f64..3.0, r in 0.2f64..1.0, seed in any::<u64>()) {
        let src = precessing_mixed(theta, r);
        let tol = Tolerances::default();
        let grid = TrajectoryGrid::new(2.0 * PI, 64, GridScheme::Uniform).unwrap();
        let plain = geometric_phase(&src, &grid, &tol).unwrap();
        let scrambled = geometric_phase_from_frames(
            &|t: f64| {
                let mut f = eig_hermitian(&src(t)?)?.with_time(t);
                for (k, v) in f.vectors.iter_mut().enumerate() {
                    let chi = ((seed ^ t.to_bits()).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64) % 10_007) as f64;
                    let u = Complex64::from_polar(1.0, chi);
                    v.iter_mut().for_each(|x| *x *= u);
                }
                Ok(f)
            },
            &grid,
            &tol,
        )
        .unwrap();
        prop_assert!(phase_distance(plain.phase, scrambled.phase) < 1e-12);
    }

    #[test]
    fn phase_ignores_the_time_parametrization(theta in 0.2f64..2.9, r in 0.3f64..1.0, warp in 0.1f64..0.9) {
        let src = precessing_mixed(theta, r);
        let tol = Tolerances::default();
        let grid = TrajectoryGrid::adaptive(2.0 * PI).unwrap();
        // monotone map of [0, 2π] onto itself
        let s = move |t: f64| t - warp * t.sin();
        let warped = |t: f64| src(s(t));
        let a = geometric_phase(&src, &grid, &tol).unwrap();
        let b = geometric_phase(&warped, &grid, &tol).unwrap();
        prop_assert!(phase_distance(a.phase, b.phase) < 1e-6, "{} vs {}", a.phase, b.phase);
    }

    #[test]
    fn fixed_unitary_frame_change_is_invisible(theta in 0.2f64..2.9, r in 0.3f64..1.0, alpha in 0.0f64..3.0, beta in 0.0f64..6.0) {
        let src = precessing_mixed(theta, r);
        let (c, s) = ((alpha / 2.0).cos(), (alpha / 2.0).sin());
        let e = Complex64::from_polar(1.0, beta);
        let u = CMatrix::from_rows(&[vec![Complex64::new(c, 0.0), -e.conj() * s], vec![e * s, Complex64::new(c, 0.0)]]);
        let rotated = |t: f64| DensityMatrix::new(&(&u * src(t)?.matrix()) * &u.adjoint());
        let tol = Tolerances::default();
        let grid = TrajectoryGrid::adaptive(2.0 * PI).unwrap();
        let a = geometric_phase(&src, &grid, &tol).unwrap();
        let b = geometric_phase(&rotated, &grid, &tol).unwrap();
        prop_assert!(phase_distance(a.phase, b.phase) < 1e-8);
    }

    #[test]
    fn numerical_and_analytic_eigensystems_agree(theta in 0.1f64..3.0, gamma in 0.0f64..0.5) {
        let p = TwoLevelDephasingParams::with_rate(1.0, theta, gamma).unwrap();
        let tol = Tolerances::default();
        let a = two_level_phase(&p, 64, &tol).unwrap();
        let b = two_level_phase_analytic(&p, 64, &tol).unwrap();
        prop_assert!(phase_distance(a.phase, b.phase) < 1e-9);
    }
}

#[test]
fn uniform_grid_error_falls_quadratically() {
    let (theta, r) = (1.1, 0.7);
    let src = precessing_mixed(theta, r);
    let want = -mixed_precession_phase(theta, r);
    let tol = Tolerances::default();
    let errs: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let grid = TrajectoryGrid::new(2.0 * PI, n, GridScheme::Uniform).unwrap();
            phase_distance(geometric_phase(&src, &grid, &tol).unwrap().phase, want)
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "{errs:?}");
    }
}
