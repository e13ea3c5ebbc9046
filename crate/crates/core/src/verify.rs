//! Acceptance checks: analytic limits, oracle agreement and robustness.
//!
//! Every check returns a verdict with a one-line detail; none of them panic
//! on a computation error, which is reported as a failure instead.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dephasing::{rho_two_level, two_level_phase, BathSpec, Mode, TwoLevelDephasingParams};
use crate::engine::{
    geometric_phase_from_frames, phase_distance, GridScheme, PhaseResult, TrajectoryGrid,
};
use crate::oracles::{enumerate_spin_env, fock_propagate_auto};
use crate::qstate::{eig_hermitian, BlochVector, DensityMatrix, EigenFrame};
use crate::spinbath::{
    asymptotic_px, bloch_averaged, rho_spinbath, spinbath_phase, FieldAverager, QuadratureConfig,
    Regime, SpinBathParams,
};
use crate::{Result, Tolerances};

/// Reduced two-level state as a function of the model and time; the Fock
/// check compares one of these against the oracle.
pub type TwoLevelStateFn = dyn Fn(&TwoLevelDephasingParams, f64) -> Result<DensityMatrix> + Sync;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckOutcome {
    /// `check=<id> name=<name> status=PASS|FAIL time=<s> <detail>`
    pub fn summary_line(&self) -> String {
        format!(
            "check={} name={} status={} time={:.3}s {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub tol: Tolerances,
    pub quad: QuadratureConfig,
    /// Starting number of trajectory intervals.
    pub n_steps: usize,
    pub seed: u64,
    /// Points per axis of the spin-bath surface.
    pub surface_grid: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            quad: QuadratureConfig::default(),
            n_steps: 64,
            seed: 20_240_601,
            surface_grid: 32,
        }
    }
}

/// How a phase computation is perturbed for the robustness check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    /// Twice as many starting intervals.
    DoubledGrid,
    /// Every eigenvector multiplied by a pseudo-random unit phase before
    /// gauge fixing.
    RandomPhases(u64),
}

fn timed(id: u8, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn rephase(mut frame: EigenFrame, seed: u64, t: f64) -> EigenFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t.to_bits().rotate_left(17));
    for v in frame.vectors.iter_mut() {
        let u = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        for z in v.iter_mut() {
            *z *= u;
        }
    }
    frame
}

fn grid_for(t_end: f64, cfg: &VerifyConfig, variant: Variant) -> Result<TrajectoryGrid> {
    let n = match variant {
        Variant::DoubledGrid => 2 * cfg.n_steps,
        _ => cfg.n_steps,
    };
    TrajectoryGrid::new(t_end, n, GridScheme::AdaptiveHalving)
}

pub fn dephasing_phase_variant(
    p: &TwoLevelDephasingParams,
    cfg: &VerifyConfig,
    variant: Variant,
) -> Result<PhaseResult> {
    match variant {
        Variant::Baseline => two_level_phase(p, cfg.n_steps, &cfg.tol),
        Variant::DoubledGrid => two_level_phase(p, 2 * cfg.n_steps, &cfg.tol),
        Variant::RandomPhases(seed) => {
            let grid = grid_for(p.period(), cfg, variant)?;
            let frame = |t: f64| Ok(rephase(eig_hermitian(&rho_two_level(p, t)?)?, seed, t));
            geometric_phase_from_frames(&frame, &grid, &cfg.tol)
        }
    }
}

pub fn spinbath_phase_variant(
    p: &SpinBathParams,
    cfg: &VerifyConfig,
    variant: Variant,
) -> Result<PhaseResult> {
    let grid = grid_for(p.horizon(), cfg, variant)?;
    match variant {
        Variant::RandomPhases(seed) => {
            let avg = FieldAverager::new(p, &cfg.quad)?;
            let frame = |t: f64| Ok(rephase(eig_hermitian(&rho_spinbath(&avg, t)?)?, seed, t));
            geometric_phase_from_frames(&frame, &grid, &cfg.tol)
        }
        _ => spinbath_phase(p, &cfg.quad, &grid, &cfg.tol),
    }
}

/// Verdict plus every phase that entered it, for cross-variant comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVerdict {
    pub passed: bool,
    pub phases: Vec<f64>,
    pub detail: String,
}

fn closed_system_params(theta: f64) -> Result<TwoLevelDephasingParams> {
    TwoLevelDephasingParams::new(1.0, theta, BathSpec::none())
}

pub fn closed_system_verdict(cfg: &VerifyConfig, variant: Variant) -> Result<PhaseVerdict> {
    let mut phases = Vec::new();
    let mut worst: f64 = 0.0;
    for f in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let theta = f * PI;
        let r = dephasing_phase_variant(&closed_system_params(theta)?, cfg, variant)?;
        worst = worst.max(phase_distance(r.phase, PI * (1.0 + theta.cos())));
        phases.push(r.phase);
    }
    Ok(PhaseVerdict {
        passed: worst < 1e-6,
        phases,
        detail: format!("max_err={worst:.3e} bound=1e-6"),
    })
}

/// Phase minus π(1 + cosθ) − (γ/ω)π² sin²θ, against 5(γ/ω)².
pub fn first_order_verdict(cfg: &VerifyConfig, variant: Variant) -> Result<PhaseVerdict> {
    let mut phases = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut worst = String::new();
    for f in [0.25, 0.5, 0.75] {
        let theta = f * PI;
        for r in [1e-3, 3e-3, 1e-2] {
            let p = TwoLevelDephasingParams::with_rate(1.0, theta, r)?;
            let res = dephasing_phase_variant(&p, cfg, variant)?;
            let target = PI * (1.0 + theta.cos()) - r * PI * PI * theta.sin().powi(2);
            let err = phase_distance(res.phase, target);
            let ratio = err / (5.0 * r * r);
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst = format!(
                    "theta={f}pi gamma/omega={r} err={err:.3e} bound={:.3e}",
                    5.0 * r * r
                );
            }
            phases.push(res.phase);
        }
    }
    Ok(PhaseVerdict {
        passed: worst_ratio <= 1.0,
        phases,
        detail: format!("worst err/bound={worst_ratio:.3e} at {worst}"),
    })
}

pub fn strong_dephasing_verdict(cfg: &VerifyConfig, variant: Variant) -> Result<PhaseVerdict> {
    let mut phases = Vec::new();
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for gamma_t in [20.0, 40.0, 80.0] {
        for f in [0.25, 0.75] {
            let p = TwoLevelDephasingParams::with_rate(1.0, f * PI, gamma_t / (2.0 * PI))?;
            let r = dephasing_phase_variant(&p, cfg, variant)?;
            let d = phase_distance(r.phase, 0.0);
            if d > worst {
                worst = d;
                at = format!("gammaT={gamma_t} theta={f}pi");
            }
            phases.push(r.phase);
        }
    }
    Ok(PhaseVerdict {
        passed: worst < 0.02,
        phases,
        detail: format!("max|phase mod 2pi|={worst:.4e} at {at} bound=0.02"),
    })
}

pub fn spinbath_limits_verdict(cfg: &VerifyConfig, variant: Variant) -> Result<PhaseVerdict> {
    let mut phases = Vec::new();
    let mut parts = Vec::new();
    let mut passed = true;
    for ratio in [100.0, 0.01] {
        let p = SpinBathParams::new(ratio, 1.0, BlochVector::new(1.0, 0.0, 0.0))?;
        let r = spinbath_phase_variant(&p, cfg, variant)?;
        let d = phase_distance(r.phase, 0.0);
        passed &= d < 1e-2;
        parts.push(format!("|phase|({ratio})={d:.3e}"));
        phases.push(r.phase);
    }
    Ok(PhaseVerdict {
        passed,
        phases,
        detail: format!("{} bound=1e-2", parts.join(" ")),
    })
}

fn verdict_check(
    id: u8,
    name: &'static str,
    f: impl FnOnce() -> Result<PhaseVerdict>,
) -> CheckOutcome {
    timed(id, name, || f().map(|v| (v.passed, v.detail)))
}

pub fn check_closed_system(cfg: &VerifyConfig) -> CheckOutcome {
    let mut out = verdict_check(1, "closed_system_recovery", || {
        closed_system_verdict(cfg, Variant::Baseline)
    });
    if out.passed && out.elapsed >= Duration::from_secs(1) {
        out.passed = false;
        out.detail.push_str(" runtime exceeds 1 s");
    }
    out
}

pub fn check_first_order(cfg: &VerifyConfig) -> CheckOutcome {
    verdict_check(2, "first_order_dephasing", || {
        first_order_verdict(cfg, Variant::Baseline)
    })
}

pub fn check_strong_dephasing(cfg: &VerifyConfig) -> CheckOutcome {
    verdict_check(3, "strong_dephasing_limit", || {
        strong_dephasing_verdict(cfg, Variant::Baseline)
    })
}

pub fn check_fock_oracle(cfg: &VerifyConfig) -> CheckOutcome {
    check_fock_oracle_with(cfg, &rho_two_level)
}

/// Off-diagonal of `state` against the truncated-Fock propagation for five
/// random single-mode models.
pub fn check_fock_oracle_with(cfg: &VerifyConfig, state: &TwoLevelStateFn) -> CheckOutcome {
    let mut out = timed(4, "fock_oracle_equivalence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let g = rng.random_range(0.05..0.4);
            let w1 = rng.random_range(0.6..2.0);
            let theta = rng.random_range(0.1..0.9) * PI;
            let t = rng.random_range(0.5..2.0 * PI);
            let p = TwoLevelDephasingParams::new(
                1.0,
                theta,
                BathSpec::discrete(vec![Mode::new(g, w1)]),
            )?;
            let oracle = fock_propagate_auto(&p, t)?;
            let model = state(&p, t)?;
            worst = worst.max((oracle.rho.get(0, 1) - model.get(0, 1)).norm());
        }
        Ok((
            worst < 1e-8,
            format!("max_offdiag_diff={worst:.3e} bound=1e-8"),
        ))
    });
    if out.passed && out.elapsed >= Duration::from_secs(30) {
        out.passed = false;
        out.detail.push_str(" runtime exceeds 30 s");
    }
    out
}

pub fn check_spinbath_limits(cfg: &VerifyConfig) -> CheckOutcome {
    verdict_check(5, "spinbath_limits", || {
        spinbath_limits_verdict(cfg, Variant::Baseline)
    })
}

pub fn check_strong_bath_decay(cfg: &VerifyConfig) -> CheckOutcome {
    timed(6, "strong_bath_gaussian_decay", || {
        let p = SpinBathParams::new(1e-3, 1.0, BlochVector::new(1.0, 0.0, 0.0))?;
        let avg = FieldAverager::new(&p, &cfg.quad)?;
        let mut worst: f64 = 0.0;
        for i in 0..=300 {
            let t = 3.0 * i as f64 / 300.0;
            let px = avg.average(t)?.p.px;
            worst = worst.max((px - (-2.0 * t * t).exp()).abs());
        }
        Ok((worst < 1e-3, format!("max_dev={worst:.3e} bound=1e-3")))
    })
}

pub fn check_weak_bath_asymptote(cfg: &VerifyConfig) -> CheckOutcome {
    timed(7, "weak_bath_asymptote", || {
        let p = SpinBathParams::new(1.0, 0.02, BlochVector::new(1.0, 0.0, 0.0))?;
        let t = 40.0;
        let exact = bloch_averaged(&p, &cfg.quad, t)?.px;
        let asym = asymptotic_px(&p, t, Regime::WeakBath)?;
        let rel = (exact - asym).abs() / asym.abs();
        Ok((
            rel < 0.05,
            format!("px={exact:.6} asymptote={asym:.6} rel_err={rel:.4} bound=0.05"),
        ))
    })
}

pub fn check_quadrature_vs_mc(cfg: &VerifyConfig) -> CheckOutcome {
    timed(8, "quadrature_vs_monte_carlo", || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(8));
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            let delta = rng.random_range(0.2..2.0);
            let s_n: f64 = rng.random_range(0.1..1.5);
            let t = rng.random_range(0.1..(4.0 / s_n).min(10.0));
            let th: f64 = rng.random_range(0.0..PI);
            let ph: f64 = rng.random_range(0.0..2.0 * PI);
            let p0 = BlochVector::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let p = SpinBathParams::new(delta, s_n, p0)?;
            let gh = bloch_averaged(&p, &QuadratureConfig::gauss_hermite_fixed(128), t)?;
            let mc = FieldAverager::new(
                &p,
                &QuadratureConfig::monte_carlo(100_000, cfg.seed.wrapping_add(i)),
            )?
            .average(t)?;
            let se = mc.std_err.expect("Monte Carlo reports standard errors");
            for ((g, m), s) in gh
                .components()
                .iter()
                .zip(mc.p.components())
                .zip(se.components())
            {
                worst = worst.max((g - m).abs() / s.max(1e-300));
            }
        }
        Ok((worst <= 3.0, format!("max |GH-MC|/SE={worst:.3} bound=3")))
    })
}

pub fn check_discrete_environment(cfg: &VerifyConfig) -> CheckOutcome {
    timed(9, "discrete_environment_convergence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(9));
        let s_n = 0.5;
        let p0 = BlochVector::new(1.0, 0.0, 0.0);
        let mut passed = true;
        let mut parts = Vec::new();
        for _ in 0..3 {
            let delta = rng.random_range(0.3..2.0);
            let t = rng.random_range(0.5..3.0);
            let p = SpinBathParams::new(delta, s_n, p0)?;
            let reference = bloch_averaged(&p, &cfg.quad, t)?;
            let d: Vec<f64> = [4usize, 8, 12]
                .iter()
                .map(|&n| {
                    enumerate_spin_env(n, s_n / (n as f64).sqrt(), delta, &p0, t)
                        .map(|v| v.max_abs_diff(&reference))
                })
                .collect::<Result<_>>()?;
            passed &= d[1] < d[0] && d[2] < d[1];
            parts.push(format!("[{:.2e},{:.2e},{:.2e}]", d[0], d[1], d[2]));
        }
        Ok((passed, format!("distances N=4,8,12: {}", parts.join(" "))))
    })
}

/// Spin-bath phase on a log grid of Δ/s_N over [1e-2, 1e2] times a log grid
/// of s_N over [0.1, 10].
pub fn check_figure2_shape(cfg: &VerifyConfig) -> CheckOutcome {
    let mut out = timed(10, "figure2_shape", || {
        let n = cfg.surface_grid.max(2);
        let ratio =
            crate::sweep::Axis::new("delta_over_s_n", 1e-2, 1e2, n, crate::sweep::Scale::Log)
                .values();
        let s_n = crate::sweep::Axis::new("s_n", 0.1, 10.0, n, crate::sweep::Scale::Log).values();
        let points: Vec<(f64, f64)> = ratio
            .iter()
            .flat_map(|&r| s_n.iter().map(move |&s| (r, s)))
            .collect();
        let eval = |&(r, s): &(f64, f64)| -> Result<f64> {
            let p = SpinBathParams::new(r * s, s, BlochVector::new(1.0, 0.0, 0.0))?;
            Ok(spinbath_phase_variant(&p, cfg, Variant::Baseline)?.phase)
        };
        #[cfg(feature = "parallel")]
        let phases: Vec<f64> = {
            use rayon::prelude::*;
            points.par_iter().map(eval).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let phases: Vec<f64> = points.iter().map(eval).collect::<Result<_>>()?;

        let mut ends: f64 = 0.0;
        let mut band: f64 = 0.0;
        let mut outside: f64 = 0.0;
        for (&(r, _), &ph) in points.iter().zip(&phases) {
            let a = phase_distance(ph, 0.0);
            if r == ratio[0] || r == ratio[n - 1] {
                ends = ends.max(a);
            }
            if r > 0.1 && r < 10.0 {
                band = band.max(a);
            } else {
                outside = outside.max(a);
            }
        }
        // the maximum must sit in the crossover band and rise above rounding
        let peak_in_band = band > outside && band > 1e-12;
        Ok((
            ends < 1e-2 && peak_in_band,
            format!(
                "endpoints max={ends:.3e} (bound 1e-2) band max={band:.3e} outside max={outside:.3e} grid={n}x{n}"
            ),
        ))
    });
    if out.passed && out.elapsed >= Duration::from_secs(300) {
        out.passed = false;
        out.detail.push_str(" runtime exceeds 5 min");
    }
    out
}

/// Φ(θ) at γ/ω = 0.5 on 64 points of [0.05π, 0.95π]; π/2 falls inside bin 31.
pub fn check_figure1_shape(cfg: &VerifyConfig) -> CheckOutcome {
    timed(11, "figure1_shape", || {
        let n = 64;
        let thetas: Vec<f64> = (0..n)
            .map(|i| (0.05 + 0.9 * i as f64 / (n - 1) as f64) * PI)
            .collect();
        let phase_at = |th: f64| {
            Ok(two_level_phase(
                &TwoLevelDephasingParams::with_rate(1.0, th, 0.5)?,
                cfg.n_steps,
                &cfg.tol,
            )?
            .phase)
        };
        let phases = thetas
            .iter()
            .map(|&th| phase_at(th))
            .collect::<Result<Vec<f64>>>()?;
        let centre = thetas
            .windows(2)
            .position(|w| w[0] < PI / 2.0 && PI / 2.0 < w[1])
            .expect("π/2 inside grid");
        let slopes: Vec<f64> = (0..n - 1)
            .map(|i| phase_distance(phases[i + 1], phases[i]) / (thetas[i + 1] - thetas[i]))
            .collect();
        let steepest = slopes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        // continuity: a jump inside a bin survives bisection, a continuous
        // step shrinks with the sub-bin width
        let sub = 16;
        let bins: Vec<usize> = (0..n - 1).filter(|&i| i != centre).collect();
        let has_jump = |&i: &usize| -> Result<bool> {
            let full = phase_distance(phases[i + 1], phases[i]);
            let mut prev = phases[i];
            let mut worst: f64 = 0.0;
            for k in 1..=sub {
                let next = if k == sub {
                    phases[i + 1]
                } else {
                    phase_at(thetas[i] + (thetas[i + 1] - thetas[i]) * k as f64 / sub as f64)?
                };
                worst = worst.max(phase_distance(next, prev));
                prev = next;
            }
            Ok(worst > 0.5 * full + 1e-9)
        };
        #[cfg(feature = "parallel")]
        let flags: Vec<bool> = {
            use rayon::prelude::*;
            bins.par_iter().map(has_jump).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let flags: Vec<bool> = bins.iter().map(has_jump).collect::<Result<_>>()?;
        let jumps = flags.iter().filter(|&&j| j).count();
        Ok((
            steepest == centre && jumps == 0,
            format!(
                "steepest bin={steepest} centre bin={centre} slope={:.3} bins with a jump={jumps}",
                slopes[steepest]
            ),
        ))
    })
}

/// Criteria 1–3 and 5 under a doubled grid and under random eigenvector
/// phases: identical verdicts and phases within 1e-9.
pub fn check_gauge_grid_robustness(cfg: &VerifyConfig) -> CheckOutcome {
    timed(12, "gauge_grid_robustness", || {
        type VerdictFn = fn(&VerifyConfig, Variant) -> Result<PhaseVerdict>;
        let suites: [(&str, VerdictFn); 4] = [
            ("c1", closed_system_verdict),
            ("c2", first_order_verdict),
            ("c3", strong_dephasing_verdict),
            ("c5", spinbath_limits_verdict),
        ];
        let mut passed = true;
        let mut parts = Vec::new();
        for (name, f) in suites {
            let base = f(cfg, Variant::Baseline)?;
            for (label, variant) in [
                ("grid", Variant::DoubledGrid),
                ("gauge", Variant::RandomPhases(cfg.seed)),
            ] {
                let other = f(cfg, variant)?;
                let delta = base
                    .phases
                    .iter()
                    .zip(&other.phases)
                    .map(|(a, b)| phase_distance(*a, *b))
                    .fold(0.0, f64::max);
                let same = other.passed == base.passed;
                passed &= same && delta < 1e-9;
                parts.push(format!(
                    "{name}/{label}:{}:{delta:.1e}",
                    if same { "same" } else { "DIFF" }
                ));
            }
        }
        Ok((passed, parts.join(" ")))
    })
}

/// All twelve checks in order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    vec![
        check_closed_system(cfg),
        check_first_order(cfg),
        check_strong_dephasing(cfg),
        check_fock_oracle(cfg),
        check_spinbath_limits(cfg),
        check_strong_bath_decay(cfg),
        check_weak_bath_asymptote(cfg),
        check_quadrature_vs_mc(cfg),
        check_discrete_environment(cfg),
        check_figure2_shape(cfg),
        check_figure1_shape(cfg),
        check_gauge_grid_robustness(cfg),
    ]
}
