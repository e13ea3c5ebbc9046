//! A spin-½ with tunnelling Δ coupled to a static spin environment.
//!
//! For a fixed environment configuration the spin sees a field B along z and
//! precesses under Δσ_x + Bσ_z; the reduced state is the Gaussian average of
//! that precession over B ~ N(0, s_N²).

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{geometric_phase, PhaseResult, TrajectoryGrid};
use crate::qstate::{density_from_bloch, BlochVector, DensityMatrix};
use crate::quadrature::{gauss_hermite, normal_panels, panels_for_wavenumber, SymmetricRule};
use crate::special::gamma_plateau;
use crate::{GeoPhaseError, Result, Tolerances};

pub use crate::special::erf_and_gamma;

/// Samples per Monte Carlo block; block b draws from ChaCha stream b.
pub const MC_BLOCK: usize = 4096;
/// Gauss–Hermite with n nodes resolves E[cos(kz)] for k up to about this
/// multiple of √n.
const HERMITE_RESOLUTION: f64 = 1.2;
/// Upper bound on ± pairs in a panel rule.
const MAX_PANEL_PAIRS: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBathParams {
    /// Tunnelling frequency, coefficient of σ_x.
    pub delta: f64,
    /// Standard deviation of the environment field.
    pub s_n: f64,
    pub p0: BlochVector,
    /// Phase horizon; `None` means 2π/Δ.
    pub horizon: Option<f64>,
}

impl SpinBathParams {
    pub fn new(delta: f64, s_n: f64, p0: BlochVector) -> Result<Self> {
        let p = Self {
            delta,
            s_n,
            p0,
            horizon: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_horizon(mut self, tau: f64) -> Result<Self> {
        self.horizon = Some(tau);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if !(self.s_n >= 0.0) || !self.s_n.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "s_N must be >= 0, got {}",
                self.s_n
            )));
        }
        let n = self.p0.norm();
        if !n.is_finite() || n > 1.0 + crate::qstate::BLOCH_NORM_SLACK {
            return Err(GeoPhaseError::UnphysicalState { norm: n });
        }
        if let Some(tau) = self.horizon {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(GeoPhaseError::InvalidInput(format!(
                    "horizon must be > 0, got {tau}"
                )));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(2.0 * PI / self.delta)
    }
}

/// One quadrature point of the field average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub b: f64,
    pub weight: f64,
    pub omega_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMethod {
    /// Gauss–Hermite while it can resolve the oscillation, Legendre panels
    /// beyond that.
    Auto,
    GaussHermite,
    GaussLegendrePanels,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub method: QuadratureMethod,
    /// Starting node count (Gauss–Hermite), panels per side (panels, 0 picks
    /// from the oscillation rate) or sample count (Monte Carlo).
    pub n_nodes: usize,
    pub seed: u64,
    /// Double the rule until no component moves by more than `tol`.
    pub refine: bool,
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            method: QuadratureMethod::Auto,
            n_nodes: crate::tolerances::QUADRATURE_START_NODES,
            seed: 0,
            refine: true,
            tol: crate::tolerances::QUADRATURE_TOL,
            max_nodes: crate::tolerances::QUADRATURE_MAX_NODES,
        }
    }
}

impl QuadratureConfig {
    /// Gauss–Hermite starting at `n` nodes and doubling to convergence.
    pub fn gauss_hermite(n: usize) -> Self {
        Self {
            method: QuadratureMethod::GaussHermite,
            n_nodes: n,
            ..Self::default()
        }
    }

    /// A single Gauss–Hermite rule with exactly `n` nodes.
    pub fn gauss_hermite_fixed(n: usize) -> Self {
        Self {
            refine: false,
            ..Self::gauss_hermite(n)
        }
    }

    pub fn panels() -> Self {
        Self {
            method: QuadratureMethod::GaussLegendrePanels,
            n_nodes: 0,
            ..Self::default()
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            method: QuadratureMethod::MonteCarlo,
            n_nodes: samples,
            seed,
            refine: false,
            ..Self::default()
        }
    }

    pub fn from_tolerances(tol: &Tolerances) -> Self {
        Self {
            n_nodes: tol.quadrature_start_nodes,
            tol: tol.quadrature_tol,
            max_nodes: tol.quadrature_max_nodes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GeoPhaseError::InvalidInput(m));
        match self.method {
            QuadratureMethod::GaussHermite | QuadratureMethod::Auto if self.n_nodes < 4 => bad(
                format!("Gauss–Hermite needs at least 4 nodes, got {}", self.n_nodes),
            ),
            QuadratureMethod::MonteCarlo if self.n_nodes < 2 => bad(format!(
                "Monte Carlo needs at least 2 samples, got {}",
                self.n_nodes
            )),
            _ if !(self.tol > 0.0) => bad(format!(
                "quadrature tolerance must be > 0, got {}",
                self.tol
            )),
            _ if self.refine
                && self.method != QuadratureMethod::MonteCarlo
                && self.max_nodes < self.n_nodes =>
            {
                bad(format!(
                    "max_nodes {} below starting count {}",
                    self.max_nodes, self.n_nodes
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Polarization at time t for a fixed field B.
pub fn bloch_at_field(params: &SpinBathParams, b: f64, t: f64) -> BlochVector {
    let d = params.delta;
    let BlochVector {
        px: x0,
        py: y0,
        pz: z0,
    } = params.p0;
    let w2 = d * d + b * b;
    let w = w2.sqrt();
    let (s2, c2) = (2.0 * w * t).sin_cos();
    let sq = (w * t).sin().powi(2);
    BlochVector {
        px: x0 * (d * d + b * b * c2) / w2 - y0 * b / w * s2 + z0 * 2.0 * d * b / w2 * sq,
        py: y0 * c2 + s2 / w * (x0 * b - d * z0),
        pz: z0 * (b * b + d * d * c2) / w2 + x0 * 2.0 * d * b / w2 * sq + y0 * d / w * s2,
    }
}

/// Field-averaged polarization with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedBloch {
    pub p: BlochVector,
    /// Standard error per component (Monte Carlo only).
    pub std_err: Option<BlochVector>,
    pub method: QuadratureMethod,
    /// Field evaluations in the accepted estimate.
    pub evaluations: usize,
    /// Largest componentwise change at the last refinement, when refined.
    pub change: Option<f64>,
}

/// Reusable averager: holds the Gauss–Hermite rules so repeated calls along a
/// time grid do not rebuild them. Rules are built on first use.
#[derive(Debug, Clone)]
pub struct FieldAverager {
    params: SpinBathParams,
    config: QuadratureConfig,
    hermite_sizes: Vec<usize>,
    hermite: Vec<OnceLock<SymmetricRule>>,
}

impl FieldAverager {
    pub fn new(params: &SpinBathParams, config: &QuadratureConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let mut hermite_sizes = Vec::new();
        if matches!(
            config.method,
            QuadratureMethod::GaussHermite | QuadratureMethod::Auto
        ) {
            let mut n = config.n_nodes;
            loop {
                hermite_sizes.push(n);
                if !config.refine || n.saturating_mul(2) > config.max_nodes {
                    break;
                }
                n *= 2;
            }
        }
        Ok(Self {
            params: *params,
            config: *config,
            hermite: hermite_sizes.iter().map(|_| OnceLock::new()).collect(),
            hermite_sizes,
        })
    }

    fn hermite_rule(&self, level: usize) -> Result<&SymmetricRule> {
        if let Some(r) = self.hermite[level].get() {
            return Ok(r);
        }
        let rule = gauss_hermite(self.hermite_sizes[level])?;
        Ok(self.hermite[level].get_or_init(|| rule))
    }

    pub fn params(&self) -> &SpinBathParams {
        &self.params
    }

    pub fn average(&self, t: f64) -> Result<AveragedBloch> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "time must be >= 0, got {t}"
            )));
        }
        if self.params.s_n == 0.0 {
            return Ok(AveragedBloch {
                p: bloch_at_field(&self.params, 0.0, t),
                std_err: None,
                method: self.config.method,
                evaluations: 1,
                change: None,
            });
        }
        let wavenumber = 2.0 * t * self.params.s_n;
        match self.config.method {
            QuadratureMethod::GaussHermite => self.hermite_average(t, 0),
            QuadratureMethod::GaussLegendrePanels => self.panel_average(t, wavenumber),
            QuadratureMethod::MonteCarlo => Ok(self.monte_carlo(t)),
            QuadratureMethod::Auto => {
                let largest = self.hermite_sizes.last().copied().unwrap_or(0);
                let resolvable = HERMITE_RESOLUTION * (largest as f64).sqrt();
                if wavenumber <= 0.5 * resolvable || !self.config.refine {
                    let start = self
                        .hermite_sizes
                        .iter()
                        .position(|&n| HERMITE_RESOLUTION * (n as f64).sqrt() >= wavenumber)
                        .unwrap_or(0);
                    self.hermite_average(t, start.min(self.hermite_sizes.len().saturating_sub(2)))
                } else {
                    self.panel_average(t, wavenumber)
                }
            }
        }
    }

    fn apply(&self, rule: &SymmetricRule, t: f64) -> BlochVector {
        let s = self.params.s_n;
        let mut acc = [0.0; 3];
        if rule.center != 0.0 {
            let p = bloch_at_field(&self.params, 0.0, t);
            for (a, v) in acc.iter_mut().zip(p.components()) {
                *a += rule.center * v;
            }
        }
        for &(z, w) in &rule.pairs {
            let plus = bloch_at_field(&self.params, s * z, t);
            let minus = bloch_at_field(&self.params, -s * z, t);
            for ((a, u), v) in acc
                .iter_mut()
                .zip(plus.components())
                .zip(minus.components())
            {
                *a += w * (u + v);
            }
        }
        BlochVector::new(acc[0], acc[1], acc[2])
    }

    fn hermite_average(&self, t: f64, start: usize) -> Result<AveragedBloch> {
        let first = self.hermite_rule(start)?;
        let mut prev = self.apply(first, t);
        if !self.config.refine {
            return Ok(AveragedBloch {
                p: prev,
                std_err: None,
                method: QuadratureMethod::GaussHermite,
                evaluations: first.len(),
                change: None,
            });
        }
        let mut change = f64::INFINITY;
        for level in start + 1..self.hermite_sizes.len() {
            let rule = self.hermite_rule(level)?;
            let cur = self.apply(rule, t);
            change = cur.max_abs_diff(&prev);
            prev = cur;
            if change < self.config.tol {
                return Ok(AveragedBloch {
                    p: cur,
                    std_err: None,
                    method: QuadratureMethod::GaussHermite,
                    evaluations: rule.len(),
                    change: Some(change),
                });
            }
        }
        Err(GeoPhaseError::QuadratureDivergence {
            nodes: self.hermite_sizes.last().copied().unwrap_or(0),
            change,
        })
    }

    fn panel_average(&self, t: f64, wavenumber: f64) -> Result<AveragedBloch> {
        let mut panels = if self.config.method == QuadratureMethod::GaussLegendrePanels
            && self.config.n_nodes > 0
        {
            self.config.n_nodes
        } else {
            (panels_for_wavenumber(wavenumber) / 2).max(4)
        };
        let mut rule = normal_panels(panels)?;
        let mut prev = self.apply(&rule, t);
        if !self.config.refine {
            return Ok(AveragedBloch {
                p: prev,
                std_err: None,
                method: QuadratureMethod::GaussLegendrePanels,
                evaluations: rule.len(),
                change: None,
            });
        }
        let mut change = f64::INFINITY;
        while rule.pairs.len() * 2 <= MAX_PANEL_PAIRS {
            panels *= 2;
            rule = normal_panels(panels)?;
            let cur = self.apply(&rule, t);
            change = cur.max_abs_diff(&prev);
            prev = cur;
            if change < self.config.tol {
                return Ok(AveragedBloch {
                    p: cur,
                    std_err: None,
                    method: QuadratureMethod::GaussLegendrePanels,
                    evaluations: rule.len(),
                    change: Some(change),
                });
            }
        }
        Err(GeoPhaseError::QuadratureDivergence {
            nodes: rule.len(),
            change,
        })
    }

    fn monte_carlo(&self, t: f64) -> AveragedBloch {
        let n = self.config.n_nodes;
        let blocks = n.div_ceil(MC_BLOCK);
        let block = |b: usize| -> [f64; 6] {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(n - b * MC_BLOCK);
            let mut acc = [0.0; 6];
            for _ in 0..count {
                let z: f64 = StandardNormal.sample(&mut rng);
                let p = bloch_at_field(&self.params, self.params.s_n * z, t);
                for (k, v) in p.components().into_iter().enumerate() {
                    acc[k] += v;
                    acc[k + 3] += v * v;
                }
            }
            acc
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<[f64; 6]> = {
            use rayon::prelude::*;
            (0..blocks).into_par_iter().map(block).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<[f64; 6]> = (0..blocks).map(block).collect();

        let mut tot = [0.0; 6];
        for part in &parts {
            for (a, v) in tot.iter_mut().zip(part) {
                *a += v;
            }
        }
        let nf = n as f64;
        let mean = [tot[0] / nf, tot[1] / nf, tot[2] / nf];
        let se = |k: usize| {
            ((tot[k + 3] / nf - mean[k] * mean[k]).max(0.0) * nf / (nf - 1.0) / nf).sqrt()
        };
        AveragedBloch {
            p: BlochVector::new(mean[0], mean[1], mean[2]),
            std_err: Some(BlochVector::new(se(0), se(1), se(2))),
            method: QuadratureMethod::MonteCarlo,
            evaluations: n,
            change: None,
        }
    }
}

/// Quadrature points of `rule` mapped to fields B = s_N z.
pub fn field_samples(params: &SpinBathParams, rule: &SymmetricRule) -> Vec<FieldSample> {
    rule.unfolded()
        .into_iter()
        .map(|(z, weight)| {
            let b = params.s_n * z;
            FieldSample {
                b,
                weight,
                omega_b: params.delta.hypot(b),
            }
        })
        .collect()
}

/// p(t) = ∫ p(t, B) η(B) dB.
pub fn bloch_averaged(
    params: &SpinBathParams,
    quad: &QuadratureConfig,
    t: f64,
) -> Result<BlochVector> {
    Ok(FieldAverager::new(params, quad)?.average(t)?.p)
}

/// Reduced density matrix at time t.
pub fn rho_spinbath(averager: &FieldAverager, t: f64) -> Result<DensityMatrix> {
    density_from_bloch(&averager.average(t)?.p)
}

/// Geometric phase acquired up to the grid's end time by the field-averaged state.
pub fn spinbath_phase(
    params: &SpinBathParams,
    quad: &QuadratureConfig,
    grid: &TrajectoryGrid,
    tol: &Tolerances,
) -> Result<PhaseResult> {
    if params.p0.norm() < crate::tolerances::MIXED_FLOOR {
        return Err(GeoPhaseError::DegenerateState(
            "initial polarization is zero; the state stays maximally mixed".into(),
        ));
    }
    let averager = FieldAverager::new(params, quad)?;
    geometric_phase(&|t: f64| rho_spinbath(&averager, t), grid, tol)
}

/// Trajectory quantities of the two-branch phase formula.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathDiagnostics {
    pub times: Vec<f64>,
    pub p: Vec<BlochVector>,
    /// ½(1 + |p(t)|)
    pub lambda1: Vec<f64>,
    /// ½(1 − |p(t)|)
    pub lambda2: Vec<f64>,
    /// Polar angle of p(t).
    pub theta: Vec<f64>,
    /// Azimuth of p(t), followed continuously.
    pub phi: Vec<f64>,
    /// ½∫(1 + cos θ) dφ by the trapezoid rule.
    pub c: f64,
    /// ½√((1 + |p(0)|)(1 + |p(τ)|))
    pub cap_lambda1: f64,
    /// ½√((1 − |p(0)|)(1 − |p(τ)|))
    pub cap_lambda2: f64,
    /// The phase assembled from the quantities above.
    pub closed_form_phase: f64,
}

/// Samples the averaged trajectory on `n_steps` uniform intervals of
/// [0, τ] and evaluates the closed-form two-branch phase.
pub fn spinbath_diagnostics(
    params: &SpinBathParams,
    quad: &QuadratureConfig,
    n_steps: usize,
) -> Result<SpinBathDiagnostics> {
    if n_steps < 1 {
        return Err(GeoPhaseError::InvalidInput("need at least one step".into()));
    }
    let averager = FieldAverager::new(params, quad)?;
    let tau = params.horizon();
    let times: Vec<f64> = (0..=n_steps)
        .map(|i| tau * i as f64 / n_steps as f64)
        .collect();
    let p = times
        .iter()
        .map(|&t| averager.average(t).map(|a| a.p))
        .collect::<Result<Vec<_>>>()?;

    let mut theta = Vec::with_capacity(p.len());
    let mut phi: Vec<f64> = Vec::with_capacity(p.len());
    for v in &p {
        let r = v.norm();
        theta.push(if r > 0.0 {
            (v.pz / r).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        });
        let a = v.py.atan2(v.px);
        phi.push(match phi.last() {
            Some(&prev) => prev + crate::engine::wrap_phase(a - prev),
            None => a,
        });
    }
    let mut c = 0.0;
    for i in 1..p.len() {
        let mean_cos = 0.5 * (theta[i].cos() + theta[i - 1].cos());
        c += 0.5 * (1.0 + mean_cos) * (phi[i] - phi[i - 1]);
    }
    let r0 = p[0].norm();
    let rt = p[p.len() - 1].norm();
    let cap_lambda1 = 0.5 * ((1.0 + r0) * (1.0 + rt)).max(0.0).sqrt();
    let cap_lambda2 = 0.5 * ((1.0 - r0) * (1.0 - rt)).max(0.0).sqrt();

    let last = p.len() - 1;
    let (c0, s0) = ((theta[0] / 2.0).cos(), (theta[0] / 2.0).sin());
    let (ct, st) = ((theta[last] / 2.0).cos(), (theta[last] / 2.0).sin());
    let dphi = phi[last] - phi[0];
    let cis = |x: f64| num_complex::Complex64::from_polar(1.0, x);
    let sum = (cis(-dphi) * (c0 * ct) + s0 * st) * cis(c) * cap_lambda1
        + (cis(dphi) * (c0 * ct) + s0 * st) * cis(-c) * cap_lambda2;

    let lambda1 = p.iter().map(|v| 0.5 * (1.0 + v.norm())).collect();
    let lambda2 = p.iter().map(|v| 0.5 * (1.0 - v.norm())).collect();
    Ok(SpinBathDiagnostics {
        times,
        p,
        lambda1,
        lambda2,
        theta,
        phi,
        c,
        cap_lambda1,
        cap_lambda2,
        closed_form_phase: sum.arg(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// s_N ≥ 10Δ: Gaussian collapse of p_x.
    StrongBath,
    /// s_N ≤ Δ/10: plateau plus a t^{-3/2} oscillating tail.
    WeakBath,
}

/// Closed-form asymptote of p_x(t) in either limiting regime.
pub fn asymptotic_px(params: &SpinBathParams, t: f64, regime: Regime) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(GeoPhaseError::InvalidInput(format!(
            "time must be >= 0, got {t}"
        )));
    }
    let (d, s) = (params.delta, params.s_n);
    match regime {
        Regime::StrongBath => {
            if s < 10.0 * d {
                return Err(GeoPhaseError::RegimeViolation(format!(
                    "strong-bath form needs s_N >= 10Δ (s_N = {s}, Δ = {d})"
                )));
            }
            Ok(params.p0.px * (-2.0 * t * t * s * s).exp())
        }
        Regime::WeakBath => {
            if s > d / 10.0 {
                return Err(GeoPhaseError::RegimeViolation(format!(
                    "weak-bath form needs s_N <= Δ/10 (s_N = {s}, Δ = {d})"
                )));
            }
            let denom = 8.0 * d * s * s * t.powi(3);
            if !(denom > 0.0) {
                return Err(GeoPhaseError::RegimeViolation(
                    "weak-bath form needs Δ s_N² t³ > 0".into(),
                ));
            }
            let plateau = gamma_plateau(d / (2f64.sqrt() * s));
            Ok(params.p0.px * (plateau + (2.0 * d * t + 0.75 * PI).cos() / denom.sqrt()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{phase_distance, GridScheme};
    use proptest::prelude::*;

    fn x_polarized(delta: f64, s_n: f64) -> SpinBathParams {
        SpinBathParams::new(delta, s_n, BlochVector::new(1.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn field_evolution_examples() {
        let p = x_polarized(1.0, 0.3);
        assert_eq!(bloch_at_field(&p, 0.7, 0.0), p.p0);
        for &t in &[0.1, 1.0, 17.3] {
            let v = bloch_at_field(&p, 0.0, t);
            assert!(v.max_abs_diff(&BlochVector::new(1.0, 0.0, 0.0)) < 1e-15);
        }
        // Ω_B = √2, 2Ω_B t = π: p_z = ½(1 + cos π) = 0, p_x = 2·sin²(π/2)/2 = 1
        let p = SpinBathParams::new(1.0, 0.0, BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        let v = bloch_at_field(&p, 1.0, PI / (2.0 * 2f64.sqrt()));
        assert!(v.max_abs_diff(&BlochVector::new(1.0, 0.0, 0.0)) < 1e-15);
        // B = 0: rotation about x at 2Δ
        let v = bloch_at_field(&p, 0.0, 0.4);
        assert!((v.pz - 0.8f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn zero_width_average_is_the_bare_evolution() {
        let p = SpinBathParams::new(0.8, 0.0, BlochVector::new(0.3, -0.2, 0.5)).unwrap();
        for cfg in [
            QuadratureConfig::default(),
            QuadratureConfig::monte_carlo(10, 1),
        ] {
            assert_eq!(
                bloch_averaged(&p, &cfg, 2.5).unwrap(),
                bloch_at_field(&p, 0.0, 2.5)
            );
        }
    }

    #[test]
    fn symmetric_ensemble_keeps_polarization_on_x() {
        let p = x_polarized(1.0, 0.7);
        for &t in &[0.3, 2.0, 9.0, 60.0] {
            let v = bloch_averaged(&p, &QuadratureConfig::default(), t).unwrap();
            assert_eq!((v.py, v.pz), (0.0, 0.0));
        }
    }

    #[test]
    fn strong_bath_collapses_like_a_gaussian() {
        let p = x_polarized(1e-3, 1.0);
        for i in 0..=30 {
            let t = 0.1 * i as f64;
            let v = bloch_averaged(&p, &QuadratureConfig::default(), t).unwrap();
            assert!((v.px - (-2.0 * t * t).exp()).abs() < 1e-3, "t = {t}");
        }
    }

    #[test]
    fn hermite_and_panels_agree() {
        let p = SpinBathParams::new(1.0, 0.5, BlochVector::new(0.6, 0.0, 0.8)).unwrap();
        for &t in &[0.5, 3.0, 12.0] {
            let gh = bloch_averaged(&p, &QuadratureConfig::gauss_hermite(64), t).unwrap();
            let gl = bloch_averaged(&p, &QuadratureConfig::panels(), t).unwrap();
            assert!(gh.max_abs_diff(&gl) < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn auto_switches_to_panels_for_long_times() {
        let p = x_polarized(0.01, 1.0);
        let avg = FieldAverager::new(&p, &QuadratureConfig::default()).unwrap();
        assert_eq!(
            avg.average(1.0).unwrap().method,
            QuadratureMethod::GaussHermite
        );
        let long = avg.average(300.0).unwrap();
        assert_eq!(long.method, QuadratureMethod::GaussLegendrePanels);
        assert!(long.change.unwrap() < 1e-8);
        // strict Gauss–Hermite cannot resolve it
        let strict = bloch_averaged(&p, &QuadratureConfig::gauss_hermite(64), 300.0);
        assert!(matches!(
            strict,
            Err(GeoPhaseError::QuadratureDivergence { .. })
        ));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_consistent() {
        let p = SpinBathParams::new(1.0, 0.4, BlochVector::new(0.0, 0.6, 0.8)).unwrap();
        let cfg = QuadratureConfig::monte_carlo(20_000, 7);
        let a = FieldAverager::new(&p, &cfg).unwrap().average(2.0).unwrap();
        let b = FieldAverager::new(&p, &cfg).unwrap().average(2.0).unwrap();
        assert_eq!(a, b);
        let gh = bloch_averaged(&p, &QuadratureConfig::gauss_hermite(128), 2.0).unwrap();
        let se = a.std_err.unwrap();
        for ((m, g), s) in
            a.p.components()
                .iter()
                .zip(gh.components())
                .zip(se.components())
        {
            assert!((m - g).abs() < 4.0 * s + 1e-12);
        }
    }

    #[test]
    fn field_samples_invariants() {
        let p = x_polarized(0.5, 0.3);
        let samples = field_samples(&p, &gauss_hermite(64).unwrap());
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(samples.iter().all(|s| s.omega_b >= p.delta));
    }

    #[test]
    fn asymptote_regimes() {
        let strong = x_polarized(0.01, 1.0);
        assert_eq!(
            asymptotic_px(&strong, 0.0, Regime::StrongBath).unwrap(),
            1.0
        );
        assert!(matches!(
            asymptotic_px(&strong, 1.0, Regime::WeakBath),
            Err(GeoPhaseError::RegimeViolation(_))
        ));
        let weak = x_polarized(1.0, 0.05);
        assert!(matches!(
            asymptotic_px(&weak, 0.0, Regime::WeakBath),
            Err(GeoPhaseError::RegimeViolation(_))
        ));
        assert!(asymptotic_px(&weak, 1.0, Regime::StrongBath).is_err());
        let late = asymptotic_px(&weak, 1e9, Regime::WeakBath).unwrap();
        assert!((late - gamma_plateau(1.0 / (2f64.sqrt() * 0.05))).abs() < 1e-9);
    }

    #[test]
    fn weak_bath_asymptote_against_monte_carlo() {
        let p = x_polarized(1.0, 0.05);
        let mc = FieldAverager::new(&p, &QuadratureConfig::monte_carlo(1_000_000, 3))
            .unwrap()
            .average(50.0)
            .unwrap();
        let asym = asymptotic_px(&p, 50.0, Regime::WeakBath).unwrap();
        // leading neglected term of the asymptote is O(1/(Δ s_N² t³)) relative
        // to the tail amplitude; combine it with three standard errors
        let tol = 3.0 * mc.std_err.unwrap().px + 1.0 / (8.0 * 0.05 * 0.05 * 50f64.powi(3)).sqrt();
        assert!((mc.p.px - asym).abs() < tol, "mc {} asym {}", mc.p.px, asym);
    }

    #[test]
    fn closed_form_matches_engine_in_the_crossover() {
        let p = SpinBathParams::new(1.0, 0.8, BlochVector::new(0.5, 0.3, 0.6)).unwrap();
        let quad = QuadratureConfig::default();
        let grid = TrajectoryGrid::new(p.horizon(), 64, GridScheme::AdaptiveHalving).unwrap();
        let engine = spinbath_phase(&p, &quad, &grid, &Tolerances::default()).unwrap();
        let diag = spinbath_diagnostics(&p, &quad, 4096).unwrap();
        assert!(phase_distance(engine.phase, diag.closed_form_phase) < 1e-5);
        assert!((diag.lambda1[0] - 0.5 * (1.0 + p.p0.norm())).abs() < 1e-15);
    }

    #[test]
    fn zero_polarization_is_degenerate() {
        let p = SpinBathParams::new(1.0, 0.2, BlochVector::default()).unwrap();
        let grid = TrajectoryGrid::adaptive(p.horizon()).unwrap();
        assert!(matches!(
            spinbath_phase(
                &p,
                &QuadratureConfig::default(),
                &grid,
                &Tolerances::default()
            ),
            Err(GeoPhaseError::DegenerateState(_))
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert!(SpinBathParams::new(0.0, 0.1, BlochVector::default()).is_err());
        assert!(SpinBathParams::new(1.0, -0.1, BlochVector::default()).is_err());
        assert!(SpinBathParams::new(1.0, 0.1, BlochVector::new(1.0, 1.0, 0.0)).is_err());
        assert!(QuadratureConfig::gauss_hermite(3).validate().is_err());
        let p = x_polarized(1.0, 0.1);
        assert!(bloch_averaged(&p, &QuadratureConfig::default(), -1.0).is_err());
    }

    fn unit_vector() -> impl Strategy<Value = BlochVector> {
        (0.0..PI, 0.0..2.0 * PI).prop_map(|(th, ph)| {
            BlochVector::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
        })
    }

    proptest! {
        #[test]
        fn fixed_field_evolution_is_a_rotation(
            d in 0.05..5.0f64, b in -5.0..5.0f64, t in 0.0..50.0f64, r in 0.0..=1.0f64, u in unit_vector()
        ) {
            let p0 = BlochVector::new(r * u.px, r * u.py, r * u.pz);
            let p = SpinBathParams::new(d, 0.0, p0).unwrap();
            prop_assert!((bloch_at_field(&p, b, t).norm() - r).abs() < 1e-12);
        }

        #[test]
        fn average_contracts(d in 0.1..3.0f64, s in 0.01..3.0f64, t in 0.0..20.0f64, u in unit_vector()) {
            let p = SpinBathParams::new(d, s, u).unwrap();
            let v = bloch_averaged(&p, &QuadratureConfig::default(), t).unwrap();
            prop_assert!(v.norm() <= 1.0 + 1e-12);
        }
    }
}
