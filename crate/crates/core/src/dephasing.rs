//! Exact reduced dynamics for systems coupled dephasingly to boson baths.
//!
//! When the system Hamiltonian commutes with the coupling, populations in the
//! energy basis are frozen and each coherence ρ_mn picks up a factor F_mn(t)
//! from the bath. For a vacuum bath these factors are closed-form.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::engine::{geometric_phase, geometric_phase_from_frames, PhaseResult, TrajectoryGrid};
use crate::qstate::{eig_hermitian, eig_hermitian_matrix, CMatrix, DensityMatrix, EigenFrame};
use crate::{GeoPhaseError, Result, Tolerances};

/// One bath oscillator: coupling g_j and frequency ω_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub coupling: f64,
    pub frequency: f64,
}

impl Mode {
    pub const fn new(coupling: f64, frequency: f64) -> Self {
        Self {
            coupling,
            frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathKind {
    DiscreteModes(Vec<Mode>),
    /// Constant spectral density `epsilon` with a common coupling `g`.
    ContinuousFlat {
        epsilon: f64,
        g: f64,
    },
}

/// Initial state of the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathState {
    Vacuum,
    /// Accepted by the type so callers get a clear error; no closed form
    /// is implemented for it.
    Thermal {
        temperature: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub kind: BathKind,
    pub initial: BathState,
}

impl BathSpec {
    pub fn discrete(modes: Vec<Mode>) -> Self {
        Self {
            kind: BathKind::DiscreteModes(modes),
            initial: BathState::Vacuum,
        }
    }

    pub fn flat(epsilon: f64, g: f64) -> Self {
        Self {
            kind: BathKind::ContinuousFlat { epsilon, g },
            initial: BathState::Vacuum,
        }
    }

    /// Flat bath with a prescribed decay rate γ (ε = γ/2π, g = 1).
    pub fn flat_with_rate(gamma: f64) -> Self {
        Self::flat(gamma / (2.0 * PI), 1.0)
    }

    /// Closed system.
    pub fn none() -> Self {
        Self::discrete(Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            BathKind::DiscreteModes(modes) => {
                for m in modes {
                    if !(m.frequency > 0.0) || !m.coupling.is_finite() || !m.frequency.is_finite() {
                        return Err(GeoPhaseError::InvalidInput(format!(
                            "bath mode needs finite coupling and frequency > 0, got {m:?}"
                        )));
                    }
                }
            }
            BathKind::ContinuousFlat { epsilon, g } => {
                if !(*epsilon >= 0.0) || !epsilon.is_finite() || !g.is_finite() {
                    return Err(GeoPhaseError::InvalidInput(format!(
                        "flat bath needs a density of states >= 0 (a rate >= 0), got epsilon = {epsilon}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// γ = 2π ε |g|² for a flat bath; `None` for discrete modes.
    pub fn rate(&self) -> Option<f64> {
        match self.kind {
            BathKind::ContinuousFlat { epsilon, g } => Some(2.0 * PI * epsilon * g * g),
            BathKind::DiscreteModes(_) => None,
        }
    }
}

/// η_j(t) = 4 |g_j/ω_j|² (1 - cos ω_j t)
pub fn eta(mode: &Mode, t: f64) -> f64 {
    let r = mode.coupling / mode.frequency;
    4.0 * r * r * (1.0 - (mode.frequency * t).cos())
}

/// F(t) = e^{-iωt} exp(-Σ_j η_j(t)) for discrete modes.
pub fn kernel_discrete(modes: &[Mode], omega: f64, t: f64) -> Complex64 {
    let decay: f64 = modes.iter().map(|m| eta(m, t)).sum();
    Complex64::from_polar((-decay).exp(), -omega * t)
}

/// F(t) = e^{-iωt} e^{-γt}, γ = 2π ε g².
pub fn kernel_flat(epsilon: f64, g: f64, omega: f64, t: f64) -> Complex64 {
    let gamma = 2.0 * PI * epsilon * g * g;
    Complex64::from_polar((-gamma * t).exp(), -omega * t)
}

/// The dephasing factor F(t) of a two-level system with splitting ω.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingKernel {
    pub bath: BathSpec,
    pub omega: f64,
}

impl DephasingKernel {
    pub fn at(&self, t: f64) -> Complex64 {
        match &self.bath.kind {
            BathKind::DiscreteModes(modes) => kernel_discrete(modes, self.omega, t),
            BathKind::ContinuousFlat { epsilon, g } => kernel_flat(*epsilon, *g, self.omega, t),
        }
    }

    /// Per-mode η_j(t); empty for a flat bath.
    pub fn eta_breakdown(&self, t: f64) -> Vec<f64> {
        match &self.bath.kind {
            BathKind::DiscreteModes(modes) => modes.iter().map(|m| eta(m, t)).collect(),
            BathKind::ContinuousFlat { .. } => Vec::new(),
        }
    }
}

/// Two-level system with splitting ω prepared in cos(θ/2)|e⟩ + sin(θ/2)|g⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelDephasingParams {
    pub omega: f64,
    pub theta: f64,
    pub bath: BathSpec,
    /// Horizon; `None` means one free period 2π/ω.
    pub horizon: Option<f64>,
}

impl TwoLevelDephasingParams {
    pub fn new(omega: f64, theta: f64, bath: BathSpec) -> Result<Self> {
        let p = Self {
            omega,
            theta,
            bath,
            horizon: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Flat bath with decay rate γ.
    pub fn with_rate(omega: f64, theta: f64, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "dephasing rate must be finite and >= 0, got {gamma}"
            )));
        }
        Self::new(omega, theta, BathSpec::flat_with_rate(gamma))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "omega must be > 0, got {}",
                self.omega
            )));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(GeoPhaseError::InvalidInput(format!(
                "theta must lie in [0, π], got {}",
                self.theta
            )));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(GeoPhaseError::InvalidInput(format!(
                    "horizon must be > 0, got {h}"
                )));
            }
        }
        self.bath.validate()
    }

    pub fn period(&self) -> f64 {
        self.horizon.unwrap_or(2.0 * PI / self.omega)
    }

    pub fn kernel(&self) -> DephasingKernel {
        DephasingKernel {
            bath: self.bath.clone(),
            omega: self.omega,
        }
    }

    /// The same model expressed in the general N-level form.
    ///
    /// The coupling operator is σ_z (eigenvalues ±1), the normalization under
    /// which the general kernel reproduces η_j = 4|g_j/ω_j|²(1 - cos ω_j t).
    pub fn to_general(&self) -> Result<GeneralDephasingSpec> {
        let (c, s) = ((self.theta / 2.0).cos(), (self.theta / 2.0).sin());
        GeneralDephasingSpec::new(
            vec![self.omega / 2.0, -self.omega / 2.0],
            vec![vec![1.0, -1.0]],
            vec![self.bath.clone()],
            DensityMatrix::pure(&[Complex64::new(c, 0.0), Complex64::new(s, 0.0)])?,
        )
    }
}

/// Reduced state in the {|e⟩, |g⟩} basis.
pub fn rho_two_level(params: &TwoLevelDephasingParams, t: f64) -> Result<DensityMatrix> {
    let f = params.kernel().at(t);
    let (c, s) = ((params.theta / 2.0).cos(), (params.theta / 2.0).sin());
    let off = f * (0.5 * params.theta.sin());
    DensityMatrix::from_model(CMatrix::from_rows(&[
        vec![Complex64::new(c * c, 0.0), off],
        vec![off.conj(), Complex64::new(s * s, 0.0)],
    ]))
}

const ANALYTIC_DENOM_FLOOR: f64 = 1e-14;

/// Closed-form eigenvalues ε_± and eigenvectors cosΘ_±|e⟩ + sinΘ_±|g⟩.
pub fn analytic_eigensystem(params: &TwoLevelDephasingParams, t: f64) -> Result<EigenFrame> {
    let f = params.kernel().at(t);
    let theta = params.theta;
    if theta.cos().abs() < 1e-15 && f.norm() < ANALYTIC_DENOM_FLOOR {
        return Err(GeoPhaseError::DegenerateState(format!(
            "ρ is maximally mixed at t = {t}"
        )));
    }
    let root = (theta.cos().powi(2) + theta.sin().powi(2) * f.norm_sqr()).sqrt();
    let values = [0.5 * (1.0 + root), 0.5 * (1.0 - root)];
    let cos_half_sq = (theta / 2.0).cos().powi(2);
    let mut vectors = Vec::with_capacity(2);
    for &eps in &values {
        let shift = 2.0 * (eps - cos_half_sq);
        let denom = (theta.sin().powi(2) * f.norm_sqr() + shift * shift).sqrt();
        if denom <= ANALYTIC_DENOM_FLOOR {
            // diagonal limit; defer to the numeric eigensolver
            return Ok(eig_hermitian(&rho_two_level(params, t)?)?.with_time(t));
        }
        vectors.push(vec![
            f * (theta.sin() / denom),
            Complex64::new(shift / denom, 0.0),
        ]);
    }
    Ok(EigenFrame::from_parts(values.to_vec(), vectors, Tolerances::default().gap).with_time(t))
}

/// Geometric phase of the two-level model over its horizon.
pub fn two_level_phase(
    params: &TwoLevelDephasingParams,
    n_steps: usize,
    tol: &Tolerances,
) -> Result<PhaseResult> {
    params.validate()?;
    let grid = TrajectoryGrid::new(
        params.period(),
        n_steps,
        crate::engine::GridScheme::AdaptiveHalving,
    )?;
    geometric_phase(&|t| rho_two_level(params, t), &grid, tol)
}

/// Same phase driven by the closed-form eigensystem.
pub fn two_level_phase_analytic(
    params: &TwoLevelDephasingParams,
    n_steps: usize,
    tol: &Tolerances,
) -> Result<PhaseResult> {
    params.validate()?;
    let grid = TrajectoryGrid::new(
        params.period(),
        n_steps,
        crate::engine::GridScheme::AdaptiveHalving,
    )?;
    geometric_phase_from_frames(&|t| analytic_eigensystem(params, t), &grid, tol)
}

/// N-level system with commuting system and coupling operators.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDephasingSpec {
    /// Energies E_m.
    pub levels: Vec<f64>,
    /// `coupling_eigenvalues[c][m]`: eigenvalue of coupling operator X_c on |E_m⟩.
    pub coupling_eigenvalues: Vec<Vec<f64>>,
    /// One bath per coupling channel c.
    pub baths: Vec<BathSpec>,
    /// Initial state in the {|E_m⟩} basis.
    pub initial_rho: DensityMatrix,
}

impl GeneralDephasingSpec {
    pub fn new(
        levels: Vec<f64>,
        coupling_eigenvalues: Vec<Vec<f64>>,
        baths: Vec<BathSpec>,
        initial_rho: DensityMatrix,
    ) -> Result<Self> {
        let spec = Self {
            levels,
            coupling_eigenvalues,
            baths,
            initial_rho,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.levels.len();
        if d == 0 || self.initial_rho.dim() != d {
            return Err(GeoPhaseError::DimensionMismatch {
                expected: d,
                got: self.initial_rho.dim(),
            });
        }
        if self.coupling_eigenvalues.len() != self.baths.len() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "{} coupling channels but {} baths",
                self.coupling_eigenvalues.len(),
                self.baths.len()
            )));
        }
        for row in &self.coupling_eigenvalues {
            if row.len() != d {
                return Err(GeoPhaseError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|e| !e.is_finite()) {
                return Err(GeoPhaseError::InvalidInput(
                    "non-finite coupling eigenvalue".into(),
                ));
            }
        }
        for b in &self.baths {
            b.validate()?;
        }
        Ok(())
    }

    /// F_mn(t) = Tr_B[U_m(t) ρ_B U_n(t)†] for vacuum baths.
    pub fn factor(&self, m: usize, n: usize, t: f64) -> Result<Complex64> {
        let mut log_f = Complex64::new(0.0, 0.0);
        for (channel, bath) in self.coupling_eigenvalues.iter().zip(&self.baths) {
            if let BathState::Thermal { .. } = bath.initial {
                return Err(GeoPhaseError::UnsupportedBath(
                    "only vacuum initial bath states have a closed form".into(),
                ));
            }
            let (em, en) = (channel[m], channel[n]);
            let diff_sq = (em - en).powi(2);
            match &bath.kind {
                BathKind::DiscreteModes(modes) => {
                    for mode in modes {
                        let r2 = (mode.coupling / mode.frequency).powi(2);
                        let wt = mode.frequency * t;
                        log_f += Complex64::new(
                            -r2 * diff_sq * (1.0 - wt.cos()),
                            r2 * (em * em - en * en) * (wt - wt.sin()),
                        );
                    }
                }
                BathKind::ContinuousFlat { .. } => {
                    // the Lamb-type phase of a flat continuum is UV divergent and
                    // is taken as absorbed into the level energies
                    let gamma = bath.rate().unwrap_or(0.0);
                    log_f += Complex64::new(-gamma * diff_sq * t / 4.0, 0.0);
                }
            }
        }
        Ok(log_f.exp())
    }
}

/// ρ_mn(t) = ρ_mn(0) e^{-i(E_m - E_n)t} F_mn(t).
pub fn rho_general(spec: &GeneralDephasingSpec, t: f64) -> Result<DensityMatrix> {
    let d = spec.dim();
    let mut out = CMatrix::zeros(d);
    for m in 0..d {
        for n in 0..d {
            let f = if m == n {
                Complex64::new(1.0, 0.0)
            } else {
                spec.factor(m, n, t)?
            };
            let free = Complex64::from_polar(1.0, -(spec.levels[m] - spec.levels[n]) * t);
            out[(m, n)] = spec.initial_rho.get(m, n) * free * f;
        }
    }
    DensityMatrix::from_model(out)
}

/// Common eigenbasis |β⟩ of commuting coupling matrices g^α and the
/// diagonal couplings g_β^α.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBasis {
    pub basis: Vec<Vec<Complex64>>,
    /// `constants[β][α]` = ⟨β|g^α|β⟩.
    pub constants: Vec<Vec<f64>>,
}

pub const COMMUTATOR_TOL: f64 = 1e-10;

/// Simultaneously diagonalizes pairwise-commuting Hermitian matrices.
pub fn diagonalize_coupling_basis(couplings: &[CMatrix]) -> Result<CouplingBasis> {
    let Some(first) = couplings.first() else {
        return Err(GeoPhaseError::InvalidInput("no coupling matrices".into()));
    };
    let d = first.dim();
    let tol = Tolerances::default();
    for g in couplings {
        if g.dim() != d {
            return Err(GeoPhaseError::DimensionMismatch {
                expected: d,
                got: g.dim(),
            });
        }
        let deviation = g.hermiticity_deviation();
        if deviation > tol.herm * g.frobenius_norm().max(1.0) {
            return Err(GeoPhaseError::NonHermitian { deviation });
        }
    }
    let scale = couplings
        .iter()
        .map(CMatrix::frobenius_norm)
        .fold(1.0, f64::max);
    let mut residual: f64 = 0.0;
    for (i, a) in couplings.iter().enumerate() {
        for b in &couplings[i + 1..] {
            residual = residual.max(a.commutator(b).frobenius_norm());
        }
    }
    if residual > COMMUTATOR_TOL * scale * scale {
        return Err(GeoPhaseError::NotSimultaneouslyDiagonalizable { residual });
    }

    // refine clusters of shared eigenvalues one matrix at a time
    let mut clusters: Vec<Vec<Vec<Complex64>>> = vec![(0..d)
        .map(|i| {
            let mut e = vec![Complex64::new(0.0, 0.0); d];
            e[i] = Complex64::new(1.0, 0.0);
            e
        })
        .collect()];
    let split_tol = 1e-8 * scale;
    for g in couplings {
        let mut next = Vec::new();
        for cluster in clusters {
            if cluster.len() == 1 {
                next.push(cluster);
                continue;
            }
            let k = cluster.len();
            let mut restricted = CMatrix::zeros(k);
            let images: Vec<Vec<Complex64>> = cluster.iter().map(|b| g.mul_vec(b)).collect();
            for i in 0..k {
                for j in 0..k {
                    restricted[(i, j)] = crate::qstate::inner(&cluster[i], &images[j]);
                }
            }
            let frame = eig_hermitian_matrix(&restricted, &tol)?;
            let rotated: Vec<Vec<Complex64>> = frame
                .vectors
                .iter()
                .map(|u| {
                    let mut v = vec![Complex64::new(0.0, 0.0); d];
                    for (coef, b) in u.iter().zip(&cluster) {
                        for (vi, bi) in v.iter_mut().zip(b) {
                            *vi += coef * bi;
                        }
                    }
                    v
                })
                .collect();
            let mut current = vec![rotated[0].clone()];
            for (i, vec) in rotated.iter().enumerate().skip(1) {
                if (frame.values[i - 1] - frame.values[i]).abs() >= split_tol {
                    next.push(std::mem::take(&mut current));
                }
                current.push(vec.clone());
            }
            next.push(current);
        }
        clusters = next;
    }
    let basis: Vec<Vec<Complex64>> = clusters.into_iter().flatten().collect();
    let constants = basis
        .iter()
        .map(|b| {
            couplings
                .iter()
                .map(|g| crate::qstate::inner(b, &g.mul_vec(b)).re)
                .collect()
        })
        .collect();
    Ok(CouplingBasis { basis, constants })
}

/// |γ_p ⟨E_n|Y_p|E_m⟩|² / |E_m - E_n|²: small values mean a perturbation
/// that breaks [H_S, H_I] = 0 can be neglected.
pub fn validity_estimate(gamma_p: f64, matrix_element: f64, gap: f64) -> Result<f64> {
    if gap == 0.0 {
        return Err(GeoPhaseError::ZeroGap);
    }
    if !(gap > 0.0) {
        return Err(GeoPhaseError::InvalidInput(format!(
            "gap must be positive, got {gap}"
        )));
    }
    Ok((gamma_p * matrix_element).powi(2) / (gap * gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::phase_distance;
    use crate::qstate::inner;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn discrete_kernel_values() {
        let single = [Mode::new(0.3, 1.0)];
        assert_eq!(kernel_discrete(&single, 1.0, 0.0), c(1.0, 0.0));
        // full recurrence after one mode period
        let f = kernel_discrete(&single, 1.0, 2.0 * PI);
        assert!((f.norm() - 1.0).abs() < 1e-15);
        // 4·0.09·(1 - cos π) = 0.72
        let f = kernel_discrete(&single, 1.0, PI);
        assert!((f.norm() - (-0.72f64).exp()).abs() < 1e-15);
        assert!((f - c(-(-0.72f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn flat_kernel_values() {
        assert_eq!(kernel_flat(0.3, 0.7, 2.0, 0.0), c(1.0, 0.0));
        let closed = kernel_flat(0.0, 1.0, 2.0, 0.4);
        assert!((closed - Complex64::from_polar(1.0, -0.8)).norm() < 1e-15);
        let f = kernel_flat(1.0 / (2.0 * PI), 1.0, 3.0, 1.0);
        assert!((f.norm() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn two_level_state_examples() {
        let theta = 1.1;
        let p = TwoLevelDephasingParams::with_rate(1.0, theta, 0.4).unwrap();
        let rho0 = rho_two_level(&p, 0.0).unwrap();
        let psi = [c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)];
        assert!(rho0.matrix().max_abs_diff(&CMatrix::outer(&psi)) < 1e-15);

        let strong = TwoLevelDephasingParams::with_rate(1.0, theta, 1e4).unwrap();
        let rho = rho_two_level(&strong, 0.5).unwrap();
        let diag = CMatrix::diagonal(&[
            c((theta / 2.0).cos().powi(2), 0.0),
            c((theta / 2.0).sin().powi(2), 0.0),
        ]);
        assert!(rho.matrix().max_abs_diff(&diag) < 1e-15);

        let closed = TwoLevelDephasingParams::with_rate(1.0, PI / 2.0, 0.0).unwrap();
        let rho = rho_two_level(&closed, PI).unwrap();
        assert!((rho.get(0, 1) - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn populations_are_frozen() {
        let p = TwoLevelDephasingParams::new(
            1.3,
            0.7,
            BathSpec::discrete(vec![Mode::new(0.2, 0.5), Mode::new(0.4, 1.7)]),
        )
        .unwrap();
        let rho0 = rho_two_level(&p, 0.0).unwrap();
        for i in 0..50 {
            let rho = rho_two_level(&p, 0.37 * i as f64).unwrap();
            assert!((rho.get(0, 0) - rho0.get(0, 0)).norm() < 1e-14);
            assert!((rho.get(1, 1) - rho0.get(1, 1)).norm() < 1e-14);
        }
    }

    #[test]
    fn purity_decreases_under_flat_bath() {
        let p = TwoLevelDephasingParams::with_rate(1.0, 1.2, 0.3).unwrap();
        let mut last = 1.0 + 1e-15;
        for i in 0..200 {
            let pur = rho_two_level(&p, 0.05 * i as f64).unwrap().purity();
            assert!(pur <= last);
            last = pur;
        }
    }

    #[test]
    fn single_mode_recurrence_restores_purity() {
        let p =
            TwoLevelDephasingParams::new(1.0, 0.9, BathSpec::discrete(vec![Mode::new(0.4, 1.5)]))
                .unwrap();
        let t = 2.0 * PI / 1.5;
        assert!((rho_two_level(&p, t).unwrap().purity() - 1.0).abs() < 1e-14);
        assert!(rho_two_level(&p, t / 2.0).unwrap().purity() < 0.99);
    }

    #[test]
    fn analytic_eigensystem_closed_system() {
        let theta = 0.8;
        let p = TwoLevelDephasingParams::with_rate(2.0, theta, 0.0).unwrap();
        for &t in &[0.0, 0.3, 1.7] {
            let f = analytic_eigensystem(&p, t).unwrap();
            assert!((f.values[0] - 1.0).abs() < 1e-15 && f.values[1].abs() < 1e-15);
            let want = Complex64::from_polar((theta / 2.0).cos(), -2.0 * t);
            assert!((f.vectors[0][0] - want).norm() < 1e-14);
            assert!((f.vectors[0][1] - c((theta / 2.0).sin(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn analytic_eigensystem_pole_state_and_hand_value() {
        let p = TwoLevelDephasingParams::with_rate(1.0, 0.0, 0.5).unwrap();
        let f = analytic_eigensystem(&p, 0.7).unwrap();
        assert!((f.values[0] - 1.0).abs() < 1e-15);
        assert!((f.vectors[0][0].norm() - 1.0).abs() < 1e-15);

        // θ = π/3 with |F| = 1/2: ε+ = ½(1 + √(7/16))
        let t = (2.0f64).ln();
        let p = TwoLevelDephasingParams::with_rate(1.0, PI / 3.0, 1.0).unwrap();
        let f = analytic_eigensystem(&p, t).unwrap();
        assert!((f.values[0] - 0.5 * (1.0 + (7.0f64 / 16.0).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn analytic_matches_numeric_up_to_gauge() {
        let p =
            TwoLevelDephasingParams::new(1.0, 2.1, BathSpec::discrete(vec![Mode::new(0.3, 0.8)]))
                .unwrap();
        for i in 0..40 {
            let t = 0.21 * i as f64;
            let a = analytic_eigensystem(&p, t).unwrap();
            let n = eig_hermitian(&rho_two_level(&p, t).unwrap()).unwrap();
            for k in 0..2 {
                assert!((a.values[k] - n.values[k]).abs() < 1e-12);
                assert!((inner(&a.vectors[k], &n.vectors[k]).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_degenerate_point_is_reported() {
        let p = TwoLevelDephasingParams::with_rate(1.0, PI / 2.0, 100.0).unwrap();
        assert!(matches!(
            analytic_eigensystem(&p, 1.0),
            Err(GeoPhaseError::DegenerateState(_))
        ));
    }

    #[test]
    fn general_spec_reproduces_two_level_model() {
        let baths = [
            BathSpec::discrete(vec![Mode::new(0.3, 1.0), Mode::new(0.1, 2.5)]),
            BathSpec::flat_with_rate(0.2),
            BathSpec::none(),
        ];
        for bath in baths {
            let p = TwoLevelDephasingParams::new(1.4, 1.0, bath).unwrap();
            let g = p.to_general().unwrap();
            for i in 0..30 {
                let t = 0.3 * i as f64;
                let a = rho_two_level(&p, t).unwrap();
                let b = rho_general(&g, t).unwrap();
                assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn general_spec_keeps_populations() {
        let rho0 = DensityMatrix::pure(&[c(0.5, 0.0), c(0.5, 0.2), c(0.3, -0.4)]).unwrap();
        let spec = GeneralDephasingSpec::new(
            vec![1.0, 0.0, -0.7],
            vec![vec![0.5, -0.2, 1.0]],
            vec![BathSpec::discrete(vec![Mode::new(0.4, 1.1)])],
            rho0.clone(),
        )
        .unwrap();
        for i in 0..20 {
            let rho = rho_general(&spec, 0.4 * i as f64).unwrap();
            for m in 0..3 {
                assert!((rho.get(m, m) - rho0.get(m, m)).norm() < 1e-15);
            }
            assert!((spec.factor(1, 1, 0.4 * i as f64).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn thermal_bath_is_unsupported() {
        let mut bath = BathSpec::discrete(vec![Mode::new(0.1, 1.0)]);
        bath.initial = BathState::Thermal { temperature: 1.0 };
        let spec = GeneralDephasingSpec::new(
            vec![0.5, -0.5],
            vec![vec![1.0, -1.0]],
            vec![bath],
            DensityMatrix::maximally_mixed(2),
        )
        .unwrap();
        assert!(matches!(
            rho_general(&spec, 1.0),
            Err(GeoPhaseError::UnsupportedBath(_))
        ));
    }

    #[test]
    fn coupling_basis_single_and_diagonal() {
        let g = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let b = diagonalize_coupling_basis(std::slice::from_ref(&g)).unwrap();
        let mut consts: Vec<f64> = b.constants.iter().map(|r| r[0]).collect();
        consts.sort_by(f64::total_cmp);
        assert!((consts[0] + 1.0).abs() < 1e-14 && (consts[1] - 1.0).abs() < 1e-14);

        let d1 = CMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let d2 = CMatrix::diagonal(&[c(0.5, 0.0), c(0.5, 0.0), c(-1.0, 0.0)]);
        let b = diagonalize_coupling_basis(&[d1, d2]).unwrap();
        for v in &b.basis {
            let big = v.iter().filter(|z| z.norm() > 1e-12).count();
            assert_eq!(big, 1);
        }
    }

    #[test]
    fn non_commuting_couplings_rejected() {
        let sx = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let sz = CMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(
            diagonalize_coupling_basis(&[sx, sz]),
            Err(GeoPhaseError::NotSimultaneouslyDiagonalizable { .. })
        ));
    }

    #[test]
    fn validity_estimate_examples() {
        assert_eq!(validity_estimate(0.3, 0.0, 1.0).unwrap(), 0.0);
        assert!((validity_estimate(0.1, 0.2, 2.0).unwrap() - 1e-4).abs() < 1e-18);
        assert_eq!(validity_estimate(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(
            validity_estimate(1.0, 1.0, 0.0),
            Err(GeoPhaseError::ZeroGap)
        );
    }

    #[test]
    fn closed_system_phase() {
        let p = TwoLevelDephasingParams::with_rate(1.0, PI / 2.0, 0.0).unwrap();
        let r = two_level_phase(&p, 64, &Tolerances::default()).unwrap();
        assert!(phase_distance(r.phase, PI) < 1e-9);
        let p = TwoLevelDephasingParams::with_rate(1.0, 0.0, 0.7).unwrap();
        let r = two_level_phase(&p, 64, &Tolerances::default()).unwrap();
        assert!(phase_distance(r.phase, 0.0) < 1e-12);
    }
}
