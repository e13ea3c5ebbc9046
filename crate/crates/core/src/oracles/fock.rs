//! Exact propagation of a dephasing model in a truncated Fock space.

use num_complex::Complex64;

use super::expm::propagator;
use crate::dephasing::{
    BathKind, BathSpec, BathState, GeneralDephasingSpec, Mode, TwoLevelDephasingParams,
};
use crate::qstate::{CMatrix, DensityMatrix};
use crate::{GeoPhaseError, Result};

/// Largest joint Hilbert-space dimension the oracle accepts.
pub const MAX_JOINT_DIM: usize = 4096;
pub const MIN_N_MAX: usize = 4;
/// Entrywise change allowed between cutoffs n_max and n_max + 2.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// Photon cutoff applied to every mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockTruncation {
    pub n_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < MIN_N_MAX {
            return Err(GeoPhaseError::InvalidInput(format!(
                "photon cutoff must be >= {MIN_N_MAX}, got {n_max}"
            )));
        }
        Ok(Self { n_max })
    }
}

/// Either form of the dephasing model.
#[derive(Debug, Clone, Copy)]
pub enum DephasingModel<'a> {
    General(&'a GeneralDephasingSpec),
    TwoLevel(&'a TwoLevelDephasingParams),
}

impl<'a> From<&'a GeneralDephasingSpec> for DephasingModel<'a> {
    fn from(s: &'a GeneralDephasingSpec) -> Self {
        Self::General(s)
    }
}

impl<'a> From<&'a TwoLevelDephasingParams> for DephasingModel<'a> {
    fn from(p: &'a TwoLevelDephasingParams) -> Self {
        Self::TwoLevel(p)
    }
}

/// Plain data the joint Hamiltonian is built from.
struct JointModel {
    levels: Vec<f64>,
    /// (coupling eigenvalues of the channel, mode) per bath mode.
    modes: Vec<(Vec<f64>, Mode)>,
    rho0: CMatrix,
}

fn vacuum_modes(bath: &BathSpec) -> Result<&[Mode]> {
    if let BathState::Thermal { .. } = bath.initial {
        return Err(GeoPhaseError::UnsupportedBath(
            "the Fock oracle starts every mode in vacuum".into(),
        ));
    }
    match &bath.kind {
        BathKind::DiscreteModes(m) => Ok(m),
        BathKind::ContinuousFlat { .. } => Err(GeoPhaseError::UnsupportedBath(
            "a continuum cannot be truncated to Fock states".into(),
        )),
    }
}

impl JointModel {
    fn from_model(model: DephasingModel<'_>) -> Result<Self> {
        match model {
            DephasingModel::TwoLevel(p) => {
                p.validate()?;
                // H = (ω/2)σ_z + σ_z Σ g_j (a_j + a_j†) + Σ ω_j a_j† a_j, basis {|e⟩, |g⟩}
                let (c, s) = ((p.theta / 2.0).cos(), (p.theta / 2.0).sin());
                let psi = [Complex64::new(c, 0.0), Complex64::new(s, 0.0)];
                Ok(Self {
                    levels: vec![p.omega / 2.0, -p.omega / 2.0],
                    modes: vacuum_modes(&p.bath)?
                        .iter()
                        .map(|m| (vec![1.0, -1.0], *m))
                        .collect(),
                    rho0: CMatrix::outer(&psi),
                })
            }
            DephasingModel::General(spec) => {
                spec.validate()?;
                let mut modes = Vec::new();
                for (x, bath) in spec.coupling_eigenvalues.iter().zip(&spec.baths) {
                    for m in vacuum_modes(bath)? {
                        modes.push((x.clone(), *m));
                    }
                }
                Ok(Self {
                    levels: spec.levels.clone(),
                    modes,
                    rho0: spec.initial_rho.matrix().clone(),
                })
            }
        }
    }

    fn joint_dim(&self, n_max: usize) -> Option<usize> {
        self.modes
            .iter()
            .try_fold(self.levels.len(), |acc, _| acc.checked_mul(n_max + 1))
    }

    /// Reduced state at t with every mode cut at n_max photons.
    fn reduced(&self, n_max: usize, t: f64) -> Result<(CMatrix, f64)> {
        let d = self.levels.len();
        let joint = self
            .joint_dim(n_max)
            .filter(|&n| n <= MAX_JOINT_DIM)
            .ok_or_else(|| {
                GeoPhaseError::DimensionOverflow(format!(
                    "{d} levels × {} modes at cutoff {n_max} exceed {MAX_JOINT_DIM} states",
                    self.modes.len()
                ))
            })?;
        let nb = joint / d;
        let q = n_max + 1;

        // joint index = level · nb + Σ_j n_j q^j
        let mut h = CMatrix::zeros(joint);
        for lvl in 0..d {
            for b in 0..nb {
                let row = lvl * nb + b;
                let mut occ = b;
                let mut stride = 1;
                let mut diag = self.levels[lvl];
                for (x, mode) in &self.modes {
                    let n = occ % q;
                    occ /= q;
                    diag += mode.frequency * n as f64;
                    if n + 1 < q {
                        let amp = x[lvl] * mode.coupling * ((n + 1) as f64).sqrt();
                        let col = row + stride;
                        h[(row, col)] = Complex64::new(amp, 0.0);
                        h[(col, row)] = Complex64::new(amp, 0.0);
                    }
                    stride *= q;
                }
                h[(row, row)] = Complex64::new(diag, 0.0);
            }
        }
        let u = propagator(&h, t);

        // columns U|m, vac⟩
        let cols: Vec<Vec<Complex64>> = (0..d)
            .map(|m| (0..joint).map(|r| u[(r, m * nb)]).collect())
            .collect();
        let norm_err = cols
            .iter()
            .map(|c| (c.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..d {
                    for n in 0..d {
                        let r = self.rho0[(m, n)];
                        if r == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut tr = Complex64::new(0.0, 0.0);
                        for b in 0..nb {
                            tr += cols[m][i * nb + b] * cols[n][j * nb + b].conj();
                        }
                        acc += r * tr;
                    }
                }
                out[(i, j)] = acc;
            }
        }
        Ok((out, norm_err))
    }
}

/// Reduced state from the truncated joint propagation, with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FockResult {
    pub rho: DensityMatrix,
    /// Cutoff the returned state was computed at.
    pub n_max: usize,
    /// Largest entrywise change against cutoff n_max + 2.
    pub change: f64,
    /// Largest deviation of a propagated joint column from unit norm.
    pub norm_error: f64,
}

/// Propagates at `trunc.n_max` and certifies against n_max + 2.
pub fn fock_propagate<'a>(
    model: impl Into<DephasingModel<'a>>,
    trunc: &FockTruncation,
    t: f64,
) -> Result<FockResult> {
    let joint = JointModel::from_model(model.into())?;
    certify(&joint, FockTruncation::new(trunc.n_max)?.n_max, t)
}

/// Raises the cutoff in steps of two from the minimum until the change
/// criterion holds or the dimension cap is hit.
pub fn fock_propagate_auto<'a>(model: impl Into<DephasingModel<'a>>, t: f64) -> Result<FockResult> {
    let joint = JointModel::from_model(model.into())?;
    let mut n_max = MIN_N_MAX;
    loop {
        match certify(&joint, n_max, t) {
            Err(GeoPhaseError::TruncationNotConverged { .. })
                if joint
                    .joint_dim(n_max + 4)
                    .is_some_and(|n| n <= MAX_JOINT_DIM) =>
            {
                n_max += 2;
            }
            other => return other,
        }
    }
}

fn certify(joint: &JointModel, n_max: usize, t: f64) -> Result<FockResult> {
    if !t.is_finite() {
        return Err(GeoPhaseError::InvalidInput(format!(
            "time must be finite, got {t}"
        )));
    }
    let (rho, norm_error) = joint.reduced(n_max, t)?;
    let (finer, _) = joint.reduced(n_max + 2, t)?;
    let change = rho.max_abs_diff(&finer);
    if change >= TRUNCATION_TOL {
        return Err(GeoPhaseError::TruncationNotConverged { n_max, change });
    }
    Ok(FockResult {
        rho: DensityMatrix::new(finer)?,
        n_max: n_max + 2,
        change,
        norm_error,
    })
}
