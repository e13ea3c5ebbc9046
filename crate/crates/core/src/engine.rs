//! Mixed-state geometric phase along a sampled density-matrix trajectory.
//!
//! For eigenvalues ε_k(t) and eigenvectors |ψ_k(t)⟩ of ρ(t) the phase is
//!
//! ```text
//! Φ = arg Σ_k √(ε_k(0) ε_k(T)) ⟨ψ_k(0)|ψ_k(T)⟩ exp(-∫ ⟨ψ_k|∂_t ψ_k⟩ dt)
//! ```
//!
//! The connection integral is replaced by the normalized Pancharatnam product
//! of consecutive overlaps, which is gauge invariant at any resolution. The
//! grid is refined by halving; successive levels are combined in a Romberg
//! table because the discrete product has an error expansion in even powers
//! of h.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::qstate::{
    eig_hermitian, gauge_fix, inner, DensityMatrix, EigenFrame, EigenTrajectory, Gauge,
};
use crate::{GeoPhaseError, Result, Tolerances};

/// Anything that can produce ρ(t).
pub trait DensitySource: Sync {
    fn density_at(&self, t: f64) -> Result<DensityMatrix>;
}

impl<F> DensitySource for F
where
    F: Fn(f64) -> Result<DensityMatrix> + Sync,
{
    fn density_at(&self, t: f64) -> Result<DensityMatrix> {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// One evaluation at `n_steps` intervals.
    Uniform,
    /// Halve the step until the phase settles.
    AdaptiveHalving,
}

/// Time grid for a phase evaluation; `n_steps` counts intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub scheme: GridScheme,
}

pub const MIN_GRID_STEPS: usize = 8;

impl TrajectoryGrid {
    pub fn new(t_end: f64, n_steps: usize, scheme: GridScheme) -> Result<Self> {
        let grid = Self {
            t_start: 0.0,
            t_end,
            n_steps,
            scheme,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Adaptive grid over [0, t_end] starting from 64 intervals.
    pub fn adaptive(t_end: f64) -> Result<Self> {
        Self::new(t_end, 64, GridScheme::AdaptiveHalving)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) || !self.t_end.is_finite() || !self.t_start.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "grid needs t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.n_steps < MIN_GRID_STEPS {
            return Err(GeoPhaseError::InvalidInput(format!(
                "grid needs at least {MIN_GRID_STEPS} steps, got {}",
                self.n_steps
            )));
        }
        Ok(())
    }

    pub fn time(&self, i: usize, n: usize) -> f64 {
        if i == n {
            self.t_end
        } else {
            self.t_start + (self.t_end - self.t_start) * (i as f64 / n as f64)
        }
    }

    /// Same interval, twice as many steps.
    pub fn doubled(&self) -> Self {
        Self {
            n_steps: self.n_steps * 2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    /// Number of grid levels evaluated.
    pub levels: usize,
    /// Intervals on the finest level.
    pub n_steps: usize,
    /// Change of the phase estimate between the last two levels (rad).
    pub delta: f64,
    pub converged: bool,
    /// Per-level deltas, coarse to fine.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    /// Geometric phase in (-π, π].
    pub phase: f64,
    /// The same phase followed continuously along the path from t = 0.
    pub raw_unwrapped: f64,
    pub weights_initial: Vec<f64>,
    pub weights_final: Vec<f64>,
    /// Modulus of the weighted overlap sum.
    pub visibility: f64,
    pub convergence: Convergence,
}

impl PhaseResult {
    /// visibility · e^{iΦ}
    pub fn complex_sum(&self) -> Complex64 {
        Complex64::from_polar(self.visibility, self.phase)
    }
}

/// Reduces an angle to (-π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// [`wrap_phase`], with values within round-off of -π reported as π so that
/// a phase of exactly π does not flip sign between runs.
pub fn canonical_phase(x: f64) -> f64 {
    let y = wrap_phase(x);
    if y < -PI + PI_SNAP {
        PI
    } else {
        y
    }
}

const PI_SNAP: f64 = 1e-12;

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Π_i ⟨ψ_k(t_i)|ψ_k(t_{i+1})⟩ / |⟨ψ_k(t_i)|ψ_k(t_{i+1})⟩| for one branch,
/// taking the branch ordering of `traj` as given.
pub fn pancharatnam_product(
    traj: &EigenTrajectory,
    branch: usize,
    tol: &Tolerances,
) -> Result<Complex64> {
    if branch >= traj.dim() {
        return Err(GeoPhaseError::InvalidInput(format!(
            "branch {branch} out of range for dimension {}",
            traj.dim()
        )));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for (step, w) in traj.frames.windows(2).enumerate() {
        let ov = inner(&w[0].vectors[branch], &w[1].vectors[branch]);
        let m = ov.norm();
        if m < tol.min_overlap {
            return Err(GeoPhaseError::BranchAmbiguity {
                step: step + 1,
                branch,
                overlap: m,
            });
        }
        acc *= ov / m;
    }
    Ok(acc)
}

/// Single-level evaluation on an already sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate {
    pub sum: Complex64,
    /// Continuously followed arg of the partial sums along the path.
    pub unwrapped: f64,
    pub weights_initial: Vec<f64>,
    pub weights_final: Vec<f64>,
}

/// Evaluates the weighted Pancharatnam sum on one trajectory.
pub fn phase_on_trajectory(traj: EigenTrajectory, tol: &Tolerances) -> Result<LevelEstimate> {
    let traj = match traj.gauge {
        Gauge::ParallelTransport => traj,
        Gauge::Raw => gauge_fix(traj, tol)?,
    };
    let first = &traj.frames[0];
    let last = traj.frames.last().expect("non-empty trajectory");
    if traj
        .frames
        .iter()
        .all(|f| f.values.len() > 1 && f.min_gap < tol.gap && spread(f) < tol.gap)
    {
        return Err(GeoPhaseError::DegenerateState(
            "state is maximally mixed along the whole path".into(),
        ));
    }
    let active: Vec<usize> = (0..traj.dim())
        .filter(|&k| first.values[k] > tol.weight_floor)
        .collect();
    if active.is_empty() {
        return Err(GeoPhaseError::DegenerateState(
            "no branch carries initial weight".into(),
        ));
    }

    // running products and continuous unwrapping of the partial sums
    let mut products = vec![Complex64::new(1.0, 0.0); traj.dim()];
    let mut unwrapped = 0.0;
    let mut prev_arg = 0.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, frame) in traj.frames.iter().enumerate() {
        if i > 0 {
            let before = &traj.frames[i - 1];
            for &k in &active {
                let ov = inner(&before.vectors[k], &frame.vectors[k]);
                let m = ov.norm();
                if m < tol.min_overlap {
                    return Err(GeoPhaseError::BranchAmbiguity {
                        step: i,
                        branch: k,
                        overlap: m,
                    });
                }
                products[k] *= ov / m;
            }
        }
        sum = Complex64::new(0.0, 0.0);
        for &k in &active {
            let w = (first.values[k] * frame.values[k].max(0.0)).sqrt();
            sum += inner(&first.vectors[k], &frame.vectors[k]) * products[k].conj() * w;
        }
        if sum.norm() > 0.0 {
            let a = sum.arg();
            if i > 0 {
                unwrapped += wrap_phase(a - prev_arg);
            } else {
                unwrapped = a;
            }
            prev_arg = a;
        }
    }
    if sum.norm() < tol.weight_floor {
        return Err(GeoPhaseError::DegenerateState(format!(
            "weighted overlap sum vanishes (|sum| = {:e})",
            sum.norm()
        )));
    }
    Ok(LevelEstimate {
        sum,
        unwrapped,
        weights_initial: first.values.clone(),
        weights_final: last.values.clone(),
    })
}

fn spread(f: &EigenFrame) -> f64 {
    let max = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

/// Geometric phase of the trajectory produced by `source`.
pub fn geometric_phase(
    source: &dyn DensitySource,
    grid: &TrajectoryGrid,
    tol: &Tolerances,
) -> Result<PhaseResult> {
    geometric_phase_from_frames(
        &|t: f64| {
            let rho = source.density_at(t)?;
            Ok(eig_hermitian(&rho)?.with_time(t))
        },
        grid,
        tol,
    )
}

/// Same as [`geometric_phase`] but driven by eigen-frames directly, e.g. from
/// an analytic eigensystem.
pub fn geometric_phase_from_frames(
    frame_at: &(dyn Fn(f64) -> Result<EigenFrame> + Sync),
    grid: &TrajectoryGrid,
    tol: &Tolerances,
) -> Result<PhaseResult> {
    grid.validate()?;
    tol.validate()?;
    let max_levels = match grid.scheme {
        GridScheme::Uniform => 1,
        GridScheme::AdaptiveHalving => tol.max_levels,
    };

    let mut n = grid.n_steps;
    let mut frames = sample(frame_at, grid, n, 0, 1)?;
    let mut history = Vec::new();
    // Romberg table; only the previous row is needed
    let mut prev_row: Vec<f64> = Vec::new();
    let mut last_estimate;
    let mut last_phase;
    let mut level = 0;
    loop {
        level += 1;
        let traj = EigenTrajectory::new(frames.clone())?;
        let est = phase_on_trajectory(traj, tol)?;
        let raw = match prev_row.first() {
            Some(&p) => p + wrap_phase(est.sum.arg() - p),
            None => est.sum.arg(),
        };
        let row = romberg_row(&prev_row, raw);
        let estimate = *row.last().expect("non-empty row");
        let delta = match prev_row.last() {
            Some(&e) => (estimate - e).abs(),
            None => f64::INFINITY,
        };
        if delta.is_finite() {
            history.push(delta);
        }
        last_phase = estimate;
        last_estimate = est;
        let done = delta < tol.phase_tol;
        if done || level >= max_levels {
            let converged = done || grid.scheme == GridScheme::Uniform;
            if !converged {
                return Err(GeoPhaseError::NoConvergence {
                    levels: level,
                    delta,
                });
            }
            break;
        }
        prev_row = row;
        // refine: keep existing samples, insert midpoints
        let mids = sample(frame_at, grid, 2 * n, 1, 2)?;
        let mut merged = Vec::with_capacity(2 * n + 1);
        let mut mids = mids.into_iter();
        for (i, f) in frames.into_iter().enumerate() {
            if i > 0 {
                merged.push(mids.next().expect("midpoint count"));
            }
            merged.push(f);
        }
        frames = merged;
        n *= 2;
    }

    let phase = canonical_phase(last_phase);
    let turns = ((last_estimate.unwrapped - phase) / (2.0 * PI)).round();
    let delta = history.last().copied().unwrap_or(0.0);
    Ok(PhaseResult {
        phase,
        raw_unwrapped: phase + 2.0 * PI * turns,
        visibility: last_estimate.sum.norm(),
        weights_initial: last_estimate.weights_initial,
        weights_final: last_estimate.weights_final,
        convergence: Convergence {
            levels: level,
            n_steps: n,
            delta,
            converged: true,
            history,
        },
    })
}

/// Frames at indices first, first+stride, … ≤ n of an n-interval grid.
/// Error terms of the discrete product are even in h, so each column of the
/// table removes the next power of h². Depth is capped to keep round-off from
/// being amplified.
const ROMBERG_DEPTH: usize = 4;

fn romberg_row(prev: &[f64], raw: f64) -> Vec<f64> {
    let mut row = vec![raw];
    for (j, &p) in prev.iter().enumerate().take(ROMBERG_DEPTH - 1) {
        let last = row[j];
        let factor = 4f64.powi(j as i32 + 1) - 1.0;
        row.push(last + (last - p) / factor);
    }
    row
}

fn sample(
    frame_at: &(dyn Fn(f64) -> Result<EigenFrame> + Sync),
    grid: &TrajectoryGrid,
    n: usize,
    first: usize,
    stride: usize,
) -> Result<Vec<EigenFrame>> {
    let idx: Vec<usize> = (first..=n).step_by(stride).collect();
    let eval = |&i: &usize| -> Result<EigenFrame> {
        let t = grid.time(i, n);
        Ok(frame_at(t)?.with_time(t))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        idx.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        idx.iter().map(eval).collect()
    }
}
