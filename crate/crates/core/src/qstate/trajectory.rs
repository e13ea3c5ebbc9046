//! Time-ordered eigen-frames and the parallel-transport gauge.

use num_complex::Complex64;

use super::eigen::EigenFrame;
use super::matrix::{inner, norm};
use crate::{GeoPhaseError, Result, Tolerances};

/// Gauge state of an [`EigenTrajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Vectors exactly as returned by the eigensolver.
    Raw,
    /// Branches matched by overlap; consecutive overlaps real and positive.
    ParallelTransport,
}

/// Frames sampled on a strictly increasing time grid.
///
/// After [`gauge_fix`] the k-th entry of every frame belongs to the same
/// branch, so `values` are no longer sorted within a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTrajectory {
    pub frames: Vec<EigenFrame>,
    pub gauge: Gauge,
}

impl EigenTrajectory {
    pub fn new(frames: Vec<EigenFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(GeoPhaseError::InvalidInput("empty trajectory".into()));
        }
        let dim = frames[0].dim();
        if frames.iter().any(|f| f.dim() != dim) {
            return Err(GeoPhaseError::InvalidInput(
                "frames of differing dimension".into(),
            ));
        }
        if frames.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(GeoPhaseError::InvalidInput(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            frames,
            gauge: Gauge::Raw,
        })
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Matches branches between consecutive frames by maximal overlap and
/// rephases every vector so ⟨ψ_k(t_i)|ψ_k(t_{i+1})⟩ is real and positive.
pub fn gauge_fix(traj: EigenTrajectory, tol: &Tolerances) -> Result<EigenTrajectory> {
    let mut frames = traj.frames;
    for i in 1..frames.len() {
        let (done, rest) = frames.split_at_mut(i);
        let prev = &done[i - 1];
        let cur = &mut rest[0];
        align_degenerate_clusters(prev, cur, tol.gap);
        let order = match_branches(prev, cur, i, tol.min_overlap)?;
        let values: Vec<f64> = order.iter().map(|&l| cur.values[l]).collect();
        let mut vectors: Vec<Vec<Complex64>> =
            order.iter().map(|&l| cur.vectors[l].clone()).collect();
        for (k, v) in vectors.iter_mut().enumerate() {
            let ov = inner(&prev.vectors[k], v);
            let phase = ov.conj() / ov.norm();
            for z in v.iter_mut() {
                *z *= phase;
            }
        }
        cur.values = values;
        cur.vectors = vectors;
    }
    Ok(EigenTrajectory {
        frames,
        gauge: Gauge::ParallelTransport,
    })
}

/// Greedy assignment on |⟨prev_k|cur_l⟩|: repeatedly take the largest
/// remaining overlap. Returns `order[k] = l`.
fn match_branches(
    prev: &EigenFrame,
    cur: &EigenFrame,
    step: usize,
    min_overlap: f64,
) -> Result<Vec<usize>> {
    let n = prev.dim();
    let mut overlaps = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            overlaps.push((inner(&prev.vectors[k], &cur.vectors[l]).norm(), k, l));
        }
    }
    overlaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut order = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (ov, k, l) in overlaps {
        if order[k] != usize::MAX || taken[l] {
            continue;
        }
        if ov < min_overlap {
            return Err(GeoPhaseError::BranchAmbiguity {
                step,
                branch: k,
                overlap: ov,
            });
        }
        order[k] = l;
        taken[l] = true;
    }
    Ok(order)
}

/// Inside a cluster of (near-)degenerate eigenvalues the eigensolver's basis
/// is arbitrary; replace it with the projections of the previous frame's
/// vectors onto the cluster, orthonormalized in order of projected weight.
fn align_degenerate_clusters(prev: &EigenFrame, cur: &mut EigenFrame, gap_tol: f64) {
    if !cur.degenerate {
        return;
    }
    let n = cur.dim();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| cur.values[b].total_cmp(&cur.values[a]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cur.values[idx[end - 1]] - cur.values[idx[end]]).abs() < gap_tol {
            end += 1;
        }
        if end - start > 1 {
            let cluster: Vec<usize> = idx[start..end].to_vec();
            realign_cluster(prev, cur, &cluster);
        }
        start = end;
    }
}

fn realign_cluster(prev: &EigenFrame, cur: &mut EigenFrame, cluster: &[usize]) {
    let span: Vec<Vec<Complex64>> = cluster.iter().map(|&l| cur.vectors[l].clone()).collect();
    let project = |v: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for b in &span {
            let c = inner(b, v);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    };
    let mut candidates: Vec<(f64, Vec<Complex64>)> = prev
        .vectors
        .iter()
        .map(|v| {
            let p = project(v);
            (norm(&p), p)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(cluster.len());
    for (_, mut v) in candidates
        .into_iter()
        .chain(span.iter().map(|b| (1.0, b.clone())))
    {
        if basis.len() == cluster.len() {
            break;
        }
        for b in &basis {
            let c = inner(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            basis.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    if basis.len() == cluster.len() {
        for (&l, b) in cluster.iter().zip(basis) {
            cur.vectors[l] = b;
        }
    }
}
