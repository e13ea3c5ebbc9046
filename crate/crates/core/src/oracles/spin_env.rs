//! Brute-force references for the spin-environment model.

use num_complex::Complex64;

use super::expm::propagator;
use crate::qstate::{BlochVector, CMatrix};
use crate::{GeoPhaseError, Result};

pub const MAX_ENV_SPINS: usize = 12;

fn pauli() -> [CMatrix; 3] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        CMatrix::from_rows(&[vec![z, one], vec![one, z]]),
        CMatrix::from_rows(&[vec![z, -i], vec![i, z]]),
        CMatrix::from_rows(&[vec![one, z], vec![z, -one]]),
    ]
}

/// Propagates ρ(0) = (I + p0·σ)/2 under Δσ_x + Bσ_z with a dense matrix
/// exponential and reads back Tr(ρσ).
pub fn unitary_fixed_field(delta: f64, b: f64, p0: &BlochVector, t: f64) -> BlochVector {
    let [sx, sy, sz] = pauli();
    let h = &sx.scale(Complex64::new(delta, 0.0)) + &sz.scale(Complex64::new(b, 0.0));
    let u = propagator(&h, t);
    let half = |v: f64| Complex64::new(0.5 * v, 0.0);
    let rho0 = &(&CMatrix::identity(2).scale(half(1.0)) + &sx.scale(half(p0.px)))
        + &(&sy.scale(half(p0.py)) + &sz.scale(half(p0.pz)));
    let rho = &(&u * &rho0) * &u.adjoint();
    let read = |s: &CMatrix| (&rho * s).trace().re;
    BlochVector::new(read(&sx), read(&sy), read(&sz))
}

/// Exact average over all 2^N configurations of N environment spins with
/// equal coupling g, B = g Σ_k m_k, m_k = ±1 equiprobable.
pub fn enumerate_spin_env(
    n: usize,
    g: f64,
    delta: f64,
    p0: &BlochVector,
    t: f64,
) -> Result<BlochVector> {
    if n > MAX_ENV_SPINS {
        return Err(GeoPhaseError::DimensionOverflow(format!(
            "{n} environment spins exceed the enumeration limit of {MAX_ENV_SPINS}"
        )));
    }
    // configurations sharing the number of down spins share the field
    let mut counts = vec![0u64; n + 1];
    for config in 0u32..(1u32 << n) {
        counts[config.count_ones() as usize] += 1;
    }
    let total = (1u64 << n) as f64;
    let mut acc = [0.0; 3];
    for (down, &count) in counts.iter().enumerate() {
        let b = g * (n as f64 - 2.0 * down as f64);
        let v = unitary_fixed_field(delta, b, p0, t);
        for (a, x) in acc.iter_mut().zip(v.components()) {
            *a += count as f64 / total * x;
        }
    }
    Ok(BlochVector::new(acc[0], acc[1], acc[2]))
}
