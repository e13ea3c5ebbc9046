//! Expectations over a standard normal variable z ~ N(0, 1).
//!
//! Rules are stored folded onto z ≥ 0: E[f] ≈ w₀ f(0) + Σ wᵢ (f(zᵢ) + f(−zᵢ)).
//! Evaluating ± pairs together makes odd parts of f cancel exactly.

use crate::{GeoPhaseError, Result};

/// Half-width of the panel rule in units of the standard deviation.
/// The normal tail beyond it carries mass below 3e-19.
pub const PANEL_HALF_WIDTH: f64 = 9.0;
/// Gauss–Legendre points per panel.
pub const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricRule {
    /// Weight of the node at z = 0 (zero for rules without a centre node).
    pub center: f64,
    /// (zᵢ > 0, wᵢ) pairs; each node stands for ±zᵢ.
    pub pairs: Vec<(f64, f64)>,
}

impl SymmetricRule {
    /// Number of distinct evaluation points.
    pub fn len(&self) -> usize {
        2 * self.pairs.len() + usize::from(self.center != 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight_sum(&self) -> f64 {
        self.center + 2.0 * self.pairs.iter().map(|p| p.1).sum::<f64>()
    }

    /// Nodes and weights unfolded onto the real line, ascending in z.
    pub fn unfolded(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.pairs.iter().rev().map(|&(z, w)| (-z, w)).collect();
        if self.center != 0.0 {
            out.push((0.0, self.center));
        }
        out.extend(self.pairs.iter().copied());
        out
    }
}

/// n-point Gauss–Hermite rule for the standard normal weight
/// (probabilists' Hermite polynomials), weights normalized to sum to 1.
///
/// Nodes are eigenvalues of the Jacobi matrix (Golub–Welsch), polished by
/// Newton steps on the orthonormal recurrence; weights come from the
/// Christoffel function, which stays accurate for the tiny outer weights.
pub fn gauss_hermite(n: usize) -> Result<SymmetricRule> {
    if n < 1 {
        return Err(GeoPhaseError::InvalidInput(
            "Gauss–Hermite needs n >= 1".into(),
        ));
    }
    let mut diag = vec![0.0; n];
    let mut off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    off.push(0.0);
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);

    let mut pairs = Vec::with_capacity(n / 2);
    let mut center = 0.0;
    for &z0 in diag.iter().skip(n / 2) {
        let mut z = if n % 2 == 1 && z0.abs() < 1e-8 {
            0.0
        } else {
            z0
        };
        if z != 0.0 {
            for _ in 0..3 {
                let (pn, pn1) = hermite_pair(n, z);
                z -= pn / ((n as f64).sqrt() * pn1);
            }
        }
        let w = christoffel_weight(n, z);
        if z == 0.0 {
            center = w;
        } else {
            pairs.push((z, w));
        }
    }
    let rule = SymmetricRule { center, pairs };
    let total = rule.weight_sum();
    Ok(SymmetricRule {
        center: rule.center / total,
        pairs: rule
            .pairs
            .into_iter()
            .map(|(z, w)| (z, w / total))
            .collect(),
    })
}

/// Orthonormal p̃_n(z), p̃_{n-1}(z) for the N(0,1) weight, with a common
/// rescaling so the ratio is exact even where the values overflow.
fn hermite_pair(n: usize, z: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = (z * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
        }
    }
    (cur, prev)
}

/// 1 / Σ_{k<n} p̃_k(z)², evaluated in scaled arithmetic.
fn christoffel_weight(n: usize, z: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = 1.0;
    let mut log_scale = 0.0;
    for k in 0..n - 1 {
        let next = (z * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        sum += cur * cur;
        if cur.abs() > 1e100 {
            prev *= 1e-100;
            cur *= 1e-100;
            sum *= 1e-200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
    }
    (-log_scale - sum.ln()).exp()
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson
/// shifts. `off[i]` couples rows i and i+1; on return `diag` holds the
/// eigenvalues (unsorted).
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(GeoPhaseError::NoConvergence {
                    levels: iter,
                    delta: off[l].abs(),
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// n-point Gauss–Legendre rule on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

/// Composite Gauss–Legendre rule for the N(0,1) density on
/// [-PANEL_HALF_WIDTH, PANEL_HALF_WIDTH] with `panels_per_side` equal panels on
/// each half-line. Suited to integrands oscillating faster than a
/// Gauss–Hermite rule of affordable size can resolve.
pub fn normal_panels(panels_per_side: usize) -> Result<SymmetricRule> {
    if panels_per_side == 0 {
        return Err(GeoPhaseError::InvalidInput(
            "need at least one panel".into(),
        ));
    }
    let base = gauss_legendre(PANEL_ORDER);
    let h = PANEL_HALF_WIDTH / panels_per_side as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut pairs = Vec::with_capacity(panels_per_side * PANEL_ORDER);
    for p in 0..panels_per_side {
        let mid = (p as f64 + 0.5) * h;
        for &(x, w) in &base {
            let z = mid + 0.5 * h * x;
            pairs.push((z, 0.5 * h * w * norm * (-0.5 * z * z).exp()));
        }
    }
    let rule = SymmetricRule { center: 0.0, pairs };
    let total = rule.weight_sum();
    Ok(SymmetricRule {
        center: 0.0,
        pairs: rule
            .pairs
            .into_iter()
            .map(|(z, w)| (z, w / total))
            .collect(),
    })
}

/// Panels per side so that a phase of `wavenumber`·z advances at most about
/// 3 radians per panel.
pub fn panels_for_wavenumber(wavenumber: f64) -> usize {
    let per_side = (PANEL_HALF_WIDTH * wavenumber.abs() / 3.0).ceil();
    (per_side as usize).max(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expect(rule: &SymmetricRule, f: impl Fn(f64) -> f64) -> f64 {
        rule.center * f(0.0)
            + rule
                .pairs
                .iter()
                .map(|&(z, w)| w * (f(z) + f(-z)))
                .sum::<f64>()
    }

    #[test]
    fn small_hermite_rules_match_closed_forms() {
        // n = 2: ±1 with weight 1/2; n = 3: 0 (2/3), ±√3 (1/6)
        let r = gauss_hermite(2).unwrap();
        assert!((r.pairs[0].0 - 1.0).abs() < 1e-15 && (r.pairs[0].1 - 0.5).abs() < 1e-15);
        let r = gauss_hermite(3).unwrap();
        assert!((r.center - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.pairs[0].0 - 3f64.sqrt()).abs() < 1e-14);
        assert!((r.pairs[0].1 - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn hermite_moments_are_exact() {
        // E[z^{2k}] = (2k-1)!!, exact for 2k ≤ 2n-1
        let r = gauss_hermite(10).unwrap();
        let mut dfact = 1.0;
        for k in 0..10 {
            let m = expect(&r, |z| z.powi(2 * k));
            assert!(((m - dfact) / dfact).abs() < 1e-12, "k = {k}");
            dfact *= (2 * k + 1) as f64;
        }
    }

    #[test]
    fn large_hermite_rules_stay_normalized_and_accurate() {
        for &n in &[64, 128, 256, 512, 1024] {
            let r = gauss_hermite(n).unwrap();
            assert_eq!(r.len(), n);
            assert!((r.weight_sum() - 1.0).abs() < 1e-12);
            assert!(r.pairs.windows(2).all(|w| w[1].0 > w[0].0));
            // E[cos(kz)] = e^{-k²/2}
            let k = 4.0;
            assert!((expect(&r, |z| (k * z).cos()) - (-k * k / 2.0f64).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let r = gauss_legendre(16);
        let s: f64 = r.iter().map(|p| p.1).sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = r.iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
        let odd = gauss_legendre(5);
        assert_eq!(odd[2].0, 0.0);
        assert!((odd[2].1 - 128.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn panels_resolve_fast_oscillation() {
        for &k in &[1.0, 30.0, 300.0] {
            let r = normal_panels(panels_for_wavenumber(k)).unwrap();
            assert!((r.weight_sum() - 1.0).abs() < 1e-12);
            let want = (-k * k / 2.0f64).exp();
            assert!(
                (expect(&r, |z| (k * z).cos()) - want).abs() < 1e-12,
                "k = {k}"
            );
            // E[z²] = 1
            assert!((expect(&r, |z| z * z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unfolded_is_ascending_and_complete() {
        let r = gauss_hermite(5).unwrap();
        let u = r.unfolded();
        assert_eq!(u.len(), 5);
        assert!(u.windows(2).all(|w| w[1].0 > w[0].0));
        assert!((u.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
