//! Error function, its complement and the scaled complement erfcx.
//!
//! Rational approximations follow the fdlibm `s_erf.c` scheme (error below
//! one ulp on each interval). For x ≥ 1.25 that scheme writes
//! erfc(x) = exp(-x² - 0.5625 + R/S)/x, so erfcx(x) = exp(-0.5625 + R/S)/x
//! needs no e^{x²} factor at all.

// coefficients are kept digit for digit as published
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;

// [0, 0.84375)
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

// [0.84375, 1.25)
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

// [1.25, 1/0.35)
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

// [1/0.35, 28)
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// p[0] + z p[1] + z² p[2] + …
fn poly(p: &[f64], z: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * z + c)
}

/// 1 + z q[0] + z² q[1] + …
fn poly1(q: &[f64], z: f64) -> f64 {
    1.0 + z * poly(q, z)
}

/// erf(x) - x on [0, 0.84375), as x·R(x²)/S(x²).
fn small_correction(x: f64) -> f64 {
    let z = x * x;
    x * poly(&PP, z) / poly1(&QQ, z)
}

/// 1 - erf(1) - correction on [0.84375, 1.25).
fn near_one(x: f64) -> f64 {
    let s = x - 1.0;
    poly(&PA, s) / poly1(&QA, s)
}

/// ln(x·erfcx(x)) + 0.5625 for x in [1.25, 28).
fn tail_log(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    if x < 1.0 / 0.35 {
        poly(&RA, s) / poly1(&SA, s)
    } else {
        poly(&RB, s) / poly1(&SB, s)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = if a < 0.84375 {
        if a < 3.7252902984619140625e-9 {
            a + EFX * a
        } else {
            a + small_correction(a)
        }
    } else if a < 1.25 {
        ERX + near_one(a)
    } else if a >= 6.0 {
        1.0
    } else {
        1.0 - erfc_tail(a)
    };
    v.copysign(x)
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 0.84375 {
        if x < 0.25 {
            1.0 - (x + small_correction(x))
        } else {
            0.5 - (x - 0.5 + small_correction(x))
        }
    } else if x < 1.25 {
        1.0 - ERX - near_one(x)
    } else if x < 28.0 {
        erfc_tail(x)
    } else {
        0.0
    }
}

/// erfc on [1.25, 28) with the split-exponent trick for accuracy.
fn erfc_tail(x: f64) -> f64 {
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - x) * (z + x) + tail_log(x)).exp() / x
}

/// erfcx(x) = e^{x²} erfc(x), finite for all x ≥ 0 and decaying like 1/(x√π).
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 1.25 {
        // erfc(x) ≥ 0.077 here, so the product is well conditioned; for very
        // negative x this overflows to +inf as it must
        return (x * x).exp() * erfc(x);
    }
    if x < 28.0 {
        return (-0.5625 + tail_log(x)).exp() / x;
    }
    // asymptotic series Σ (-1)^n (2n-1)!! / (2x²)^n
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..12 {
        term *= -((2 * n - 1) as f64) * inv;
        sum += term;
    }
    sum / (x * PI.sqrt())
}

/// γ(x) = √π x e^{x²} (1 - Erf(x)) = √π x erfcx(x).
pub fn gamma_plateau(x: f64) -> f64 {
    PI.sqrt() * x * erfcx(x)
}

/// (Erf(x), γ(x)) for x ≥ 0.
pub fn erf_and_gamma(x: f64) -> crate::Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(crate::GeoPhaseError::InvalidInput(format!(
            "erf_and_gamma needs x >= 0, got {x}"
        )));
    }
    Ok((erf(x), gamma_plateau(x)))
}
