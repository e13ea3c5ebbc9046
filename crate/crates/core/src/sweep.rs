//! Two-parameter phase surfaces written as CSV.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::dephasing::{two_level_phase, BathSpec, Mode, TwoLevelDephasingParams};
use crate::engine::{PhaseResult, TrajectoryGrid};
use crate::qstate::BlochVector;
use crate::spinbath::{spinbath_phase, QuadratureConfig, SpinBathParams};
use crate::{GeoPhaseError, Result, Tolerances};

pub const CSV_HEADER: &str = "axis1,axis2,phase,visibility,converged";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Dephasing,
    SpinBath,
}

impl Model {
    /// Parameter names a sweep may set for this model.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            Model::Dephasing => &[
                "theta",
                "omega",
                "gamma",
                "gamma_over_omega",
                "horizon",
                "coupling",
                "mode_frequency",
            ],
            Model::SpinBath => &[
                "delta",
                "s_n",
                "delta_over_s_n",
                "px0",
                "py0",
                "pz0",
                "horizon",
            ],
        }
    }
}

impl FromStr for Model {
    type Err = GeoPhaseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dephasing" => Ok(Model::Dephasing),
            "spinbath" | "spin_bath" | "spin-bath" => Ok(Model::SpinBath),
            _ => Err(GeoPhaseError::InvalidInput(format!("unknown model '{s}'"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Dephasing => "dephasing",
            Model::SpinBath => "spinbath",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl FromStr for Scale {
    type Err = GeoPhaseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            _ => Err(GeoPhaseError::InvalidInput(format!(
                "unknown axis scale '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, count: usize, scale: Scale) -> Self {
        Self {
            name: name.to_string(),
            min,
            max,
            count,
            scale,
        }
    }

    pub fn validate(&self, model: Model) -> Result<()> {
        if !model.parameters().contains(&self.name.as_str()) {
            return Err(GeoPhaseError::InvalidInput(format!(
                "'{}' is not a {model} parameter (expected one of {})",
                self.name,
                model.parameters().join(", ")
            )));
        }
        if self.count < 2 {
            return Err(GeoPhaseError::InvalidInput(format!(
                "axis '{}' needs at least 2 points",
                self.name
            )));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(GeoPhaseError::InvalidInput(format!(
                "axis '{}' needs min < max, got [{}, {}]",
                self.name, self.min, self.max
            )));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(GeoPhaseError::InvalidInput(format!(
                "log axis '{}' needs min > 0",
                self.name
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * f,
                    Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: Model,
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: BTreeMap<String, f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate(self.model)?;
        self.axis2.validate(self.model)?;
        if self.axis1.name == self.axis2.name {
            return Err(GeoPhaseError::InvalidInput(
                "the two axes must sweep different parameters".into(),
            ));
        }
        for k in self.fixed.keys() {
            if !self.model.parameters().contains(&k.as_str()) {
                return Err(GeoPhaseError::InvalidInput(format!(
                    "'{k}' is not a {} parameter",
                    self.model
                )));
            }
        }
        Ok(())
    }

    /// Parameter values at one grid point.
    pub fn point(&self, a1: f64, a2: f64) -> BTreeMap<String, f64> {
        let mut p = self.fixed.clone();
        p.insert(self.axis1.name.clone(), a1);
        p.insert(self.axis2.name.clone(), a2);
        p
    }
}

/// Two-level dephasing parameters from named values; missing names take
/// ω = 1, θ = π/2, γ = 0. A `coupling` switches to a single discrete mode.
pub fn dephasing_params(values: &BTreeMap<String, f64>) -> Result<TwoLevelDephasingParams> {
    let get = |k: &str| values.get(k).copied();
    let omega = get("omega").unwrap_or(1.0);
    let theta = get("theta").unwrap_or(PI / 2.0);
    let bath = match (get("coupling"), get("gamma"), get("gamma_over_omega")) {
        (Some(g), None, None) => {
            BathSpec::discrete(vec![Mode::new(g, get("mode_frequency").unwrap_or(omega))])
        }
        (None, Some(_), Some(_)) => {
            return Err(GeoPhaseError::InvalidInput(
                "give gamma or gamma_over_omega, not both".into(),
            ))
        }
        (None, gamma, ratio) => {
            let rate = gamma.or(ratio.map(|r| r * omega)).unwrap_or(0.0);
            if rate == 0.0 {
                BathSpec::none()
            } else {
                BathSpec::flat_with_rate(rate)
            }
        }
        (Some(_), _, _) => {
            return Err(GeoPhaseError::InvalidInput(
                "a discrete mode and a flat rate cannot be combined".into(),
            ))
        }
    };
    let mut p = TwoLevelDephasingParams::new(omega, theta, bath)?;
    if let Some(h) = get("horizon") {
        p.horizon = Some(h);
        p.validate()?;
    }
    Ok(p)
}

/// Spin-bath parameters from named values; missing names take Δ = 1,
/// s_N = 1, p0 = (1, 0, 0).
pub fn spinbath_params(values: &BTreeMap<String, f64>) -> Result<SpinBathParams> {
    let get = |k: &str| values.get(k).copied();
    let (delta, s_n) = match (get("delta"), get("s_n"), get("delta_over_s_n")) {
        (Some(_), Some(_), Some(_)) => {
            return Err(GeoPhaseError::InvalidInput(
                "delta, s_n and delta_over_s_n overdetermine the model".into(),
            ))
        }
        (None, Some(s), Some(r)) => (r * s, s),
        (Some(d), None, Some(r)) => (d, d / r),
        (d, s, None) => (d.unwrap_or(1.0), s.unwrap_or(1.0)),
        (None, None, Some(r)) => (r, 1.0),
    };
    let p0 = BlochVector::new(
        get("px0").unwrap_or(1.0),
        get("py0").unwrap_or(0.0),
        get("pz0").unwrap_or(0.0),
    );
    let p = SpinBathParams::new(delta, s_n, p0)?;
    match get("horizon") {
        Some(h) => p.with_horizon(h),
        None => Ok(p),
    }
}

/// Solver settings shared by every sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: Tolerances,
    pub quad: QuadratureConfig,
    /// Starting number of trajectory intervals.
    pub n_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            quad: QuadratureConfig::default(),
            n_steps: 64,
        }
    }
}

pub fn dephasing_point(values: &BTreeMap<String, f64>, cfg: &SolverConfig) -> Result<PhaseResult> {
    two_level_phase(&dephasing_params(values)?, cfg.n_steps, &cfg.tol)
}

pub fn spinbath_point(values: &BTreeMap<String, f64>, cfg: &SolverConfig) -> Result<PhaseResult> {
    let p = spinbath_params(values)?;
    let grid = TrajectoryGrid::new(
        p.horizon(),
        cfg.n_steps,
        crate::engine::GridScheme::AdaptiveHalving,
    )?;
    spinbath_phase(&p, &cfg.quad, &grid, &cfg.tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: f64,
    pub phase: f64,
    pub visibility: f64,
    pub converged: bool,
    /// Why the point failed, when it did.
    pub error: Option<GeoPhaseError>,
}

/// Evaluates every grid point, axis1-major. Failed points become rows with
/// `converged = false` and NaN values.
pub fn run_sweep(spec: &SweepSpec, cfg: &SolverConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    cfg.tol.validate()?;
    cfg.quad.validate()?;
    let points: Vec<(f64, f64)> = spec
        .axis1
        .values()
        .into_iter()
        .flat_map(|a| spec.axis2.values().into_iter().map(move |b| (a, b)))
        .collect();
    let eval = |&(a1, a2): &(f64, f64)| -> SweepRow {
        let values = spec.point(a1, a2);
        let res = match spec.model {
            Model::Dephasing => dephasing_point(&values, cfg),
            Model::SpinBath => spinbath_point(&values, cfg),
        };
        match res {
            Ok(r) => SweepRow {
                axis1: a1,
                axis2: a2,
                phase: r.phase,
                visibility: r.visibility,
                converged: r.convergence.converged,
                error: None,
            },
            Err(e) => SweepRow {
                axis1: a1,
                axis2: a2,
                phase: f64::NAN,
                visibility: f64::NAN,
                converged: false,
                error: Some(e),
            },
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(points.par_iter().map(eval).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(points.iter().map(eval).collect())
    }
}

/// `x` with 12 significant digits, shortest of fixed or scientific notation
/// in the manner of C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig(r.axis1),
            format_sig(r.axis2),
            format_sig(r.phase),
            format_sig(r.visibility),
            r.converged
        )?;
    }
    Ok(())
}
