mod settings;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geophase::engine::PhaseResult;
use geophase::spinbath::{QuadratureConfig, QuadratureMethod};
use geophase::sweep::{
    dephasing_point, format_sig, run_sweep, spinbath_point, write_csv, Axis, Model, Scale,
    SolverConfig, SweepSpec,
};
use geophase::verify::{run_all, VerifyConfig};
use geophase::{GeoPhaseError, Tolerances};

use settings::{parse_number, Settings};

const DEFAULT_AXIS_POINTS: usize = 32;
const DEFAULT_MC_SAMPLES: usize = 100_000;

/// Why the program stopped; each kind has its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
    Verify(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Compute(_) => 2,
            Failure::Usage(_) => 64,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) | Failure::Verify(m) => m,
        }
    }
}

impl From<GeoPhaseError> for Failure {
    fn from(e: GeoPhaseError) -> Self {
        match e {
            GeoPhaseError::InvalidInput(_)
            | GeoPhaseError::UnphysicalState { .. }
            | GeoPhaseError::DimensionMismatch { .. }
            | GeoPhaseError::RegimeViolation(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Compute(format!("cannot write output: {e}"))
}

/// Geometric phases of open two-level systems.
///
/// Angles may be written in units of π, e.g. `--theta 0.5pi`. Times are in
/// units of 1/ω (dephasing) or 1/Δ (spin bath).
#[derive(Debug, Parser)]
#[command(name = "geophase", version)]
struct Cli {
    #[command(flatten)]
    shared: SharedArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SharedArgs {
    /// Flat TOML file of key = value settings; flags take precedence.
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "PATH")]
    out: Option<String>,
    /// Starting number of trajectory intervals before refinement [default: 64].
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "N")]
    grid: Option<String>,
    /// Seed for Monte Carlo averaging and randomized checks.
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "N")]
    seed: Option<String>,
    /// Worker threads [default: all cores].
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "N")]
    threads: Option<String>,
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "X")]
    phase_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "N")]
    max_levels: Option<String>,
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "X")]
    quadrature_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true, global = true, value_name = "N")]
    quadrature_max_nodes: Option<String>,
}

impl SharedArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("out", self.out.clone()),
            ("grid", self.grid.clone()),
            ("seed", self.seed.clone()),
            ("threads", self.threads.clone()),
            ("phase_tol", self.phase_tol.clone()),
            ("max_levels", self.max_levels.clone()),
            ("quadrature_tol", self.quadrature_tol.clone()),
            ("quadrature_max_nodes", self.quadrature_max_nodes.clone()),
        ]
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase of a dephasing two-level system after one period.
    Dephasing(DephasingCmd),
    /// Phase of a spin in a Gaussian spin bath after one period.
    Spinbath(SpinbathCmd),
    /// Phase and visibility over a two-parameter grid, as CSV.
    Sweep(Box<SweepCmd>),
    /// Run every acceptance check.
    Verify(VerifyCmd),
}

#[derive(Debug, Args)]
struct DephasingArgs {
    /// Polar angle of the initial Bloch vector [default: 0.5pi].
    #[arg(long, allow_hyphen_values = true, value_name = "ANGLE")]
    theta: Option<String>,
    /// Level splitting [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    /// Dephasing rate of a flat bath.
    #[arg(long, allow_hyphen_values = true, value_name = "RATE")]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "RATIO")]
    gamma_over_omega: Option<String>,
    /// Coupling to a single discrete bath mode (instead of a flat bath).
    #[arg(long, allow_hyphen_values = true, value_name = "G")]
    coupling: Option<String>,
    /// Frequency of that mode [default: omega].
    #[arg(long, allow_hyphen_values = true, value_name = "W")]
    mode_frequency: Option<String>,
}

impl DephasingArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("theta", self.theta.clone()),
            ("omega", self.omega.clone()),
            ("gamma", self.gamma.clone()),
            ("gamma_over_omega", self.gamma_over_omega.clone()),
            ("coupling", self.coupling.clone()),
            ("mode_frequency", self.mode_frequency.clone()),
        ]
    }
}

#[derive(Debug, Args)]
struct SpinbathArgs {
    /// Tunnelling amplitude [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Width of the bath field distribution [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    s_n: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "RATIO")]
    delta_over_s_n: Option<String>,
    /// Initial Bloch vector [default: 1, 0, 0].
    #[arg(long, allow_hyphen_values = true)]
    px0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    py0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pz0: Option<String>,
    /// auto, gauss-hermite, panels or monte-carlo [default: auto].
    #[arg(long, allow_hyphen_values = true, value_name = "METHOD")]
    quadrature: Option<String>,
    /// Starting node count, or sample count for Monte Carlo.
    #[arg(long, allow_hyphen_values = true, value_name = "N")]
    nodes: Option<String>,
}

impl SpinbathArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("delta", self.delta.clone()),
            ("s_n", self.s_n.clone()),
            ("delta_over_s_n", self.delta_over_s_n.clone()),
            ("px0", self.px0.clone()),
            ("py0", self.py0.clone()),
            ("pz0", self.pz0.clone()),
            ("quadrature", self.quadrature.clone()),
            ("nodes", self.nodes.clone()),
        ]
    }
}

#[derive(Debug, Args)]
struct HorizonArg {
    /// Final time [default: one free period].
    #[arg(long, allow_hyphen_values = true, value_name = "T")]
    horizon: Option<String>,
}

#[derive(Debug, Args)]
struct DephasingCmd {
    #[command(flatten)]
    model: DephasingArgs,
    #[command(flatten)]
    horizon: HorizonArg,
}

#[derive(Debug, Args)]
struct SpinbathCmd {
    #[command(flatten)]
    model: SpinbathArgs,
    #[command(flatten)]
    horizon: HorizonArg,
}

/// Axes are written NAME:MIN:MAX[:COUNT[:linear|log]], e.g.
/// `theta:0.05pi:0.95pi:32`. Model parameters not on an axis are held at
/// the values given by their flags or the config file.
#[derive(Debug, Args)]
struct SweepCmd {
    /// dephasing or spinbath.
    #[arg(long, allow_hyphen_values = true)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "AXIS")]
    axis1: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "AXIS")]
    axis2: Option<String>,
    #[command(flatten)]
    dephasing: DephasingArgs,
    #[command(flatten)]
    spinbath: SpinbathArgs,
    #[command(flatten)]
    horizon: HorizonArg,
}

#[derive(Debug, Args)]
struct VerifyCmd {
    /// Points per axis of the spin-bath surface check [default: 32].
    #[arg(long, allow_hyphen_values = true, value_name = "N")]
    surface_grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("geophase: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut settings = match &cli.shared.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    settings.overlay(cli.shared.pairs());
    match &cli.command {
        Command::Dephasing(c) => {
            settings.overlay(c.model.pairs());
            settings.overlay([("horizon", c.horizon.horizon.clone())]);
        }
        Command::Spinbath(c) => {
            settings.overlay(c.model.pairs());
            settings.overlay([("horizon", c.horizon.horizon.clone())]);
        }
        Command::Sweep(c) => {
            settings.overlay([
                ("model", c.model.clone()),
                ("axis1", c.axis1.clone()),
                ("axis2", c.axis2.clone()),
                ("horizon", c.horizon.horizon.clone()),
            ]);
            settings.overlay(c.dephasing.pairs());
            settings.overlay(c.spinbath.pairs());
        }
        Command::Verify(c) => settings.overlay([("surface_grid", c.surface_grid.clone())]),
    }

    if let Some(n) = settings.count("threads")? {
        if n == 0 {
            return Err(Failure::Usage("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| Failure::Compute(format!("cannot start worker pool: {e}")))?;
    }

    let solver = solver_config(&settings)?;
    let mut out = open_output(&settings)?;
    match cli.command {
        Command::Dephasing(_) => {
            let values = settings.numbers(Model::Dephasing.parameters())?;
            let r = dephasing_point(&values, &solver)?;
            print_point(&mut out, Model::Dephasing, &r)?;
        }
        Command::Spinbath(_) => {
            let values = settings.numbers(Model::SpinBath.parameters())?;
            let r = spinbath_point(&values, &solver)?;
            print_point(&mut out, Model::SpinBath, &r)?;
        }
        Command::Sweep(_) => {
            let spec = sweep_spec(&settings)?;
            let rows = run_sweep(&spec, &solver)?;
            write_csv(&rows, &mut out).map_err(io_failure)?;
            let failed: Vec<_> = rows.iter().filter(|r| !r.converged).collect();
            if let Some(first) = failed.first() {
                eprintln!(
                    "geophase: {} of {} points did not converge; first at ({}, {}): {}",
                    failed.len(),
                    rows.len(),
                    format_sig(first.axis1),
                    format_sig(first.axis2),
                    first
                        .error
                        .as_ref()
                        .map_or("not converged".to_string(), |e| e.to_string())
                );
            }
        }
        Command::Verify(_) => {
            let cfg = VerifyConfig {
                tol: solver.tol,
                quad: solver.quad,
                n_steps: solver.n_steps,
                seed: settings
                    .count("seed")?
                    .unwrap_or(VerifyConfig::default().seed),
                surface_grid: match settings.count("surface_grid")? {
                    Some(n) => n as usize,
                    None => VerifyConfig::default().surface_grid,
                },
            };
            let outcomes = run_all(&cfg);
            for o in &outcomes {
                writeln!(out, "{}", o.summary_line()).map_err(io_failure)?;
            }
            out.flush().map_err(io_failure)?;
            if let Some(first) = outcomes.iter().find(|o| !o.passed) {
                let failed = outcomes.iter().filter(|o| !o.passed).count();
                return Err(Failure::Verify(format!(
                    "{failed} of {} checks failed; first failure: check {} ({})",
                    outcomes.len(),
                    first.id,
                    first.name
                )));
            }
        }
    }
    out.flush().map_err(io_failure)
}

fn open_output(settings: &Settings) -> Result<Box<dyn Write>, Failure> {
    Ok(match settings.text("out") {
        Some(path) if path != "-" => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Failure::Usage(format!("cannot create {path}: {e}"))
            })?))
        }
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solver_config(settings: &Settings) -> Result<SolverConfig, Failure> {
    let mut tol = Tolerances::default();
    if let Some(x) = settings.number("phase_tol")? {
        tol.phase_tol = x;
    }
    if let Some(n) = settings.count("max_levels")? {
        tol.max_levels = n as usize;
    }
    if let Some(x) = settings.number("quadrature_tol")? {
        tol.quadrature_tol = x;
    }
    if let Some(n) = settings.count("quadrature_max_nodes")? {
        tol.quadrature_max_nodes = n as usize;
    }
    tol.validate()?;

    let mut quad = QuadratureConfig::from_tolerances(&tol);
    if let Some(m) = settings.text("quadrature") {
        quad.method = match m.trim().to_ascii_lowercase().as_str() {
            "auto" => QuadratureMethod::Auto,
            "gauss-hermite" | "gh" => QuadratureMethod::GaussHermite,
            "panels" | "gauss-legendre" => QuadratureMethod::GaussLegendrePanels,
            "monte-carlo" | "mc" => QuadratureMethod::MonteCarlo,
            other => {
                return Err(Failure::Usage(format!(
                    "unknown quadrature method '{other}'"
                )))
            }
        };
    }
    if quad.method == QuadratureMethod::MonteCarlo {
        quad.n_nodes = DEFAULT_MC_SAMPLES;
    }
    if let Some(n) = settings.count("nodes")? {
        quad.n_nodes = n as usize;
    }
    if let Some(seed) = settings.count("seed")? {
        quad.seed = seed;
    }
    quad.validate()?;

    let n_steps = match settings.count("grid")? {
        Some(n) => n as usize,
        None => SolverConfig::default().n_steps,
    };
    Ok(SolverConfig { tol, quad, n_steps })
}

fn parse_axis(text: &str) -> Result<Axis, Failure> {
    let bad = |m: String| Failure::Usage(format!("axis '{text}': {m}"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if !(3..=5).contains(&parts.len()) {
        return Err(bad("expected NAME:MIN:MAX[:COUNT[:SCALE]]".into()));
    }
    let min = parse_number(parts[1]).map_err(bad)?;
    let max = parse_number(parts[2]).map_err(bad)?;
    let count = match parts.get(3) {
        Some(c) => c
            .parse::<usize>()
            .map_err(|_| bad(format!("'{c}' is not a count")))?,
        None => DEFAULT_AXIS_POINTS,
    };
    let scale = match parts.get(4) {
        Some(s) => s.parse::<Scale>()?,
        None => Scale::Linear,
    };
    Ok(Axis::new(parts[0], min, max, count, scale))
}

fn sweep_spec(settings: &Settings) -> Result<SweepSpec, Failure> {
    let need = |k: &str| {
        settings
            .text(k)
            .ok_or_else(|| Failure::Usage(format!("sweep needs --{k}")))
    };
    let model: Model = need("model")?.parse()?;
    let axis1 = parse_axis(need("axis1")?)?;
    let axis2 = parse_axis(need("axis2")?)?;
    let mut fixed = settings.numbers(model.parameters())?;
    fixed.remove(&axis1.name);
    fixed.remove(&axis2.name);
    let spec = SweepSpec {
        model,
        axis1,
        axis2,
        fixed,
    };
    spec.validate()?;
    Ok(spec)
}

fn print_point(out: &mut dyn Write, model: Model, r: &PhaseResult) -> Result<(), Failure> {
    let c = &r.convergence;
    let text = format!(
        "model = {model}\nphase = {}\nvisibility = {}\nraw_unwrapped = {}\nconverged = {}\nlevels = {}\nn_steps = {}\ndelta = {}\n",
        format_sig(r.phase),
        format_sig(r.visibility),
        format_sig(r.raw_unwrapped),
        c.converged,
        c.levels,
        c.n_steps,
        format_sig(c.delta),
    );
    out.write_all(text.as_bytes()).map_err(io_failure)
}
