//! The `fgnls` command-line tool.
//!
//! Every subcommand reads a JSON run configuration (`--config`) holding the surface and
//! the command parameters, and writes JSON or CSV to `--out` (standard output by default).
//! Exit codes: 0 success, 1 usage or input error, 2 numerical or invariant failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::amplitude::{AmplitudeContext, PhasePoint};
use crate::analysis::{
    certify, degeneration_sweep, f_slice, psi_grid, CheckOptions, CheckResult, PREDICTED_DIAGONAL_SLOPE,
};
use crate::error::Error;
use crate::grid::{Axis, FieldGrid};
use crate::periods::PeriodData;
use crate::quadrature::DEFAULT_TOLERANCE;
use crate::surface::{random_surface, validate, Mode, Surface, SurfaceJson};
use crate::theta::ThetaContext;

#[derive(Parser, Debug)]
#[command(name = "fgnls", version, about = "Finite-gap NLS solutions from branch-point data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for random surfaces and sampled checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Quadrature tolerance for the period computation.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, env = "FGNLS_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Period matrix, Abel map data and flow vectors, with invariant flags.
    Periods,
    /// Riemann theta values at given arguments.
    Theta,
    /// |f| over the phase torus (coordinate-plane slices for genus above 2).
    Fgrid,
    /// ψ over an (x, t) window.
    Psigrid,
    /// Full certification suite.
    Check,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct RandomSurface {
    pub mode: Mode,
    pub genus: usize,
}

#[derive(Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: Option<SurfaceJson>,
    /// Path to a surface JSON file, relative to the configuration file.
    pub surface_file: Option<PathBuf>,
    /// Random surface drawn with `--seed`.
    pub random: Option<RandomSurface>,
    /// Samples per torus dimension (`fgrid`, and the extremum scan of `check`).
    pub grid: Option<usize>,
    /// Phase planes for `fgrid`, zero-based.
    pub planes: Option<Vec<[usize; 2]>>,
    /// Values of the phases not on the plotted plane.
    pub base: Option<Vec<f64>>,
    pub omega0: Option<Vec<f64>>,
    pub x: Option<[f64; 2]>,
    pub t: Option<[f64; 2]>,
    pub nx: Option<usize>,
    pub nt: Option<usize>,
    /// Theta arguments, each a list of `[re, im]` pairs.
    pub z: Option<Vec<Vec<[f64; 2]>>>,
    /// Degeneration parameters for `check`.
    pub xi: Option<Vec<f64>>,
    pub theta_samples: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    /// Added to `τ₁₂` after the period computation. Test hook for negative controls.
    pub debug_tau_perturbation: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptySurface
            | Error::OverlappingCuts(..)
            | Error::NonPositiveBandHeight(..)
            | Error::OrderingViolation(_)
            | Error::DuplicateBranchPoint(_)
            | Error::InvalidArgument(_)
            | Error::WrongMode(_)
            | Error::Dimension { .. }
            | Error::GenusZero => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Numeric(m) => eprintln!("numerical failure: {m}"),
            }
            e.code()
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Resolved settings: command-line flags take precedence over the configuration.
struct Run {
    cfg: RunConfig,
    dir: PathBuf,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: u64,
    tol: f64,
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| usage("--config is required"))?;
    let cfg = load_config(path)?;
    let tol = cli.tol.or(cfg.tol).unwrap_or(DEFAULT_TOLERANCE);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(usage(format!("tolerance must be positive, got {tol}")));
    }
    let run = Run {
        dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        out: cli.out.clone().or_else(|| cfg.out.clone()),
        format: cli.format.or(cfg.format),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        tol,
        cfg,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Periods => cmd_periods(&run),
        Command::Theta => cmd_theta(&run),
        Command::Fgrid => cmd_fgrid(&run),
        Command::Psigrid => cmd_psigrid(&run),
        Command::Check => cmd_check(&run),
    })
}

impl Run {
    fn surface(&self) -> Result<Surface, CliError> {
        let c = &self.cfg;
        let spec = match (&c.surface, &c.surface_file, &c.random) {
            (Some(s), None, None) => s.clone(),
            (None, Some(file), None) => {
                let p = self.dir.join(file);
                let text = fs::read_to_string(&p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
            }
            (None, None, Some(r)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                return Ok(random_surface(&mut rng, r.mode, r.genus));
            }
            _ => return Err(usage("give exactly one of surface, surface_file, random")),
        };
        Ok(validate(spec.into_spec()?)?)
    }

    fn periods(&self, surface: &Surface) -> Result<PeriodData, CliError> {
        let mut pd = PeriodData::compute_with(surface, self.tol)?;
        if let Some(eps) = self.cfg.debug_tau_perturbation {
            let j = 1.min(pd.genus - 1);
            pd.tau[(0, j)] += eps;
        }
        Ok(pd)
    }

    fn context(&self) -> Result<AmplitudeContext, CliError> {
        let s = self.surface()?;
        let pd = self.periods(&s)?;
        Ok(AmplitudeContext::new(s, pd)?)
    }

    fn phase(&self, values: &Option<Vec<f64>>, g: usize) -> Result<PhasePoint, CliError> {
        match values {
            None => Ok(PhasePoint::zero(g)),
            Some(v) if v.len() == g => Ok(PhasePoint::new(v.clone())),
            Some(v) => Err(usage(format!("phase vector has {} entries, genus is {g}", v.len()))),
        }
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string()))
            }
        }
    }

    fn emit_json(&self, v: &Value) -> Result<(), CliError> {
        if self.format(Format::Json) != Format::Json {
            return Err(usage("this command only writes JSON"));
        }
        let mut text = serde_json::to_string_pretty(v).expect("JSON values serialize");
        text.push('\n');
        self.emit(&text)
    }

    fn emit_grids(&self, grids: &[FieldGrid]) -> Result<(), CliError> {
        match self.format(Format::Csv) {
            Format::Csv => self.emit(&grids.iter().map(FieldGrid::to_csv).collect::<String>()),
            Format::Json => {
                let v = if grids.len() == 1 {
                    grids[0].to_json()
                } else {
                    Value::Array(grids.iter().map(FieldGrid::to_json).collect())
                };
                self.emit_json(&v)
            }
        }
    }

    fn grid_size(&self, default: usize) -> Result<usize, CliError> {
        let n = self.cfg.grid.unwrap_or(default);
        if n == 0 {
            return Err(usage("grid size must be positive"));
        }
        Ok(n)
    }
}

fn periods_checks(pd: &PeriodData) -> Value {
    json!({
        "tau_symmetric": pd.tau_symmetry_defect() < 1e-8,
        "im_tau_positive_definite": pd.im_tau_min_eigenvalue() > 0.0,
        "re_tau_pattern": pd.re_tau_defect() < 1e-7,
        "re_u_infinity": pd.h1_defect() < 1e-7,
        "flow_vectors_real": pd.flow_imag < 1e-7,
        "defects": {
            "tau_symmetry": pd.tau_symmetry_defect(),
            "im_tau_min_eigenvalue": pd.im_tau_min_eigenvalue(),
            "re_tau": pd.re_tau_defect(),
            "re_u_infinity": pd.h1_defect(),
            "flow_imag": pd.flow_imag,
        },
    })
}

fn cmd_periods(run: &Run) -> Result<i32, CliError> {
    let s = run.surface()?;
    let pd = run.periods(&s)?;
    let checks = periods_checks(&pd);
    let ok = ["tau_symmetric", "im_tau_positive_definite", "re_tau_pattern", "re_u_infinity", "flow_vectors_real"]
        .iter()
        .all(|k| checks[k] == json!(true));
    let mut v = pd.to_json();
    v["checks"] = checks;
    run.emit_json(&v)?;
    Ok(if ok { 0 } else { 2 })
}

fn cmd_theta(run: &Run) -> Result<i32, CliError> {
    let s = run.surface()?;
    let pd = run.periods(&s)?;
    let g = pd.genus;
    let ctx = ThetaContext::new(&pd.tau)?;
    let args = run.cfg.z.clone().unwrap_or_else(|| vec![vec![[0.0, 0.0]; g]]);
    let mut values = Vec::with_capacity(args.len());
    for z in args {
        if z.len() != g {
            return Err(usage(format!("theta argument has {} entries, genus is {g}", z.len())));
        }
        let zv = DVector::from_iterator(g, z.iter().map(|c| C64::new(c[0], c[1])));
        let tv = ctx.theta_value(&zv)?;
        let v = tv.value();
        values.push(json!({
            "z": z,
            "theta": [v.re, v.im],
            "log_prefactor": [tv.log_prefactor.re, tv.log_prefactor.im],
            "reduced": [tv.reduced.re, tv.reduced.im],
            "relative_size": tv.relative_size(),
        }));
    }
    let c = ctx.certificate();
    run.emit_json(&json!({
        "genus": g,
        "certificate": {
            "radius": c.radius,
            "lattice_points": c.lattice_points,
            "tail_bound": c.tail_bound,
            "epsilon": c.epsilon,
        },
        "values": values,
    }))?;
    Ok(0)
}

fn cmd_fgrid(run: &Run) -> Result<i32, CliError> {
    let ctx = run.context()?;
    let g = ctx.genus();
    let n = run.grid_size(200)?;
    let planes: Vec<(usize, usize)> = match &run.cfg.planes {
        Some(p) => p.iter().map(|q| (q[0], q[1])).collect(),
        None if g == 1 => vec![(0, 0)],
        None => (0..g).flat_map(|i| (i + 1..g).map(move |j| (i, j))).collect(),
    };
    let base = run.phase(&run.cfg.base, g)?;
    let mut grids = Vec::with_capacity(planes.len());
    for plane in planes {
        let grid = f_slice(&ctx, n, plane, &base)?;
        grids.push(grid.with_metadata("plane", json!([plane.0, plane.1])).with_metadata("base", json!(base.values())));
    }
    run.emit_grids(&grids)?;
    Ok(0)
}

fn axis(name: &str, range: Option<[f64; 2]>, default: [f64; 2], count: Option<usize>) -> Result<Axis, CliError> {
    let r = range.unwrap_or(default);
    let n = count.unwrap_or(128);
    if n < 2 {
        return Err(usage(format!("axis {name} needs at least 2 samples")));
    }
    Ok(Axis::new(name, r[0], r[1], n)?)
}

fn cmd_psigrid(run: &Run) -> Result<i32, CliError> {
    let ctx = run.context()?;
    let omega0 = run.phase(&run.cfg.omega0, ctx.genus())?;
    let x = axis("x", run.cfg.x, [-2.0, 2.0], run.cfg.nx)?;
    let t = axis("t", run.cfg.t, [-1.0, 1.0], run.cfg.nt)?;
    let grid = psi_grid(&ctx, x, t, &omega0)?
        .with_metadata("omega0", json!(omega0.values()))
        .with_metadata("band_sum", json!(ctx.band_sum));
    run.emit_grids(&[grid])?;
    Ok(0)
}

fn degeneration_checks(surface: &Surface, xis: &[f64]) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let check = |name: &str, value: f64, passed: bool, tolerance: f64| CheckResult {
        name: name.to_string(),
        passed,
        value,
        tolerance,
        note: None,
    };
    match degeneration_sweep(surface, xis, 32) {
        Ok(c) => {
            let last = c.points.last().map(|p| p.sup_f_minus_one).unwrap_or(f64::NAN);
            out.push(check("degeneration_monotone", last, c.is_monotone(), 0.0));
            let worst = c
                .diagonal_slopes()
                .iter()
                .map(|s| (s / PREDICTED_DIAGONAL_SLOPE - 1.0).abs())
                .fold(0.0, f64::max);
            out.push(check("degeneration_slope", worst, worst <= 0.2, 0.2));
        }
        Err(e) => out.push(CheckResult {
            name: "degeneration_monotone".into(),
            passed: false,
            value: f64::NAN,
            tolerance: 0.0,
            note: Some(e.to_string()),
        }),
    }
    out
}

fn cmd_check(run: &Run) -> Result<i32, CliError> {
    let ctx = run.context()?;
    let g = ctx.genus();
    let mut opts = CheckOptions::for_genus(g, run.seed);
    if let Some(n) = run.cfg.grid {
        opts.grid_per_dim = n.max(2);
    }
    if let Some(n) = run.cfg.theta_samples {
        opts.theta_samples = n;
    }
    let mut report = certify(&ctx, &opts);
    if let (Some(xis), Mode::Focusing) = (&run.cfg.xi, ctx.mode()) {
        report.checks.extend(degeneration_checks(&ctx.surface, xis));
        report.passed = report.checks.iter().all(|c| c.passed);
    }
    let v = json!({
        "mode": ctx.mode(),
        "genus": g,
        "band_sum": ctx.band_sum,
        "seed": run.seed,
        "passed": report.passed,
        "checks": report.checks,
    });
    run.emit_json(&v)?;
    Ok(if report.passed { 0 } else { 2 })
}
