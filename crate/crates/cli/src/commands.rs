//! Subcommands. Each returns a report and writes its files under an output
//! directory; failures carry the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use greenwave_core::kernel::{
    flux_check, verify_laplace, verify_mass, verify_moment_identities, FluxCheck, LaplaceCheck,
    MassCheck, MomentResiduals,
};
use greenwave_core::oracle::{certify, Certificate, Comparison};
use greenwave_core::picard::{
    continue_solution, ProbeRange, ProbeReport, Problem, RhsSpec, SolveReport,
};
use greenwave_core::potentials::{linear_solve, FnSource, SpaceTimeField};
use greenwave_core::{EvalPath, KernelEvaluator, LaplacePoint, ModelParams, QuadratureSpec};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Format, RhsChoice, RunConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_BAND: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] greenwave_core::Error),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error("oracle band violation: {0}")]
    Band(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use greenwave_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(e) => match e {
                E::Domain(_) | E::Range(_) | E::Usage(_) => EXIT_CONFIG,
                E::Convergence { .. } => EXIT_CONVERGENCE,
                _ => EXIT_TOLERANCE,
            },
            CliError::Tolerance(_) => EXIT_TOLERANCE,
            CliError::Band(_) => EXIT_BAND,
        }
    }
}

impl From<crate::config::BuildError> for CliError {
    fn from(e: crate::config::BuildError) -> Self {
        CliError::Core(e.0)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(crate::config::parse_config(&text)?)
}

/// `--out`, else the configured directory, else the working directory.
pub fn output_dir(out: Option<&Path>, config: Option<&RunConfig>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output.directory.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io(&path))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("report encoding failed: {e}")))
}

fn field_csv(field: &SpaceTimeField) -> Result<String> {
    let mut buf = Vec::new();
    field.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn write_field(
    dir: &Path,
    stem: &str,
    field: &SpaceTimeField,
    formats: &[Format],
) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for f in formats {
        out.push(match f {
            Format::Csv => write_file(dir, &format!("{stem}.csv"), &field_csv(field)?)?,
            Format::Json => write_file(dir, &format!("{stem}.json"), &field.to_json()?)?,
        });
    }
    Ok(out)
}

/// `K`, `dK/dx`, `dK/dt` at every `(x, t)` pair, as CSV text. At `x = 0`
/// the slope column holds the mean of the one-sided slopes.
pub fn kernel_table(
    config: &RunConfig,
    x_list: &[f64],
    t_list: &[f64],
    dir: &Path,
) -> Result<String> {
    let eval = KernelEvaluator::new(config.params()?, QuadratureSpec::default());
    let at_origin = eval.with_path(EvalPath::Talbot);
    let mut s = String::from("x,t,K,dK_dx,dK_dt\n");
    for &t in t_list {
        for &x in x_list {
            let d = if x == 0.0 {
                at_origin.k_derivatives(x, t)?
            } else {
                eval.k_derivatives(x, t)?
            };
            let _ = writeln!(s, "{x:?},{t:?},{:?},{:?},{:?}", d.k, d.dx, d.dt);
        }
    }
    write_file(dir, "kernel_table.csv", &s)?;
    Ok(s)
}

pub const LATTICE_A: [f64; 3] = [0.5, 1.0, 2.0];
pub const LATTICE_B: [f64; 3] = [2.0, 4.0, 8.0];
pub const LATTICE_EPSILON: [f64; 3] = [0.25, 0.5, 1.0];
pub const LATTICE_T: [f64; 3] = [0.1, 1.0, 3.0];

pub const MASS_TOL: f64 = 1e-6;
pub const MOMENT_TOL: f64 = 1e-5;
pub const LAPLACE_TOL: f64 = 1e-6;
pub const FLUX_TOL: f64 = 1e-3;

/// Model parameters `(a, b, eps)` of the identity lattice.
pub fn lattice_params() -> Vec<ModelParams> {
    let mut out = Vec::new();
    for &a in &LATTICE_A {
        for &b in &LATTICE_B {
            for &eps in &LATTICE_EPSILON {
                out.push(ModelParams::from_b(eps, a, b).expect("lattice points satisfy a < b"));
            }
        }
    }
    out
}

/// Parameters and `(r, s)` samples of the Laplace cross-check.
pub fn laplace_samples() -> (ModelParams, Vec<f64>, Vec<Complex64>) {
    let params = ModelParams::from_b(0.5, 1.0, 4.0).expect("valid");
    let s = vec![
        Complex64::new(0.5, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(3.0, -2.0),
    ];
    (params, vec![0.3, 1.0, 2.5], s)
}

/// Latin square over `(b, eps, t)` at `a = 0.5`.
pub fn flux_cases() -> Vec<(ModelParams, f64)> {
    let mut out = Vec::new();
    for (i, &b) in LATTICE_B.iter().enumerate() {
        for (j, &eps) in LATTICE_EPSILON.iter().enumerate() {
            let t = LATTICE_T[(i + j) % 3];
            out.push((ModelParams::from_b(eps, 0.5, b).expect("valid"), t));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticePoint {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
}

impl From<&ModelParams> for LatticePoint {
    fn from(p: &ModelParams) -> Self {
        Self {
            epsilon: p.epsilon(),
            a: p.a(),
            b: p.b(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MassEntry {
    pub params: LatticePoint,
    pub check: MassCheck,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEntry {
    pub params: LatticePoint,
    pub residuals: MomentResiduals,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxEntry {
    pub params: LatticePoint,
    pub check: FluxCheck,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub mass_tol: f64,
    pub moment_tol: f64,
    pub laplace_tol: f64,
    pub flux_tol: f64,
    pub mass: Vec<MassEntry>,
    pub moments: Vec<MomentEntry>,
    pub laplace_params: LatticePoint,
    pub laplace: Vec<LaplaceCheck>,
    pub flux: Vec<FluxEntry>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Mass, moment, Laplace and flux checks over the fixed lattice. The flux
/// check passes on the slope extrapolated to the origin; the slope at the
/// sampling offset itself is reported alongside.
pub fn verify_identities(dir: &Path, verbose: bool) -> Result<IdentityReport> {
    let quad = QuadratureSpec::default();
    let mut failures = Vec::new();
    let mut mass = Vec::new();
    let mut moments = Vec::new();
    for p in lattice_params() {
        for &t in &LATTICE_T {
            let m = verify_mass(t, &p, &quad)?;
            let passed = m.residual() <= MASS_TOL;
            if !passed {
                failures.push(format!(
                    "mass eps={} a={} b={} t={t}: residual {:e}",
                    p.epsilon(),
                    p.a(),
                    p.b(),
                    m.residual()
                ));
            }
            mass.push(MassEntry {
                params: (&p).into(),
                check: m,
                passed,
            });
            let r = verify_moment_identities(t, &p, &quad)?;
            let passed = r.max_abs() <= MOMENT_TOL;
            if !passed {
                failures.push(format!(
                    "moments eps={} a={} b={} t={t}: residual {:e}",
                    p.epsilon(),
                    p.a(),
                    p.b(),
                    r.max_abs()
                ));
            }
            moments.push(MomentEntry {
                params: (&p).into(),
                residuals: r,
                passed,
            });
        }
        if verbose {
            eprintln!("lattice eps={} a={} b={} done", p.epsilon(), p.a(), p.b());
        }
    }
    let (lp, radii, s_list) = laplace_samples();
    let points = s_list
        .iter()
        .map(|&s| LaplacePoint::new(s, &lp))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut laplace = Vec::new();
    for &r in &radii {
        let c = verify_laplace(r, &points, &lp, &quad)?;
        if c.max_rel_error > LAPLACE_TOL {
            failures.push(format!(
                "laplace r={r}: relative error {:e}",
                c.max_rel_error
            ));
        }
        laplace.push(c);
    }
    let mut flux = Vec::new();
    for (p, t) in flux_cases() {
        let c = flux_check(t, 1e-3 * p.epsilon().sqrt(), &p, &quad)?;
        let passed = c.extrapolated_rel_deviation <= FLUX_TOL;
        if !passed {
            failures.push(format!(
                "flux eps={} b={} t={t}: relative deviation {:e}",
                p.epsilon(),
                p.b(),
                c.extrapolated_rel_deviation
            ));
        }
        flux.push(FluxEntry {
            params: (&p).into(),
            check: c,
            passed,
        });
    }
    let report = IdentityReport {
        mass_tol: MASS_TOL,
        moment_tol: MOMENT_TOL,
        laplace_tol: LAPLACE_TOL,
        flux_tol: FLUX_TOL,
        mass,
        moments,
        laplace_params: (&lp).into(),
        laplace,
        flux,
        passed: failures.is_empty(),
        failures,
    };
    write_file(dir, "identities.json", &to_json(&report)?)?;
    if !report.passed {
        return Err(CliError::Tolerance(format!(
            "{} identity check(s) failed; first: {}",
            report.failures.len(),
            report.failures[0]
        )));
    }
    Ok(report)
}

/// Box over which the declared constants of the right-hand side are probed.
pub fn probe_range(config: &RunConfig) -> ProbeRange {
    let g = &config.grid;
    let u = match config.rhs.choice {
        RhsChoice::Cubic { u_max } => u_max,
        _ => 4.0,
    };
    ProbeRange {
        x: (g.x_min, g.x_max),
        t: (0.0, g.horizon),
        u: (-u, u),
        p: (-4.0, 4.0),
    }
}

pub const PROBE_SAMPLES: usize = 2000;

/// Spot-checks the declared Lipschitz and sup bounds of the right-hand side.
pub fn probe_rhs(config: &RunConfig, rhs: &RhsSpec, seed: u64) -> Result<ProbeReport> {
    let report = rhs.probe(&probe_range(config), PROBE_SAMPLES, seed)?;
    if !report.lipschitz_ok {
        return Err(CliError::Tolerance(format!(
            "declared beta_F = {} is below an observed difference quotient {}",
            rhs.lipschitz(),
            report.max_ratio
        )));
    }
    if !report.bound_ok {
        return Err(CliError::Tolerance(format!(
            "declared sup_bound = {} is below an observed |F| = {}",
            rhs.sup_bound(),
            report.max_abs
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub probe: ProbeReport,
    pub report: SolveReport,
    #[serde(skip)]
    pub field: SpaceTimeField,
    pub files: Vec<PathBuf>,
}

/// Nonlinear solve by windowed fixed-point iteration.
pub fn solve(config: &RunConfig, seed: u64, dir: &Path) -> Result<SolveOutput> {
    let problem = config.problem()?;
    let probe = probe_rhs(config, &problem.rhs, seed)?;
    let (field, report) = continue_solution(&problem, &config.solver_config())?;
    let mut files = write_field(dir, "u", &field, &config.output.formats)?;
    files.push(write_file(dir, "solve_report.json", &report.to_json()?)?);
    if !report.contraction_ok() {
        return Err(CliError::Tolerance(format!(
            "an iteration ratio exceeded theta = {}",
            report.theta
        )));
    }
    let gap = report.max_junction_gap();
    if gap > 10.0 * report.tol {
        return Err(CliError::Tolerance(format!(
            "junction gap {gap:e} exceeds 10 tol"
        )));
    }
    Ok(SolveOutput {
        probe,
        report,
        field,
        files,
    })
}

fn state_free_source(problem: &Problem) -> Result<FnSource<impl Fn(f64, f64) -> f64 + '_>> {
    if !problem.rhs.is_state_free() {
        return Err(CliError::Usage(format!(
            "solve-linear needs a right-hand side free of u and p (got '{}')",
            problem.rhs.name()
        )));
    }
    let rhs = &problem.rhs;
    let probe = |x, t| rhs.eval(x, t, 0.0, 0.0);
    let (x0, t0) = (problem.grid.x_min, 0.0);
    probe(x0, t0)?;
    Ok(FnSource::new(
        move |x, t| probe(x, t).unwrap_or(f64::NAN),
        rhs.sup_bound(),
    ))
}

/// Explicit solution for a right-hand side independent of the state.
pub fn solve_linear(config: &RunConfig, dir: &Path) -> Result<(SpaceTimeField, Vec<PathBuf>)> {
    let problem = config.problem()?;
    let source = state_free_source(&problem)?;
    let field = linear_solve(
        &source,
        &problem.f0,
        &problem.f1,
        &problem.grid,
        &problem.params,
        &config.solver_config().potentials,
    )?;
    field.validate()?;
    let files = write_field(dir, "u_linear", &field, &config.output.formats)?;
    Ok((field, files))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub fd_dx: f64,
    pub fd_dt: f64,
    pub levels: usize,
    pub spacings: Vec<f64>,
    pub level_gaps: Vec<f64>,
    pub observed_order: Option<f64>,
    pub order: f64,
    pub safety: f64,
    pub max_band_u: f64,
    pub max_band_ux: f64,
    pub comparison: Comparison,
    pub slack: f64,
    pub within_band: bool,
    pub solve: SolveReport,
}

/// Runs the solver and the certified finite-difference reference and
/// compares them on the output grid.
pub fn oracle_compare(config: &RunConfig, dir: &Path) -> Result<OracleReport> {
    let problem = config.problem()?;
    let (field, solve) = continue_solution(&problem, &config.solver_config())?;
    let fd = config.fd_config(&problem);
    let cert: Certificate = certify(&problem, &fd, config.oracle.levels)?;
    let comparison = cert.compare(&field)?;
    let report = OracleReport {
        fd_dx: fd.dx,
        fd_dt: fd.dt,
        levels: config.oracle.levels,
        spacings: cert.spacings.clone(),
        level_gaps: cert.level_gaps.clone(),
        observed_order: cert.observed_order,
        order: cert.order,
        safety: cert.safety,
        max_band_u: cert.max_band_u(),
        max_band_ux: cert.max_band_ux(),
        comparison,
        slack: config.oracle.slack,
        within_band: comparison.within(config.oracle.slack),
        solve,
    };
    write_field(dir, "u", &field, &config.output.formats)?;
    write_field(dir, "u_fd", &cert.solution, &config.output.formats)?;
    write_file(dir, "oracle_report.json", &to_json(&report)?)?;
    if !report.within_band {
        return Err(CliError::Band(format!(
            "sup gap {:e} exceeds band {:e} + slack {:e}",
            comparison.linf_gap, report.max_band_u, report.slack
        )));
    }
    Ok(report)
}
