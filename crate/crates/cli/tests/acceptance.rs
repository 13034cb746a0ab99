//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use greenwave_core::kernel::{flux_check, verify_laplace, verify_mass, verify_moment_identities};
use greenwave_core::oracle::{certify, FdConfig};
use greenwave_core::picard::{continue_solution, PicardSolver, Problem, RhsSpec, SolverConfig};
use greenwave_core::potentials::{
    linear_solve, surface_values, ConstantSource, GridSpec, SampledFunction, SpaceTimeField,
    ZeroSource,
};
use greenwave_core::{EvalPath, KernelEvaluator, LaplacePoint, ModelParams, QuadratureSpec};
use greenwave_tool::commands::{flux_cases, laplace_samples, lattice_params, LATTICE_T};
use greenwave_tool::config::{parse_config, print_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASS_TOL: f64 = 1e-6;
const LATTICE_SECONDS: f64 = 60.0;
const MOMENT_TOL: f64 = 1e-5;
const LAPLACE_TOL: f64 = 1e-6;
const FLUX_TOL: f64 = 1e-3;
const FLUX_OFFSET: f64 = 1e-3;
const NONNEG_TOL: f64 = -1e-12;
const DUAL_PATH_TOL: f64 = 1e-6;
const DUAL_PATH_PROBES: usize = 500;
const MAX_BAND: f64 = 1e-3;
const LINEAR_FLOOR: f64 = 1e-8;
const INITIAL_LIMIT_TOL: f64 = 1e-3;
const THETA: f64 = 0.5;
const MIN_ITERATIONS: usize = 4;
const SOLVER_TOL: f64 = 1e-8;
const NONLINEAR_SLACK: f64 = 1e-3;
const WINDOW_INVARIANCE_TOL: f64 = 1e-6;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn fixture_params() -> ModelParams {
    ModelParams::from_b(1.0, 1.0, 2.0).unwrap()
}

fn fixture_grid() -> GridSpec {
    GridSpec::new(-6.0, 6.0, 241, 1.0, 40).unwrap()
}

fn fixture(f0: SampledFunction, f1: SampledFunction, rhs: RhsSpec) -> Problem {
    Problem::new(fixture_params(), f0, f1, rhs, fixture_grid()).unwrap()
}

fn sine_fixture() -> Problem {
    fixture(
        SampledFunction::gaussian(0.0, 1.0).unwrap(),
        SampledFunction::zero(),
        RhsSpec::sine_gordon(),
    )
}

fn cubic_fixture() -> Problem {
    fixture(
        SampledFunction::gaussian(0.0, 1.0).unwrap(),
        SampledFunction::zero(),
        RhsSpec::cubic(2.0).unwrap(),
    )
}

fn solver_config(theta: f64) -> SolverConfig {
    SolverConfig {
        theta,
        tol: SOLVER_TOL,
        ..Default::default()
    }
}

fn certified_band(problem: &Problem, field: &SpaceTimeField) -> (f64, f64) {
    let cert = certify(problem, &FdConfig::for_problem(problem, 0.05), 3).unwrap();
    let cmp = cert.compare(field).unwrap();
    (cmp.linf_gap, cmp.max_band)
}

fn mass_law() -> Outcome {
    let quad = QuadratureSpec::default();
    let clock = Instant::now();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for p in lattice_params() {
        for &t in &LATTICE_T {
            worst = worst.max(verify_mass(t, &p, &quad).unwrap().residual());
            n += 1;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        n == 81 && worst <= MASS_TOL && secs <= LATTICE_SECONDS,
        format!("{n} points, max residual {worst:.2e} <= {MASS_TOL:.0e}, {secs:.1} s <= {LATTICE_SECONDS} s"),
    )
}

fn moment_identities() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for p in lattice_params() {
        for &t in &LATTICE_T {
            worst = worst.max(verify_moment_identities(t, &p, &quad).unwrap().max_abs());
        }
    }
    outcome(
        worst <= MOMENT_TOL,
        format!("max residual {worst:.2e} <= {MOMENT_TOL:.0e}"),
    )
}

fn laplace_cross_check() -> Outcome {
    let (params, radii, s) = laplace_samples();
    let points: Vec<LaplacePoint> = s
        .iter()
        .map(|&s| LaplacePoint::new(s, &params).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for r in radii {
        let c = verify_laplace(r, &points, &params, &QuadratureSpec::default()).unwrap();
        n += c.samples.len();
        worst = worst.max(c.max_rel_error);
    }
    let complex = s.iter().filter(|s| s.im != 0.0).count();
    outcome(
        n == 12 && complex > 0 && worst <= LAPLACE_TOL,
        format!("{n} samples ({complex} complex s per r), max relative error {worst:.2e} <= {LAPLACE_TOL:.0e}"),
    )
}

fn flux_limit() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    let mut worst_extrapolated: f64 = 0.0;
    for (p, t) in flux_cases() {
        let c = flux_check(t, FLUX_OFFSET * p.epsilon().sqrt(), &p, &quad).unwrap();
        if c.rel_deviation > worst {
            worst = c.rel_deviation;
            worst_case = format!("b={} eps={} t={t}", p.b(), p.epsilon());
        }
        worst_extrapolated = worst_extrapolated.max(c.extrapolated_rel_deviation);
    }
    outcome(
        worst <= FLUX_TOL,
        format!(
            "max relative deviation at offset {FLUX_OFFSET:.0e} sqrt(eps) {worst:.2e} ({worst_case}) <= {FLUX_TOL:.0e}; \
             extrapolated to the origin {worst_extrapolated:.2e}"
        ),
    )
}

fn nonnegativity() -> Outcome {
    let sets = [(1.0, 1.0, 2.0), (0.25, 0.5, 8.0), (0.5, 2.0, 4.0)];
    let mut min = f64::INFINITY;
    for (eps, a, b) in sets {
        let eval = KernelEvaluator::new(
            ModelParams::from_b(eps, a, b).unwrap(),
            QuadratureSpec::default(),
        );
        for j in 0..50 {
            let t = 0.02 + 2.98 * j as f64 / 49.0;
            for i in 0..200 {
                let x = -5.0 + 10.0 * i as f64 / 199.0;
                min = min.min(eval.k(x, t).unwrap());
            }
        }
    }
    outcome(
        min >= NONNEG_TOL,
        format!("min K over 3 x 200 x 50 nodes {min:.3e} >= {NONNEG_TOL:.0e}"),
    )
}

fn dual_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lattice = lattice_params();
    let quad = QuadratureSpec::new(1e-10, f64::MIN_POSITIVE, 200).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..DUAL_PATH_PROBES {
        let p = lattice[rng.gen_range(0..lattice.len())];
        let x = rng.gen_range(-3.0..3.0);
        let t = rng.gen_range(0.05..3.0);
        let time = KernelEvaluator::new(p, quad).with_path(EvalPath::TimeDomain);
        let talbot = KernelEvaluator::new(p, quad).with_path(EvalPath::Talbot);
        let (a, b) = (time.k(x, t).unwrap(), talbot.k(x, t).unwrap());
        worst = worst.max((a - b).abs() / a.abs());
    }
    outcome(
        worst <= DUAL_PATH_TOL,
        format!("{DUAL_PATH_PROBES} probes, max relative gap {worst:.2e} <= {DUAL_PATH_TOL:.0e}"),
    )
}

fn linear_oracle() -> Outcome {
    let gaussian = || SampledFunction::gaussian(0.0, 1.0).unwrap();
    let cases: [(&str, Problem, Option<f64>); 3] = [
        (
            "gaussian f0",
            fixture(gaussian(), SampledFunction::zero(), RhsSpec::zero()),
            None,
        ),
        (
            "f1 only",
            fixture(SampledFunction::zero(), gaussian(), RhsSpec::zero()),
            None,
        ),
        (
            "constant source",
            fixture(
                SampledFunction::zero(),
                SampledFunction::zero(),
                RhsSpec::source(1.0).unwrap(),
            ),
            Some(1.0),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, problem, source) in cases {
        let cfg = Default::default();
        let field = match source {
            Some(v) => linear_solve(
                &ConstantSource(v),
                &problem.f0,
                &problem.f1,
                &problem.grid,
                &problem.params,
                &cfg,
            ),
            None => linear_solve(
                &ZeroSource,
                &problem.f0,
                &problem.f1,
                &problem.grid,
                &problem.params,
                &cfg,
            ),
        }
        .unwrap();
        let (gap, band) = certified_band(&problem, &field);
        ok &= gap <= band.max(LINEAR_FLOOR) && band <= MAX_BAND;
        parts.push(format!("{name} gap {gap:.2e} band {band:.2e}"));
    }
    outcome(
        ok,
        format!(
            "{}; gap <= max(band, {LINEAR_FLOOR:.0e}), band <= {MAX_BAND:.0e}",
            parts.join(", ")
        ),
    )
}

fn initial_limits() -> Outcome {
    let params = fixture_params();
    let f0 = SampledFunction::gaussian(0.0, 1.0).unwrap();
    let f1 = SampledFunction::gaussian(0.5, 0.7).unwrap();
    let cfg = Default::default();
    let xs = [-1.5, -0.4, 0.0, 0.3, 1.1, 2.0];
    let mut errors = Vec::new();
    for t in [1e-2, 1e-3, 1e-4] {
        let mut e0: f64 = 0.0;
        let mut e1: f64 = 0.0;
        for &x in &xs {
            let a = surface_values(&f0, x, t, &params, &cfg).unwrap();
            let b = surface_values(&f1, x, t, &params, &cfg).unwrap();
            e0 = e0.max((a.star + b.u - f0.value(x)).abs());
            e1 = e1.max((a.star_t + b.ut - f1.value(x)).abs());
        }
        errors.push((e0, e1));
    }
    let decreasing = errors
        .windows(2)
        .all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    let last = errors[2];
    let fmt: Vec<String> = errors
        .iter()
        .map(|(a, b)| format!("({a:.1e}, {b:.1e})"))
        .collect();
    outcome(
        decreasing && last.0.max(last.1) <= INITIAL_LIMIT_TOL,
        format!("(u - f0, u_t - f1) errors at t = 1e-2, 1e-3, 1e-4: {}; final <= {INITIAL_LIMIT_TOL:.0e}", fmt.join(" ")),
    )
}

fn contraction() -> Outcome {
    let (_, report) = continue_solution(&sine_fixture(), &solver_config(THETA)).unwrap();
    let worst = report
        .windows
        .iter()
        .map(|w| w.max_ratio)
        .fold(0.0, f64::max);
    let fewest = report
        .windows
        .iter()
        .map(|w| w.differences.len())
        .min()
        .unwrap_or(0);
    let geometric = report
        .windows
        .iter()
        .all(|w| w.contraction_ok && w.differences.len() >= MIN_ITERATIONS);
    outcome(
        worst <= THETA && geometric,
        format!(
            "{} windows, max ratio {worst:.3} <= {THETA}, fewest iterations {fewest} >= {MIN_ITERATIONS}",
            report.windows.len()
        ),
    )
}

fn march(solver: &PicardSolver, seed: Option<u64>) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let mut solved = solver.initial_levels().unwrap();
    for (index, window) in solver.windows().into_iter().enumerate() {
        let history = solver.history(window, &solved).unwrap();
        let mut v0 = solver.data_iterate(window, &solved).unwrap();
        if seed.is_some() {
            let n = v0.nx;
            let ux = v0.ux.as_mut().unwrap();
            for (u, p) in v0.u.iter_mut().zip(ux.iter_mut()).skip(n) {
                *u += rng.gen_range(-1.0..1.0);
                *p += rng.gen_range(-1.0..1.0);
            }
        }
        let (v, _) = solver.solve_window(index, &history, &solved, &v0).unwrap();
        solver.commit(&v, window, &mut solved).unwrap();
    }
    solver.output_field(&solved).unwrap()
}

fn uniqueness() -> Outcome {
    let problem = sine_fixture();
    let cfg = solver_config(THETA);
    let solver = PicardSolver::new(&problem, &cfg).unwrap();
    let a = march(&solver, None);
    let b = march(&solver, Some(17));
    let d = a.eta_distance(&b).unwrap();
    let bound = 2.0 * SOLVER_TOL / (1.0 - THETA);
    outcome(
        d <= bound,
        format!("distance of fixed points from two starts {d:.2e} <= {bound:.0e}"),
    )
}

fn nonlinear_oracle() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, problem) in [("sin(u)", sine_fixture()), ("u^3/(1+u^2)", cubic_fixture())] {
        let (field, _) = continue_solution(&problem, &solver_config(THETA)).unwrap();
        let (gap, band) = certified_band(&problem, &field);
        ok &= gap <= band + NONLINEAR_SLACK;
        parts.push(format!("{name} gap {gap:.2e} band {band:.2e}"));
    }
    outcome(
        ok,
        format!("{}; gap <= band + {NONLINEAR_SLACK:.0e}", parts.join(", ")),
    )
}

fn window_invariance() -> Outcome {
    let problem = sine_fixture();
    let (a, ra) = continue_solution(&problem, &solver_config(0.5)).unwrap();
    let (b, rb) = continue_solution(&problem, &solver_config(0.25)).unwrap();
    let d = a.eta_distance(&b).unwrap();
    outcome(
        d <= WINDOW_INVARIANCE_TOL,
        format!(
            "{} vs {} windows, distance {d:.2e} <= {WINDOW_INVARIANCE_TOL:.0e}",
            ra.windows.len(),
            rb.windows.len()
        ),
    )
}

fn junction_continuity() -> Outcome {
    let (_, report) = continue_solution(&sine_fixture(), &solver_config(THETA)).unwrap();
    let junctions = &report.windows[1..];
    let gu = junctions
        .iter()
        .map(|w| w.junction_gap_u)
        .fold(0.0, f64::max);
    let gx = junctions
        .iter()
        .map(|w| w.junction_gap_ux)
        .fold(0.0, f64::max);
    let limit = 10.0 * SOLVER_TOL;
    outcome(
        !junctions.is_empty() && gu <= limit && gx <= limit,
        format!(
            "{} junctions, max gaps u {gu:.2e}, u_x {gx:.2e} <= {limit:.0e}",
            junctions.len()
        ),
    )
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn exit_code(args: &[&str], dir: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_greenwave"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

fn cli_contract() -> Outcome {
    let mut round_trips = 0;
    let mut ok = true;
    for entry in fs::read_dir(repo().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let c = parse_config(&fs::read_to_string(&path).unwrap()).unwrap();
            ok &= parse_config(&print_config(&c)).unwrap() == c;
            round_trips += 1;
        }
    }
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let base = fs::read_to_string(repo().join("configs/linear_gaussian.cfg"))
        .unwrap()
        .replace("nx = 241", "nx = 31")
        .replace("x_min = -6", "x_min = -3")
        .replace("x_max = 6", "x_max = 3")
        .replace("T = 1", "T = 0.5")
        .replace("nt = 40", "nt = 10");
    let write = |name: &str, text: String| {
        fs::write(dir.join(name), text).unwrap();
        name.to_string()
    };
    let good = write("good.cfg", base.clone());
    let bad = write("bad.cfg", base.replace("a = 1", "a = 3"));
    let steep = write(
        "steep.cfg",
        base.replace("preset = zero", "expression = sin(3*u)\nbeta_F = 1"),
    );
    let stalled = write(
        "stalled.cfg",
        base.replace("preset = zero", "preset = sine-gordon\nbeta_F = 1")
            + "\n[solver]\nmax_iters = 2\n",
    );
    let coarse = write(
        "coarse.cfg",
        base.replace("nx = 31", "nx = 13")
            .replace("levels = 3", "levels = 2")
            + "slack = 0\n",
    );
    let codes = [
        (
            exit_code(&["solve-linear", "--config", &good, "--out", "o"], dir),
            0,
        ),
        (exit_code(&["solve", "--config", &bad], dir), 2),
        (exit_code(&["solve", "--config", &steep], dir), 3),
        (
            exit_code(&["solve", "--config", &stalled, "--out", "o"], dir),
            4,
        ),
        (
            exit_code(&["oracle-compare", "--config", &coarse, "--out", "o"], dir),
            5,
        ),
    ];
    let contract = codes.iter().all(|(got, want)| got == want);
    let identities = exit_code(&["verify-identities", "--out", "id"], dir);
    let got: Vec<String> = codes.iter().map(|c| c.0.to_string()).collect();
    outcome(
        ok && round_trips >= 4 && contract && identities == 0,
        format!(
            "{round_trips} configs round-trip, exit codes [{}] want [0,2,3,4,5], verify-identities exit {identities}",
            got.join(",")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("mass law", mass_law),
        ("moment identities", moment_identities),
        ("Laplace cross-check", laplace_cross_check),
        ("flux limit", flux_limit),
        ("nonnegativity", nonnegativity),
        ("dual-path agreement", dual_path),
        ("linear solution vs oracle", linear_oracle),
        ("initial-condition limits", initial_limits),
        ("contraction", contraction),
        ("uniqueness", uniqueness),
        ("nonlinear solution vs oracle", nonlinear_oracle),
        ("window invariance", window_invariance),
        ("junction continuity", junction_continuity),
        ("command line", cli_contract),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {verdict} {name}: {} [{:.1} s]",
            k + 1,
            o.detail,
            clock.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
