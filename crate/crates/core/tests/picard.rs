use greenwave_core::picard::{
    continue_solution, contraction_window, picard_map, PicardSolver, Problem, RhsSpec,
    SolverConfig, Window,
};
use greenwave_core::potentials::{
    linear_solve, FnSource, GridSpec, LagWeights, SampledFunction, SpaceTimeField,
};
use greenwave_core::{Error, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(rhs: RhsSpec) -> Problem {
    Problem::new(
        ModelParams::from_b(1.0, 1.0, 2.0).unwrap(),
        SampledFunction::gaussian(0.0, 1.0).unwrap(),
        SampledFunction::zero(),
        rhs,
        GridSpec::new(-4.0, 4.0, 81, 0.5, 20).unwrap(),
    )
    .unwrap()
}

fn random_iterate(
    solver: &PicardSolver,
    window: Window,
    seed: u64,
    base: &SpaceTimeField,
) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = base.clone();
    let n = v.nx;
    let ux = v.ux.as_mut().unwrap();
    for (u, p) in v.u.iter_mut().zip(ux.iter_mut()).skip(n) {
        *u += rng.gen_range(-1.0..1.0);
        *p += rng.gen_range(-1.0..1.0);
    }
    assert_eq!(v.nt, window.len() + 1);
    assert_eq!(v.nx, solver.tables().width());
    v
}

#[test]
fn map_contracts_on_random_pairs() {
    let p = problem(RhsSpec::sine_gordon());
    let cfg = SolverConfig::default();
    let solver = PicardSolver::new(&p, &cfg).unwrap();
    let window = solver.windows()[0];
    let levels = solver.initial_levels().unwrap();
    let history = solver.history(window, &levels).unwrap();
    let base = solver.data_iterate(window, &levels).unwrap();
    let bound = p.rhs.lipschitz()
        * (1.0 / p.params.a() + 1.0 / (p.params.epsilon() * (p.params.b() - p.params.a())).sqrt())
        * solver.eta();
    assert!(bound <= cfg.theta * (1.0 + 1e-12));
    for seed in 0..6 {
        let v1 = random_iterate(&solver, window, 2 * seed, &base);
        let v2 = random_iterate(&solver, window, 2 * seed + 1, &base);
        let m1 = solver.apply(&v1, &history).unwrap();
        let m2 = solver.apply(&v2, &history).unwrap();
        let ratio = m1.eta_distance(&m2).unwrap() / v1.eta_distance(&v2).unwrap();
        assert!(ratio <= bound, "seed {seed}: {ratio} > {bound}");
    }
}

#[test]
fn slope_kernel_amplification_is_below_the_estimate() {
    let params = ModelParams::from_b(0.25, 1.0, 4.0).unwrap();
    let eval = greenwave_core::KernelEvaluator::new(params, Default::default())
        .with_path(greenwave_core::EvalPath::Talbot);
    let limit = 1.0 / (params.epsilon() * (params.b() - params.a())).sqrt();
    for lag in [0.01, 0.1, 0.5, 1.0, 2.0] {
        let w = LagWeights::build(&eval, 0.05, lag, &Default::default()).unwrap();
        let l1: f64 = w.kx.iter().map(|v| v.abs()).sum();
        assert!(l1 <= limit, "lag {lag}: {l1} > {limit}");
        let mass: f64 = w.k.iter().map(|v| v.abs()).sum();
        assert!(mass <= 1.0 / params.a());
    }
}

#[test]
fn zero_rhs_map_ignores_the_iterate() {
    let p = problem(RhsSpec::zero());
    let cfg = SolverConfig::default();
    let solver = PicardSolver::new(&p, &cfg).unwrap();
    let window = solver.windows()[0];
    let levels = solver.initial_levels().unwrap();
    let base = solver.data_iterate(window, &levels).unwrap();
    let v = random_iterate(&solver, window, 3, &base);
    let mapped = picard_map(&p, &cfg, &v).unwrap();
    assert!(mapped.eta_distance(&base).unwrap() < 1e-15);
}

#[test]
fn distinct_starts_reach_the_same_fixed_point() {
    let p = problem(RhsSpec::sine_gordon());
    let cfg = SolverConfig::default();
    let solver = PicardSolver::new(&p, &cfg).unwrap();
    let window = solver.windows()[0];
    let levels = solver.initial_levels().unwrap();
    let history = solver.history(window, &levels).unwrap();
    let base = solver.data_iterate(window, &levels).unwrap();
    let (a, _) = solver.solve_window(0, &history, &levels, &base).unwrap();
    let start = random_iterate(&solver, window, 11, &base);
    let (b, report) = solver.solve_window(0, &history, &levels, &start).unwrap();
    assert!(report.iterations > 1);
    let bound = 2.0 * cfg.tol / (1.0 - cfg.theta);
    assert!(a.eta_distance(&b).unwrap() <= bound);
}

#[test]
fn halving_theta_leaves_the_solution_unchanged() {
    let p = problem(RhsSpec::sine_gordon());
    let (u1, r1) = continue_solution(&p, &SolverConfig::default()).unwrap();
    let half = SolverConfig {
        theta: 0.25,
        ..Default::default()
    };
    let (u2, r2) = continue_solution(&p, &half).unwrap();
    assert!(r2.windows.len() > r1.windows.len());
    assert!(u1.eta_distance(&u2).unwrap() <= 1e-6);
}

#[test]
fn space_time_source_matches_linear_solve() {
    let mut p = problem(RhsSpec::zero());
    p.rhs = RhsSpec::new("wave", |x, t, _, _| Ok((x - t).sin()), 0.0, 1.0)
        .unwrap()
        .state_free();
    let (u, _) = continue_solution(&p, &SolverConfig::default()).unwrap();
    let src = FnSource::new(|x: f64, t: f64| (x - t).sin(), 1.0);
    let lin = linear_solve(&src, &p.f0, &p.f1, &p.grid, &p.params, &Default::default()).unwrap();
    assert!(u.eta_distance(&lin).unwrap() <= 1e-8);
}

#[test]
fn junctions_are_continuous() {
    let mut p = problem(RhsSpec::sine_gordon());
    p.grid = GridSpec::new(-4.0, 4.0, 81, 1.0, 40).unwrap();
    let cfg = SolverConfig::default();
    assert!((contraction_window(&p.params, 1.0, 0.5, 1.0).unwrap() - 0.25).abs() < 1e-15);
    let (_, report) = continue_solution(&p, &cfg).unwrap();
    assert_eq!(report.windows.len(), 4);
    for w in &report.windows[1..] {
        assert!(w.junction_gap_u <= 10.0 * cfg.tol && w.junction_gap_ux <= 10.0 * cfg.tol);
    }
}

#[test]
fn failing_rhs_reports_its_location() {
    let rhs = RhsSpec::new("log", |_, _, u, _| Ok((u - 0.5).ln()), 1.0, 1.0).unwrap();
    match continue_solution(&problem(rhs), &SolverConfig::default()) {
        Err(Error::Evaluation { message, .. }) => {
            assert!(message.contains("NaN") || message.contains("inf"))
        }
        other => panic!("{other:?}"),
    }
}
