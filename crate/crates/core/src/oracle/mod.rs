//! Independent finite-difference reference solver and its error band.

mod certify;
mod fd;

pub use certify::{
    certify, Certificate, Comparison, FORMAL_ORDER, SAFETY_ASSUMED, SAFETY_OBSERVED,
};
pub use fd::{
    fd_solve, Boundary, FdConfig, Integrator, BLOW_UP, FARFIELD_SPREAD, STABILITY_FACTOR,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::params::ModelParams;
    use crate::picard::{Problem, RhsSpec};
    use crate::potentials::{GridSpec, SampledFunction};

    fn problem(f0: SampledFunction, f1: SampledFunction, rhs: RhsSpec) -> Problem {
        Problem::new(
            ModelParams::from_b(1.0, 1.0, 2.0).unwrap(),
            f0,
            f1,
            rhs,
            GridSpec::new(-2.0, 2.0, 9, 0.5, 5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_problem_stays_zero_with_zero_band() {
        let p = problem(
            SampledFunction::zero(),
            SampledFunction::zero(),
            RhsSpec::zero(),
        );
        let cert = certify(&p, &FdConfig::for_problem(&p, 0.1), 2).unwrap();
        assert_eq!(cert.solution.eta_norm(), 0.0);
        assert_eq!(cert.max_band_u(), 0.0);
    }

    #[test]
    fn uniform_velocity_matches_ode() {
        let p = problem(
            SampledFunction::zero(),
            SampledFunction::constant(1.0).unwrap(),
            RhsSpec::zero(),
        );
        for boundary in [Boundary::FrozenFarfield, Boundary::HomogeneousNeumann] {
            let cfg = FdConfig {
                boundary,
                ..FdConfig::for_problem(&p, 0.2)
            };
            let u = fd_solve(&p, &cfg).unwrap();
            for j in 0..u.nt {
                let exact = 1.0 - (-u.t(j)).exp();
                for i in 0..u.nx {
                    assert!((u.u(i, j) - exact).abs() < 1e-10);
                    assert!(u.ux(i, j).unwrap().abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_data_converge_at_second_order() {
        let p = problem(
            SampledFunction::gaussian(0.0, 1.0).unwrap(),
            SampledFunction::zero(),
            RhsSpec::sine_gordon(),
        );
        let cert = certify(&p, &FdConfig::for_problem(&p, 0.1), 3).unwrap();
        let order = cert.observed_order.unwrap();
        assert!((1.8..=2.2).contains(&order), "{order}");
        assert!(cert.level_gaps[0] / cert.level_gaps[1] > 3.0);
    }

    #[test]
    fn unstable_steps_and_small_domains_are_rejected() {
        let p = problem(
            SampledFunction::zero(),
            SampledFunction::zero(),
            RhsSpec::zero(),
        );
        let good = FdConfig::for_problem(&p, 0.1);
        let fast = FdConfig {
            dt: 2.0 * good.dt,
            ..good
        };
        assert!(matches!(fd_solve(&p, &fast), Err(Error::Usage(_))));
        let narrow = FdConfig {
            half_width: 3.0,
            ..good
        };
        assert!(matches!(fd_solve(&p, &narrow), Err(Error::Usage(_))));
        assert!(certify(&p, &good, 1).is_err());
    }

    #[test]
    fn runaway_growth_is_divergence() {
        let p = problem(
            SampledFunction::constant(1.0).unwrap(),
            SampledFunction::zero(),
            RhsSpec::new(
                "runaway",
                |_, _, u, _| Ok(-2000.0 * u),
                2000.0,
                f64::INFINITY,
            )
            .unwrap(),
        );
        assert!(matches!(
            fd_solve(&p, &FdConfig::for_problem(&p, 0.2)),
            Err(Error::Divergence(_))
        ));
    }
}
