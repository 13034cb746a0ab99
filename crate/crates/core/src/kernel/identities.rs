//! Numerical checks of the kernel's integral laws.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{talbot_channels, transform, EvalPath, KernelEvaluator};
use crate::error::{Error, Result};
use crate::params::{LaplacePoint, ModelParams, QuadratureSpec};
use crate::quadrature::{integrate, Channels};
use crate::talbot::DEFAULT_NODES;

/// Standard widths of diffusive spreading kept beyond the light cone when
/// integrating over `x`.
const SPREAD: f64 = 12.0;

/// Numeric and exact total mass of `K(., t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub t: f64,
    pub numeric: f64,
    pub exact: f64,
}

impl MassCheck {
    pub fn residual(&self) -> f64 {
        (self.numeric - self.exact).abs()
    }
}

/// Residuals of the three moment laws at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResiduals {
    pub t: f64,
    /// `int (d_t + a) K dx - 1`.
    pub damped: f64,
    /// `int (d_t + b) K dx - (e^{-at} + b (1 - e^{-at}) / a)`.
    pub relaxed: f64,
    /// `int (d_t + a - eps d_xx) K dx - (1 - e^{-bt})`, with `d_xx` pointwise.
    pub star: f64,
}

impl MomentResiduals {
    pub fn max_abs(&self) -> f64 {
        self.damped
            .abs()
            .max(self.relaxed.abs())
            .max(self.star.abs())
    }
}

/// One sample of the Laplace cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceSample {
    pub s_re: f64,
    pub s_im: f64,
    pub numeric_re: f64,
    pub numeric_im: f64,
    pub closed_re: f64,
    pub closed_im: f64,
    pub rel_error: f64,
}

/// Result of comparing the numerical Laplace integral of `G` with the
/// closed-form transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub r: f64,
    pub samples: Vec<LaplaceSample>,
    pub max_rel_error: f64,
}

/// Near-origin slope of `K` against its one-sided limit `-e^{-bt}/(2 eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxCheck {
    pub t: f64,
    /// Distance `|x|` at which the slope is sampled.
    pub offset: f64,
    /// `dK/d|x|` at `offset`.
    pub value: f64,
    pub limit: f64,
    pub rel_deviation: f64,
    /// Linear extrapolation to zero offset from `offset` and `2 offset`.
    pub extrapolated: f64,
    pub extrapolated_rel_deviation: f64,
}

fn outer_spec(quad: &QuadratureSpec) -> QuadratureSpec {
    quad.with_rel_tol(quad.rel_tol.max(1e-8))
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "t must be positive and finite (got {t})"
        )));
    }
    Ok(())
}

/// Integrates `K(., t)` over the line and compares with `(1 - e^{-at})/a`.
pub fn verify_mass(t: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<MassCheck> {
    check_time(t)?;
    let eval = KernelEvaluator::new(*params, *quad).with_path(EvalPath::TimeDomain);
    let reach = params.reach(t, SPREAD);
    let mut failure = None;
    let half = integrate(
        |x| match eval.k(x, t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        reach,
        &outer_spec(quad),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(MassCheck {
        t,
        numeric: 2.0 * half.value,
        exact: (1.0 - (-params.a() * t).exp()) / params.a(),
    })
}

/// Integrates `K`, `K_t` and the pointwise `K_xx` over the line and returns
/// the residuals of the three moment laws.
pub fn verify_moment_identities(
    t: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<MomentResiduals> {
    check_time(t)?;
    let reach = params.reach(t, SPREAD);
    let mut failure = None;
    let half = integrate(
        |x| match talbot_channels(x, t, params, DEFAULT_NODES) {
            Ok((c, _)) => Channels([c.k, c.dt, c.dxx]),
            Err(e) => {
                failure.get_or_insert(e);
                Channels([0.0; 3])
            }
        },
        0.0,
        reach,
        &outer_spec(quad),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let [mass, rate, curvature] = half.value.0.map(|v| 2.0 * v);
    let (a, b, eps) = (params.a(), params.b(), params.epsilon());
    let ea = (-a * t).exp();
    Ok(MomentResiduals {
        t,
        damped: rate + a * mass - 1.0,
        relaxed: rate + b * mass - (ea + b * (1.0 - ea) / a),
        star: rate + a * mass - eps * curvature - (1.0 - (-b * t).exp()),
    })
}

/// Upper bound on `G(r, t)` over `r >= 0`, `t > 0`.
pub fn g_sup_bound(params: &ModelParams) -> f64 {
    (params.b() / params.a()).sqrt() / (2.0 * params.epsilon().sqrt())
}

/// Compares `int_0^inf e^{-st} G(r,t) dt`, computed from the time-domain
/// `G`, with the closed-form transform at each sample.
///
/// The integral is cut at a horizon where the bound
/// `sup G * e^{-Re(s) T} / Re(s)` is below `1e-3 * rel_tol * |G^|`, so each
/// sample needs `Re(s) > 0`.
pub fn verify_laplace(
    r: f64,
    samples: &[LaplacePoint],
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<LaplaceCheck> {
    let sup = g_sup_bound(params);
    let mut out = Vec::with_capacity(samples.len());
    let mut worst: f64 = 0.0;
    for sample in samples {
        let s = sample.s();
        if !(s.re > 0.0) {
            return Err(Error::Domain(format!(
                "the truncated Laplace integral is certified only for Re(s) > 0 (got {s})"
            )));
        }
        let closed = transform::g_hat(r, *sample, params)?;
        let target = 1e-3 * quad.rel_tol * closed.norm();
        let horizon = ((sup / (s.re * target)).ln() / s.re).max(1.0);
        let mut failure = None;
        let mut f = |t: f64| {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            match super::g_time(r, t, params, quad) {
                Ok(g) => (-s * t).exp() * g,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let mut numeric = Complex64::new(0.0, 0.0);
        let mut lo = 0.0;
        let mut width = (1.0 / s.re).min(1.0);
        while lo < horizon {
            let hi = (lo + width).min(horizon);
            numeric += integrate(&mut f, lo, hi, quad)?.value;
            lo = hi;
            width *= 2.0;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        let rel_error = (numeric - closed).norm() / closed.norm();
        worst = worst.max(rel_error);
        out.push(LaplaceSample {
            s_re: s.re,
            s_im: s.im,
            numeric_re: numeric.re,
            numeric_im: numeric.im,
            closed_re: closed.re,
            closed_im: closed.im,
            rel_error,
        });
    }
    Ok(LaplaceCheck {
        r,
        samples: out,
        max_rel_error: worst,
    })
}

/// Samples `dK/d|x|` at `|x| = offset` by the time-domain route and
/// compares it with the limit `-e^{-bt}/(2 eps)`.
pub fn flux_check(
    t: f64,
    offset: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<FluxCheck> {
    check_time(t)?;
    if !(offset > 0.0) {
        return Err(Error::Domain(format!(
            "offset must be positive (got {offset})"
        )));
    }
    let eval = KernelEvaluator::new(*params, *quad);
    let value = eval.radial_slope(offset, t)?;
    let doubled = eval.radial_slope(2.0 * offset, t)?;
    let limit = -(-params.b() * t).exp() / (2.0 * params.epsilon());
    let extrapolated = 2.0 * value - doubled;
    Ok(FluxCheck {
        t,
        offset,
        value,
        limit,
        rel_deviation: (value - limit).abs() / limit.abs(),
        extrapolated,
        extrapolated_rel_deviation: (extrapolated - limit).abs() / limit.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(eps: f64, a: f64, b: f64) -> ModelParams {
        ModelParams::from_b(eps, a, b).unwrap()
    }

    #[test]
    fn mass_law() {
        let q = QuadratureSpec::default();
        let m = verify_mass(1.0, &p(1.0, 1.0, 2.0), &q).unwrap();
        assert!((m.exact - 0.632_120_6).abs() < 1e-7);
        assert!(m.residual() < 1e-8, "{m:?}");
        let m = verify_mass(3.0, &p(0.5, 2.0, 4.0), &q).unwrap();
        assert!((m.exact - 0.498_760_6).abs() < 1e-7);
        assert!(m.residual() < 1e-8, "{m:?}");
    }

    #[test]
    fn moment_laws() {
        let q = QuadratureSpec::default();
        let r = verify_moment_identities(1.0, &p(1.0, 1.0, 2.0), &q).unwrap();
        assert!(r.max_abs() < 1e-8, "{r:?}");
        let r = verify_moment_identities(0.1, &p(0.25, 0.5, 8.0), &q).unwrap();
        assert!(r.max_abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn laplace_integral_matches_transform() {
        let q = QuadratureSpec::default();
        let m = p(1.0, 1.0, 2.0);
        let s = [
            LaplacePoint::real(1.0, &m).unwrap(),
            LaplacePoint::new(Complex64::new(2.0, 1.0), &m).unwrap(),
        ];
        let c = verify_laplace(1.0, &s, &m, &q).unwrap();
        assert!(c.max_rel_error < 1e-8, "{c:?}");
        assert!(c.samples[0].numeric_im.abs() < 1e-15);
    }

    #[test]
    fn laplace_rejects_uncertifiable_samples() {
        let q = QuadratureSpec::default();
        let m = p(1.0, 1.0, 2.0);
        let s = [LaplacePoint::real(-0.5, &m).unwrap()];
        assert!(verify_laplace(1.0, &s, &m, &q).is_err());
    }

    #[test]
    fn sup_bound_holds_on_samples() {
        let q = QuadratureSpec::default();
        for m in [p(1.0, 0.5, 8.0), p(0.25, 1.0, 2.0), p(0.5, 2.0, 2.0)] {
            let bound = g_sup_bound(&m);
            for &r in &[0.0, 0.1, 1.0, 4.0] {
                for &t in &[0.01, 0.2, 1.0, 5.0, 20.0] {
                    assert!(super::super::g_time(r, t, &m, &q).unwrap() <= bound);
                }
            }
        }
    }

    #[test]
    fn flux_extrapolation_approaches_limit() {
        let q = QuadratureSpec::default();
        let m = p(0.5, 1.0, 2.0);
        let f = flux_check(1.0, 1e-3 * m.epsilon().sqrt(), &m, &q).unwrap();
        assert!((f.limit + 0.135_335).abs() < 1e-6);
        assert!(f.extrapolated_rel_deviation < f.rel_deviation);
        assert!(f.extrapolated_rel_deviation < 1e-4, "{f:?}");
    }
}
