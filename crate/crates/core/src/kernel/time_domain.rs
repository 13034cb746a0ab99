//! Real-time evaluation of `G`, `K` and their distance derivatives.
//!
//! `G` is written with `y^2 = r^2 / (4v)`, which turns the
//! `v^{-3/2} e^{-r^2/4v}` endpoint behaviour into a Gaussian weight:
//!
//! ```text
//! G(r,t) = 1/sqrt(pi eps) * int_{r/(2 sqrt t)}^inf exp(-y^2 - b s) I0(2y sqrt((b-a) s)) dy,
//! s = t - r^2/(4y^2).
//! ```
//!
//! `K` is the Abel transform of `G`; with `tau = t sin^2(theta)` the
//! `1/sqrt(t - tau)` factor cancels against the Jacobian:
//!
//! ```text
//! K(r,t) = 2 sqrt(t/pi) * int_0^{pi/2} G(r, t sin^2 theta) sin theta dtheta.
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::params::{ModelParams, QuadratureSpec};
use crate::quadrature::{integrate, Channels, QuadResult};
use crate::special::{bessel_i0e, bessel_i1e_over_z};

/// Width of the Gaussian tail kept beyond the integrand's peak.
const GAUSSIAN_MARGIN: f64 = 12.0;

struct Window {
    lower: f64,
    upper: f64,
    peak: f64,
}

fn window(r: f64, t: f64, params: &ModelParams) -> Window {
    let lower = r / (2.0 * t.sqrt());
    let peak = ((params.b() - params.a()) * t).sqrt();
    Window {
        lower,
        upper: lower.max(peak) + GAUSSIAN_MARGIN,
        peak,
    }
}

fn integrate_split<T, F>(mut f: F, w: &Window, quad: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: crate::quadrature::Quadrand,
    F: FnMut(f64) -> T,
{
    if w.peak > w.lower {
        let left = integrate(&mut f, w.lower, w.peak, quad)?;
        let right = integrate(&mut f, w.peak, w.upper, quad)?;
        Ok(QuadResult {
            value: left.value + right.value,
            error: left.error + right.error,
            evaluations: left.evaluations + right.evaluations,
            intervals: left.intervals + right.intervals,
        })
    } else {
        integrate(f, w.lower, w.upper, quad)
    }
}

/// Elapsed time since the wave left the source, `t - r^2/(4y^2)`, clamped at 0.
fn residual_time(y: f64, r: f64, t: f64) -> f64 {
    if r == 0.0 {
        t
    } else {
        (t - r * r / (4.0 * y * y)).max(0.0)
    }
}

fn check_args(r: f64, t: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "scaled distance must be finite and >= 0 (got {r})"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be positive and finite (got {t})"
        )));
    }
    Ok(())
}

/// `G(r, t)` for `r >= 0`, `t > 0`.
pub fn g_time(r: f64, t: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    check_args(r, t)?;
    let (a, b) = (params.a(), params.b());
    let w = window(r, t, params);
    let integrand = |y: f64| {
        let s = residual_time(y, r, t);
        let z = 2.0 * y * ((b - a) * s).sqrt();
        (-y * y - b * s + z).exp() * bessel_i0e(z)
    };
    let res = integrate_split(integrand, &w, quad)?;
    Ok(res.value / (PI * params.epsilon()).sqrt())
}

/// `G` and `dG/dr` together, for `r > 0`.
pub fn g_with_slope(
    r: f64,
    t: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<[f64; 2]> {
    check_args(r, t)?;
    if r == 0.0 {
        return Err(Error::Domain("dG/dr is one-sided at r = 0".into()));
    }
    let (a, b) = (params.a(), params.b());
    let w = window(r, t, params);
    let integrand = |y: f64| {
        let s = residual_time(y, r, t);
        let z = 2.0 * y * ((b - a) * s).sqrt();
        let weight = (-y * y - b * s + z).exp();
        let i0 = bessel_i0e(z);
        let slope = b * r / (2.0 * y * y) * i0 - r * (b - a) * bessel_i1e_over_z(z);
        Channels([weight * i0, weight * slope])
    };
    let res = integrate_split(integrand, &w, quad)?;
    let norm = (PI * params.epsilon()).sqrt();
    let front = -(-r * r / (4.0 * t)).exp() / (2.0 * (PI * params.epsilon() * t).sqrt());
    Ok([res.value.0[0] / norm, front + res.value.0[1] / norm])
}

/// `dG/dr` for `r > 0`, `t > 0`.
pub fn dg_dr_time(r: f64, t: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    Ok(g_with_slope(r, t, params, quad)?[1])
}

/// Angle at which the Abel substitution reaches `tau = r^2`, where `G`
/// switches on; used as a breakpoint.
fn onset_angle(r: f64, t: f64) -> Option<f64> {
    let q = r / t.sqrt();
    (q > 0.0 && q < 1.0).then(|| q.asin())
}

fn abel<const N: usize, F>(mut inner: F, r: f64, t: f64, quad: &QuadratureSpec) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let mut failure: Option<Error> = None;
    let mut f = |theta: f64| {
        if failure.is_some() {
            return Channels([0.0; N]);
        }
        let sin = theta.sin();
        let tau = t * sin * sin;
        if tau <= 0.0 {
            return Channels([0.0; N]);
        }
        match inner(tau) {
            Ok(v) => Channels(v.map(|g| g * sin)),
            Err(e) => {
                failure = Some(e);
                Channels([0.0; N])
            }
        }
    };
    let value = match onset_angle(r, t) {
        Some(mid) => {
            let left = integrate(&mut f, 0.0, mid, quad)?;
            let right = integrate(&mut f, mid, FRAC_PI_2, quad)?;
            left.value + right.value
        }
        None => integrate(&mut f, 0.0, FRAC_PI_2, quad)?.value,
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let scale = 2.0 * (t / PI).sqrt();
    Ok(value.0.map(|v| v * scale))
}

/// `K` at scaled distance `r > 0` through the Abel transform of `G`.
pub fn k_from_g(r: f64, t: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    check_args(r, t)?;
    Ok(abel::<1, _>(|tau| Ok([g_time(r, tau, params, quad)?]), r, t, quad)?[0])
}

/// `K` and `dK/dr` at scaled distance `r > 0`.
pub fn k_with_slope(
    r: f64,
    t: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<[f64; 2]> {
    check_args(r, t)?;
    if r == 0.0 {
        return Err(Error::Domain(
            "the time-domain distance derivative needs x != 0".into(),
        ));
    }
    abel(|tau| g_with_slope(r, tau, params, quad), r, t, quad)
}

/// `G` for `a = b`, where the Bessel factor is identically 1:
/// `r/(4 sqrt(pi eps)) int_0^t v^{-3/2} e^{-r^2/4v} e^{-a(t-v)} dv`, integrated
/// directly in `v` as an independent reference.
pub fn g_time_degenerate(
    r: f64,
    t: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_args(r, t)?;
    if r == 0.0 {
        return Err(Error::Domain("the reduced integral needs r > 0".into()));
    }
    let a = params.a();
    let f = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            v.powf(-1.5) * (-r * r / (4.0 * v) - a * (t - v)).exp()
        }
    };
    let onset = (r * r / 4.0).min(t);
    let mut total = integrate(f, 0.0, onset, quad)?.value;
    total += integrate(f, onset, t, quad)?.value;
    Ok(r / (4.0 * (PI * params.epsilon()).sqrt()) * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(eps: f64, a: f64, b: f64) -> ModelParams {
        ModelParams::from_b(eps, a, b).unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn g_reference_value() {
        let q = QuadratureSpec::default();
        let v = g_time(1.0, 1.0, &p(1.0, 1.0, 2.0), &q).unwrap();
        assert!(rel(v, 0.137_790_242_646_119_1) < 1e-9, "{v}");
    }

    #[test]
    fn g_at_origin_closed_form() {
        let q = QuadratureSpec::default();
        let m = p(0.5, 1.0, 4.0);
        for &t in &[0.1, 1.0, 2.5] {
            let v = g_time(0.0, t, &m, &q).unwrap();
            let z = (m.b() - m.a()) * t / 2.0;
            let want =
                (-(m.a() + m.b()) * t / 2.0 + z).exp() * bessel_i0e(z) / (2.0 * m.epsilon().sqrt());
            assert!(rel(v, want) < 1e-9, "t={t}: {v} vs {want}");
        }
    }

    #[test]
    fn degenerate_case_matches_reduced_integral() {
        let q = QuadratureSpec::default();
        let m = p(1.0, 1.0, 1.0);
        for &(r, t) in &[(0.5, 0.3), (1.0, 1.0), (2.0, 2.0)] {
            let full = g_time(r, t, &m, &q).unwrap();
            let reduced = g_time_degenerate(r, t, &m, &q).unwrap();
            assert!(rel(full, reduced) < 1e-10, "r={r} t={t}");
        }
    }

    #[test]
    fn slope_matches_difference_quotient() {
        let q = QuadratureSpec::default().with_rel_tol(1e-12);
        let m = p(0.5, 0.5, 2.0);
        for &(r, t) in &[(0.3, 0.5), (1.0, 1.0), (2.5, 0.7)] {
            let [_, d] = g_with_slope(r, t, &m, &q).unwrap();
            let h = 1e-4;
            let fd =
                (g_time(r + h, t, &m, &q).unwrap() - g_time(r - h, t, &m, &q).unwrap()) / (2.0 * h);
            assert!(
                (d - fd).abs() < 1e-7 * (1.0 + d.abs()),
                "r={r} t={t}: {d} vs {fd}"
            );
        }
    }

    #[test]
    fn k_reference_values() {
        let q = QuadratureSpec::default();
        let m = p(0.5, 1.0, 2.0);
        let r = 1.0 / m.epsilon().sqrt();
        let [k, dk] = k_with_slope(r, 0.5, &m, &q).unwrap();
        assert!(rel(k, 0.051_778_842_497_067_632) < 1e-9, "{k}");
        let dx = dk / m.epsilon().sqrt();
        assert!(rel(dx, -0.145_667_073_604_729_64) < 1e-8, "{dx}");
        assert!(rel(k_from_g(r, 0.5, &m, &q).unwrap(), k) < 1e-12);

        let m = p(0.25, 0.5, 4.0);
        let k = k_from_g(0.7 / 0.5, 2.0, &m, &q).unwrap();
        assert!(rel(k, 0.319_546_074_893_670_48) < 1e-9, "{k}");
    }

    #[test]
    fn far_field_decays() {
        let q = QuadratureSpec::default();
        let m = p(1.0, 1.0, 2.0);
        let mut prev = f64::INFINITY;
        for k in 0..12 {
            let r = 1.0 + k as f64;
            let v = g_time(r, 1.0, &m, &q).unwrap();
            assert!(v >= 0.0 && v < prev);
            prev = v;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let q = QuadratureSpec::default();
        let m = p(1.0, 1.0, 2.0);
        assert!(g_time(-1.0, 1.0, &m, &q).is_err());
        assert!(g_time(1.0, 0.0, &m, &q).is_err());
        assert!(k_with_slope(0.0, 1.0, &m, &q).is_err());
    }
}
