//! Laplace-domain forms of the fundamental solution.
//!
//! Square roots are taken factor by factor with the principal branch, so
//! `sqrt(s (s+a) / (s+b))` is evaluated as `sqrt(s) sqrt(s+a) / sqrt(s+b)`.
//! That product is analytic off the real segments `[-a, 0]` and
//! `(-inf, -b]`, which keeps the Talbot contour clear of spurious cuts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{LaplacePoint, ModelParams};

fn check(r: f64, s: Complex64, params: &ModelParams) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "scaled distance must be finite and >= 0 (got {r})"
        )));
    }
    let bound = (-params.a()).max(-params.b());
    if !(s.re > bound) {
        return Err(Error::Domain(format!(
            "s = {s} is outside the convergence half-plane Re(s) > {bound}"
        )));
    }
    Ok(())
}

/// Decay rate in the scaled distance: `sqrt(s (s+a) / (s+b))`.
pub(crate) fn scaled_rate(s: Complex64, params: &ModelParams) -> Complex64 {
    s.sqrt() * (s + params.a()).sqrt() / (s + params.b()).sqrt()
}

pub(crate) fn g_hat_unchecked(r: f64, s: Complex64, params: &ModelParams) -> Complex64 {
    let denom = 2.0 * params.epsilon().sqrt() * (s + params.a()).sqrt() * (s + params.b()).sqrt();
    (-r * scaled_rate(s, params)).exp() / denom
}

/// Transform of the auxiliary kernel `G` at scaled distance `r = |x| / sqrt(eps)`.
pub fn g_hat(r: f64, s: LaplacePoint, params: &ModelParams) -> Result<Complex64> {
    check(r, s.s(), params)?;
    Ok(g_hat_unchecked(r, s.s(), params))
}

/// Transform of the fundamental solution, `K^ = G^ / sqrt(s)`.
pub fn k_hat(r: f64, s: LaplacePoint, params: &ModelParams) -> Result<Complex64> {
    check(r, s.s(), params)?;
    Ok(g_hat_unchecked(r, s.s(), params) / s.s().sqrt())
}

/// Number of channels in [`channel_transforms`].
pub(crate) const N_CHANNELS: usize = 7;

/// Transforms of `K, K_x, K_t, K_xx, K*, K*_x, K*_t` at physical offset `x`
/// (pointwise forms, valid for `x != 0`; at `x == 0` the odd channels are 0).
///
/// `K*` is the pointwise part of `(d_t + a - eps d_xx) K`, whose transform
/// is `b (s+a) / (s+b) K^`.
pub(crate) fn channel_transforms(
    x: f64,
    s: Complex64,
    params: &ModelParams,
) -> [Complex64; N_CHANNELS] {
    let sqrt_eps = params.epsilon().sqrt();
    let rate = scaled_rate(s, params) / sqrt_eps;
    let sign = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    let k = g_hat_unchecked(x.abs() / sqrt_eps, s, params) / s.sqrt();
    let star = k * (params.b() * (s + params.a()) / (s + params.b()));
    [
        k,
        -sign * rate * k,
        s * k,
        rate * rate * k,
        star,
        -sign * rate * star,
        s * star,
    ]
}
