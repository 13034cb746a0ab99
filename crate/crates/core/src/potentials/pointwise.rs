//! Single-point potentials by adaptive quadrature against the exact density.

use serde::{Deserialize, Serialize};

use super::sampled::SampledFunction;
use super::weights::PotentialConfig;
use super::Source;
use crate::error::{Error, Result};
use crate::kernel::{EvalPath, KernelEvaluator};
use crate::params::ModelParams;
use crate::quadrature::{integrate, Channels};

/// Surface-potential quantities of one density at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceValues {
    /// `u_g = int g K`.
    pub u: f64,
    /// `d/dx u_g`.
    pub ux: f64,
    /// `d/dt u_g`.
    pub ut: f64,
    /// `u*_g = (d_t + a - eps d_xx) u_g = e^{-bt} g(x) + int g K*`.
    pub star: f64,
    /// `d/dx u*_g`.
    pub star_x: f64,
    /// `d/dt u*_g`.
    pub star_t: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("potentials need t > 0 (got {t})")));
    }
    Ok(())
}

/// Integrates `density(xi) * channels(x - xi, t)` over the kernel's reach,
/// split at `xi = x` where the odd channels jump.
fn convolve<const N: usize, D, C>(
    density: D,
    select: C,
    x: f64,
    t: f64,
    params: &ModelParams,
    config: &PotentialConfig,
) -> Result<[f64; N]>
where
    D: Fn(f64) -> f64,
    C: Fn(&crate::kernel::KernelChannels) -> [f64; N],
{
    let eval = KernelEvaluator::new(*params, config.quad).with_path(EvalPath::Talbot);
    let reach = config.reach(params, t);
    let mut failure = None;
    let mut f = |xi: f64| {
        let offset = x - xi;
        match eval.channels(offset, t) {
            Ok(c) => {
                let g = density(xi);
                Channels(select(&c).map(|v| g * v))
            }
            Err(e) => {
                failure.get_or_insert(e);
                Channels([0.0; N])
            }
        }
    };
    let left = integrate(&mut f, x - reach, x, &config.quad)?;
    let right = integrate(&mut f, x, x + reach, &config.quad)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((left.value + right.value).0)
}

/// All surface-potential channels of `g` at `(x, t)`.
pub fn surface_values(
    g: &SampledFunction,
    x: f64,
    t: f64,
    params: &ModelParams,
    config: &PotentialConfig,
) -> Result<SurfaceValues> {
    check_time(t)?;
    let [u, ux, ut, star, star_x, star_t] = convolve(
        |xi| g.value(xi),
        |c| [c.k, c.dx, c.dt, c.star, c.star_dx, c.star_dt],
        x,
        t,
        params,
        config,
    )?;
    let decay = (-params.b() * t).exp();
    Ok(SurfaceValues {
        u,
        ux,
        ut,
        star: decay * g.value(x) + star,
        star_x: decay * g.derivative(x) + star_x,
        star_t: -params.b() * decay * g.value(x) + star_t,
    })
}

/// `u_g(x, t) = int g(xi) K(x - xi, t) dxi`.
pub fn surface_potential(
    g: &SampledFunction,
    x: f64,
    t: f64,
    params: &ModelParams,
    config: &PotentialConfig,
) -> Result<f64> {
    check_time(t)?;
    Ok(convolve(|xi| g.value(xi), |c| [c.k], x, t, params, config)?[0])
}

/// `u*_g(x, t) = (d_t + a - eps d_xx) u_g`.
pub fn surface_potential_star(
    g: &SampledFunction,
    x: f64,
    t: f64,
    params: &ModelParams,
    config: &PotentialConfig,
) -> Result<f64> {
    check_time(t)?;
    let [conv] = convolve(|xi| g.value(xi), |c| [c.star], x, t, params, config)?;
    Ok((-params.b() * t).exp() * g.value(x) + conv)
}

/// `u_f(x, t) = int_0^t int f(xi, tau) K(x - xi, t - tau) dxi dtau`.
///
/// Fails with a consistency error if the result violates
/// `|u_f| <= t sup|f| / a`.
pub fn volume_potential<S: Source + ?Sized>(
    f: &S,
    x: f64,
    t: f64,
    params: &ModelParams,
    config: &PotentialConfig,
) -> Result<f64> {
    check_time(t)?;
    let mut failure = None;
    let outer = config.quad.with_rel_tol(config.quad.rel_tol.max(1e-9));
    let inner = |tau: f64| -> f64 {
        let lag = t - tau;
        if lag <= 0.0 {
            return 0.0;
        }
        match convolve(|xi| f.value(xi, tau), |c| [c.k], x, lag, params, config) {
            Ok([v]) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let value = integrate(inner, 0.0, t, &outer)?.value;
    if let Some(e) = failure {
        return Err(e);
    }
    let bound = t * f.bound() / params.a();
    let slack = 1e-9 * bound + config.quad.abs_tol;
    if value.abs() > bound + slack {
        return Err(Error::Consistency(format!(
            "volume potential {value:e} at ({x}, {t}) exceeds the bound t sup|f| / a = {bound:e}"
        )));
    }
    Ok(value)
}
