//! Fundamental solution of `(eps d_t + c^2) d_xx - (d_t + a) d_t`.
//!
//! Two independent evaluation routes are provided: a real-time quadrature
//! of the Bessel-function representation, and fixed-Talbot inversion of the
//! closed-form transform. [`KernelEvaluator`] selects between them.

mod identities;
mod time_domain;
mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, QuadratureSpec};
use crate::talbot;

pub use identities::{
    flux_check, verify_laplace, verify_mass, verify_moment_identities, FluxCheck, LaplaceCheck,
    MassCheck, MomentResiduals,
};
pub use time_domain::{
    dg_dr_time, g_time, g_time_degenerate, g_with_slope, k_from_g, k_with_slope,
};
pub use transform::{g_hat, k_hat};

/// Default scaled distance below which the transform route is used.
pub const DEFAULT_R_SWITCH: f64 = 1e-3;

/// Largest node count tried by the scalar Talbot evaluation.
const MAX_TALBOT_NODES: usize = 128;

/// Relative agreement that stops the node-count increase.
const TALBOT_AGREEMENT: f64 = 1e-10;

/// Which computation produces kernel values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalPath {
    /// Real-time quadrature, with Talbot inversion below `r_switch`.
    TimeDomain,
    /// Talbot inversion everywhere.
    Talbot,
    /// Both routes, failing on disagreement.
    CrossChecked,
}

/// `K` with its first time and space derivatives and the pointwise second
/// space derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDerivatives {
    pub k: f64,
    pub dx: f64,
    pub dt: f64,
    pub dxx: f64,
}

/// Kernel channels used by the potentials, all at one `(x, t)`.
///
/// `star` is the pointwise part of `(d_t + a - eps d_xx) K`; the singular
/// part `e^{-bt} delta(x)` is handled by the potentials directly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelChannels {
    pub k: f64,
    pub dx: f64,
    pub dt: f64,
    pub dxx: f64,
    pub star: f64,
    pub star_dx: f64,
    pub star_dt: f64,
}

impl KernelChannels {
    fn from_array(v: [f64; transform::N_CHANNELS]) -> Self {
        Self {
            k: v[0],
            dx: v[1],
            dt: v[2],
            dxx: v[3],
            star: v[4],
            star_dx: v[5],
            star_dt: v[6],
        }
    }
}

/// Talbot inversion of all kernel channels at `(x, t)`, with a round-off
/// scale per channel.
pub fn talbot_channels(
    x: f64,
    t: f64,
    params: &ModelParams,
    nodes: usize,
) -> Result<(KernelChannels, KernelChannels)> {
    if !(t > 0.0 && t.is_finite()) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "kernel needs finite x and t > 0 (got x={x}, t={t})"
        )));
    }
    let (values, noise) =
        talbot::invert_bundle_with_noise(|s| transform::channel_transforms(x, s, params), t, nodes);
    Ok((
        KernelChannels::from_array(values),
        KernelChannels::from_array(noise),
    ))
}

/// `K(x, t)` by the time-domain route, delegating to Talbot inversion
/// when `|x|/sqrt(eps)` is below [`DEFAULT_R_SWITCH`].
pub fn k_time(x: f64, t: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    KernelEvaluator::new(*params, *quad).k(x, t)
}

/// `(K, dK/dx, dK/dt, d2K/dx2)` by the time-domain route for `K` and `dK/dx`
/// and Talbot inversion for the rest.
pub fn k_derivatives(
    x: f64,
    t: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelDerivatives> {
    KernelEvaluator::new(*params, *quad).k_derivatives(x, t)
}

/// Configured kernel evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEvaluator {
    params: ModelParams,
    quad: QuadratureSpec,
    r_switch: f64,
    path: EvalPath,
    talbot_nodes: usize,
}

impl KernelEvaluator {
    pub fn new(params: ModelParams, quad: QuadratureSpec) -> Self {
        Self {
            params,
            quad,
            r_switch: DEFAULT_R_SWITCH,
            path: EvalPath::TimeDomain,
            talbot_nodes: talbot::DEFAULT_NODES,
        }
    }

    pub fn with_path(mut self, path: EvalPath) -> Self {
        self.path = path;
        self
    }

    /// Node count of the Talbot contour.
    pub fn with_talbot_nodes(mut self, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Usage(format!(
                "Talbot inversion needs at least 2 nodes (got {nodes})"
            )));
        }
        self.talbot_nodes = nodes;
        Ok(self)
    }

    pub fn with_r_switch(mut self, r_switch: f64) -> Result<Self> {
        if !(r_switch > 0.0 && r_switch.is_finite()) {
            return Err(Error::Usage(format!(
                "r_switch must be positive (got {r_switch})"
            )));
        }
        self.r_switch = r_switch;
        Ok(self)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn path(&self) -> EvalPath {
        self.path
    }

    pub fn r_switch(&self) -> f64 {
        self.r_switch
    }

    fn check(&self, x: f64, t: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("x must be finite (got {x})")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "t must be positive and finite (got {t})"
            )));
        }
        Ok(self.params.scaled_distance(x))
    }

    /// Agreement threshold between the two routes.
    fn agreement(&self, value: f64, noise: f64) -> f64 {
        100.0 * self.quad.rel_tol * value.abs() + 10.0 * noise + self.quad.abs_tol
    }

    /// `G(r, t)` by real-time quadrature.
    pub fn g(&self, r: f64, t: f64) -> Result<f64> {
        g_time(r, t, &self.params, &self.quad)
    }

    /// `K(x, t)`.
    pub fn k(&self, x: f64, t: f64) -> Result<f64> {
        let r = self.check(x, t)?;
        let near = r < self.r_switch;
        match self.path {
            EvalPath::Talbot => self.talbot_k(x, t),
            EvalPath::TimeDomain if near => self.talbot_k(x, t),
            EvalPath::TimeDomain => k_from_g(r, t, &self.params, &self.quad),
            EvalPath::CrossChecked => {
                let (tal, noise) = talbot_channels(x, t, &self.params, self.talbot_nodes)?;
                if near {
                    return Ok(tal.k);
                }
                let direct = k_from_g(r, t, &self.params, &self.quad)?;
                self.compare("K", x, t, direct, tal.k, noise.k)?;
                Ok(direct)
            }
        }
    }

    /// Talbot `K`, raising the node count by half until two successive
    /// values agree; the discretization error of a fixed count dominates
    /// where `K` is many orders below its peak.
    fn talbot_k(&self, x: f64, t: f64) -> Result<f64> {
        let (c, n) = talbot_channels(x, t, &self.params, self.talbot_nodes)?;
        let (mut value, mut noise) = (c.k, n.k);
        let mut nodes = self.talbot_nodes;
        while nodes < MAX_TALBOT_NODES {
            nodes = (nodes + nodes / 2).min(MAX_TALBOT_NODES);
            let (c, n) = talbot_channels(x, t, &self.params, nodes)?;
            if (c.k - value).abs() <= TALBOT_AGREEMENT * value.abs() + 10.0 * (noise + n.k) {
                break;
            }
            (value, noise) = (c.k, n.k);
        }
        Ok(value)
    }

    fn compare(
        &self,
        what: &str,
        x: f64,
        t: f64,
        direct: f64,
        inverted: f64,
        noise: f64,
    ) -> Result<()> {
        let gap = (direct - inverted).abs();
        if gap > self.agreement(direct, noise) {
            return Err(Error::Consistency(format!(
                "{what}({x}, {t}): time-domain {direct:e} and Talbot {inverted:e} differ by {gap:e}"
            )));
        }
        Ok(())
    }

    /// `(K, dK/dx, dK/dt, d2K/dx2)` at `(x, t)`; the second derivative is the
    /// pointwise one.
    pub fn k_derivatives(&self, x: f64, t: f64) -> Result<KernelDerivatives> {
        let r = self.check(x, t)?;
        let (tal, noise) = talbot_channels(x, t, &self.params, self.talbot_nodes)?;
        let from_talbot = KernelDerivatives {
            k: tal.k,
            dx: tal.dx,
            dt: tal.dt,
            dxx: tal.dxx,
        };
        if self.path == EvalPath::Talbot {
            return Ok(from_talbot);
        }
        if x == 0.0 {
            return Err(Error::Domain(
                "the time-domain dK/dx is one-sided at x = 0; use the Talbot path".into(),
            ));
        }
        if r < self.r_switch {
            return Ok(from_talbot);
        }
        let [k, dk_dr] = k_with_slope(r, t, &self.params, &self.quad)?;
        let dx = x.signum() * dk_dr / self.params.epsilon().sqrt();
        if self.path == EvalPath::CrossChecked {
            self.compare("K", x, t, k, tal.k, noise.k)?;
            self.compare("dK/dx", x, t, dx, tal.dx, noise.dx)?;
        }
        Ok(KernelDerivatives {
            k,
            dx,
            dt: tal.dt,
            dxx: tal.dxx,
        })
    }

    /// All seven kernel channels at `(x, t)` by Talbot inversion.
    pub fn channels(&self, x: f64, t: f64) -> Result<KernelChannels> {
        self.check(x, t)?;
        Ok(talbot_channels(x, t, &self.params, self.talbot_nodes)?.0)
    }

    /// Channels with their round-off scales.
    pub fn channels_with_noise(&self, x: f64, t: f64) -> Result<(KernelChannels, KernelChannels)> {
        self.check(x, t)?;
        talbot_channels(x, t, &self.params, self.talbot_nodes)
    }

    /// `dK/d|x|` by the time-domain route at `|x| > 0`.
    pub fn radial_slope(&self, distance: f64, t: f64) -> Result<f64> {
        let r = self.check(distance, t)?;
        let [_, dk_dr] = k_with_slope(r, t, &self.params, &self.quad)?;
        Ok(dk_dr / self.params.epsilon().sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(eps: f64, a: f64, b: f64) -> KernelEvaluator {
        KernelEvaluator::new(
            ModelParams::from_b(eps, a, b).unwrap(),
            QuadratureSpec::default(),
        )
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn origin_value_from_transform() {
        let e = eval(1.0, 1.0, 2.0);
        assert!(rel(e.k(0.0, 1.0).unwrap(), 0.236_576_526_884_177_96) < 1e-9);
    }

    #[test]
    fn routes_agree_at_reference_point() {
        let e = eval(0.5, 1.0, 2.0).with_path(EvalPath::CrossChecked);
        let v = e.k(1.0, 0.5).unwrap();
        assert!(rel(v, 0.051_778_842_497_067_632) < 1e-9);
        let tal = e.with_path(EvalPath::Talbot).k(1.0, 0.5).unwrap();
        assert!(rel(tal, v) < 1e-6);
    }

    #[test]
    fn derivative_reference_values() {
        let e = eval(1.0, 1.0, 2.0).with_path(EvalPath::CrossChecked);
        let d = e.k_derivatives(1.0, 0.5).unwrap();
        assert!(rel(d.dt, 0.187_173_698_046_785_89) < 1e-8, "{}", d.dt);
        assert!(rel(d.dxx, 0.133_258_075_112_690_28) < 1e-8, "{}", d.dxx);
        let h = 1e-4;
        let fd = (e.k(1.0, 0.5 + h).unwrap() - e.k(1.0, 0.5 - h).unwrap()) / (2.0 * h);
        assert!((fd - d.dt).abs() < 1e-5);
    }

    #[test]
    fn symmetry_in_x() {
        let e = eval(0.25, 0.5, 4.0);
        for &x in &[1e-4, 0.3, 1.7] {
            assert_eq!(e.k(x, 0.8).unwrap(), e.k(-x, 0.8).unwrap());
            let p = e.k_derivatives(x, 0.8).unwrap();
            let m = e.k_derivatives(-x, 0.8).unwrap();
            assert_eq!(p.dx, -m.dx);
            assert_eq!(p.k, m.k);
        }
    }

    #[test]
    fn x_derivative_at_origin_is_a_domain_error() {
        let e = eval(1.0, 1.0, 2.0);
        assert!(matches!(e.k_derivatives(0.0, 1.0), Err(Error::Domain(_))));
        assert!(e
            .with_path(EvalPath::Talbot)
            .k_derivatives(0.0, 1.0)
            .is_ok());
    }

    #[test]
    fn star_channel_is_consistent() {
        let e = eval(0.5, 1.0, 2.0);
        let c = e.channels(0.4, 0.7).unwrap();
        let star = c.dt + 1.0 * c.k - 0.5 * c.dxx;
        assert!((star - c.star).abs() < 1e-9);
    }

    #[test]
    fn invalid_r_switch() {
        assert!(eval(1.0, 1.0, 2.0).with_r_switch(0.0).is_err());
    }

    #[test]
    fn routes_agree_far_in_the_tail() {
        let p = ModelParams::from_b(0.25, 1.0, 2.0).unwrap();
        let quad = QuadratureSpec::new(1e-10, f64::MIN_POSITIVE, 200).unwrap();
        let (x, t) = (-2.854_351_112_829_255, 0.137_776_816_830_222_08);
        let direct = KernelEvaluator::new(p, quad)
            .with_path(EvalPath::TimeDomain)
            .k(x, t)
            .unwrap();
        let inverted = KernelEvaluator::new(p, quad)
            .with_path(EvalPath::Talbot)
            .k(x, t)
            .unwrap();
        assert!(direct < 1e-28);
        assert!(rel(direct, inverted) < 1e-9, "{direct:e} vs {inverted:e}");
    }
}
