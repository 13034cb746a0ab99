//! Convolution weights of the kernel channels on a uniform lattice.
//!
//! A density sampled at lattice nodes is interpolated cell by cell with the
//! cubic through the four nearest nodes; integrating that interpolant
//! against a kernel slice gives one weight per node offset, so that
//! `int g(xi) K(x_i - xi, t) dxi ~= sum_m w_m g_{i-m}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelEvaluator;
use crate::params::{ModelParams, QuadratureSpec};
use crate::quadrature::gauss_legendre_unit;

/// Settings for potential evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    /// Diffusive widths kept beyond the light cone when truncating kernels.
    pub spread: f64,
    /// Gauss-Legendre points per sub-cell for kernel moments.
    pub gauss_points: usize,
    /// Weights below this fraction of the largest are dropped from the tails.
    pub trim: f64,
    /// Allowed gap between the summed weights and the exact kernel mass.
    pub mass_tolerance: f64,
    /// Tolerances for pointwise (adaptive) potential quadrature.
    pub quad: QuadratureSpec,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            spread: 12.0,
            gauss_points: 8,
            trim: 1e-18,
            mass_tolerance: 1e-8,
            quad: QuadratureSpec::default(),
        }
    }
}

impl PotentialConfig {
    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if !(self.spread > 0.0)
            || self.gauss_points < 2
            || !(self.trim >= 0.0)
            || !(self.mass_tolerance > 0.0)
        {
            return Err(Error::Usage(format!(
                "invalid potential configuration {self:?}"
            )));
        }
        Ok(())
    }

    /// Distance beyond which the kernel after time `lag` is negligible.
    pub fn reach(&self, params: &ModelParams, lag: f64) -> f64 {
        params.reach(lag, self.spread)
    }

    /// Half-width of the spatial window needed to evaluate potentials on
    /// `[x_min, x_max]` up to time `horizon`.
    pub fn cutoff_half_width(
        &self,
        params: &ModelParams,
        x_min: f64,
        x_max: f64,
        horizon: f64,
    ) -> f64 {
        x_min.abs().max(x_max.abs()) + self.reach(params, horizon)
    }
}

/// Node weights of the four kernel channels at one time lag, indexed by
/// offset `m` in `-half..=half`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagWeights {
    pub lag: f64,
    pub half: usize,
    pub k: Vec<f64>,
    pub kx: Vec<f64>,
    pub star: Vec<f64>,
    pub star_x: Vec<f64>,
    /// `|sum w_K - (1 - e^{-a lag}) / a|`.
    pub mass_defect: f64,
}

const CHANNELS: usize = 4;

/// Lagrange basis on nodes `-1, 0, 1, 2` at `s` in `[0, 1]`.
fn cubic_basis(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

impl LagWeights {
    /// Builds the weights for lattice spacing `h` at time lag `lag > 0`.
    pub fn build(
        eval: &KernelEvaluator,
        h: f64,
        lag: f64,
        config: &PotentialConfig,
    ) -> Result<Self> {
        if !(lag > 0.0) || !(h > 0.0) {
            return Err(Error::Usage(format!(
                "lag and spacing must be positive (got {lag}, {h})"
            )));
        }
        let params = *eval.params();
        let reach = config.reach(&params, lag) + 2.0 * h;
        let cells = (reach / h).ceil() as usize;
        let sub = ((2.0 * h / (params.epsilon() * lag).sqrt()).ceil() as usize).max(1);
        let (gl_nodes, gl_weights) = gauss_legendre_unit(config.gauss_points);
        let mut nodes = Vec::with_capacity(sub * gl_nodes.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for j in 0..sub {
            for (n, w) in gl_nodes.iter().zip(&gl_weights) {
                nodes.push((j as f64 + n) / sub as f64);
                weights.push(w / sub as f64);
            }
        }
        let basis: Vec<[f64; 4]> = nodes.iter().map(|&s| cubic_basis(s)).collect();
        let npts = nodes.len();

        // kernel at y = (d - s) h for positive cells d = 1..=cells+1
        let mut samples = vec![[0.0; CHANNELS]; (cells + 1) * npts];
        for d in 1..=cells + 1 {
            for (p, &s) in nodes.iter().enumerate() {
                let y = (d as f64 - s) * h;
                let c = eval.channels(y, lag)?;
                samples[(d - 1) * npts + p] = [c.k, c.dx, c.star, c.star_dx];
            }
        }

        // cells d = -cells..=cells+1, node offsets m = d - q for q in -1..=2
        let half = cells + 2;
        let width = 2 * half + 1;
        let mut out = vec![[0.0; CHANNELS]; width];
        for d in -(cells as isize)..=(cells as isize + 1) {
            for p in 0..npts {
                let (value, sign) = if d >= 1 {
                    (samples[(d as usize - 1) * npts + p], 1.0)
                } else {
                    // y < 0: mirror to cell |d| + 1 at the reflected node
                    (samples[(-d) as usize * npts + (npts - 1 - p)], -1.0)
                };
                for (q, b) in basis[p].iter().enumerate() {
                    let m = d - (q as isize - 1);
                    let slot = &mut out[(m + half as isize) as usize];
                    let w = h * weights[p] * b;
                    slot[0] += w * value[0];
                    slot[1] += w * sign * value[1];
                    slot[2] += w * value[2];
                    slot[3] += w * sign * value[3];
                }
            }
        }

        // trim negligible tails symmetrically
        let peak = out
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        let mut keep = half;
        while keep > 0 {
            let lo = &out[half - keep];
            let hi = &out[half + keep];
            if lo
                .iter()
                .chain(hi.iter())
                .all(|v| v.abs() <= config.trim * peak)
            {
                keep -= 1;
            } else {
                break;
            }
        }
        let slice = &out[half - keep..=half + keep];
        let pick = |c: usize| slice.iter().map(|v| v[c]).collect::<Vec<_>>();
        let k = pick(0);
        let exact = (1.0 - (-params.a() * lag).exp()) / params.a();
        let mass_defect = (k.iter().sum::<f64>() - exact).abs();
        if mass_defect > config.mass_tolerance * exact.max(lag) {
            return Err(Error::Accuracy {
                what: format!("kernel weights at lag {lag} miss the mass law"),
                estimate: mass_defect,
            });
        }
        Ok(Self {
            lag,
            half: keep,
            k,
            kx: pick(1),
            star: pick(2),
            star_x: pick(3),
            mass_defect,
        })
    }

    /// Weight of channel `w` at offset `m`, zero outside the support.
    pub fn at(w: &[f64], half: usize, m: isize) -> f64 {
        let idx = m + half as isize;
        if idx < 0 || idx as usize >= w.len() {
            0.0
        } else {
            w[idx as usize]
        }
    }
}

/// Weight of level `k` in the composite rule for `int_0^{t_j}` on the
/// uniform levels `t_k = k dt`: Simpson for even `j`, and a 3/8 panel on
/// the first three steps followed by Simpson for odd `j`. For `j = 1` the
/// rule is Simpson with the midpoint carried by [`half_step_weight`].
pub fn time_weight(j: usize, k: usize, dt: f64) -> f64 {
    debug_assert!(k <= j);
    if j == 0 {
        return 0.0;
    }
    if j == 1 {
        return dt / 6.0;
    }
    let simpson = |k: usize, lo: usize, hi: usize| -> f64 {
        if k == lo || k == hi {
            1.0 / 3.0
        } else if !(k - lo).is_multiple_of(2) {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        }
    };
    let c = if j.is_multiple_of(2) {
        simpson(k, 0, j)
    } else {
        let three_eighths = [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0];
        let mut c = 0.0;
        if k <= 3 {
            c += three_eighths[k];
        }
        if k >= 3 && j > 3 {
            c += simpson(k, 3, j);
        }
        c
    };
    c * dt
}

/// Weight of the midpoint `dt / 2` in the rule for `int_0^{dt}`.
pub fn half_step_weight(dt: f64) -> f64 {
    2.0 * dt / 3.0
}

/// Adds `scale * sum_m w_m data[clamp(i - m)]` to `out[i]`, extending
/// `data` by its end values.
pub fn convolve_clamped(w: &[f64], half: usize, data: &[f64], scale: f64, out: &mut [f64]) {
    let n = data.len();
    debug_assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    let mut padded = Vec::with_capacity(n + 2 * half);
    padded.extend(std::iter::repeat_n(data[0], half));
    padded.extend_from_slice(data);
    padded.extend(std::iter::repeat_n(data[n - 1], half));
    for (i, o) in out.iter_mut().enumerate() {
        // index i - m (m = l - half) maps to padded[i + 2 half - l]
        let window = &padded[i..i + 2 * half + 1];
        let acc: f64 = w.iter().zip(window.iter().rev()).map(|(a, b)| a * b).sum();
        *o += scale * acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evaluator() -> KernelEvaluator {
        KernelEvaluator::new(
            ModelParams::from_b(1.0, 1.0, 2.0).unwrap(),
            QuadratureSpec::default(),
        )
    }

    #[test]
    fn time_rule_integrates_cubics() {
        let dt = 0.1;
        for j in 1..12 {
            let t = j as f64 * dt;
            let mid = |p: i32| {
                if j == 1 {
                    half_step_weight(dt) * (0.5 * dt).powi(p)
                } else {
                    0.0
                }
            };
            let num: f64 = (0..=j)
                .map(|k| time_weight(j, k, dt) * (k as f64 * dt).powi(3))
                .sum::<f64>()
                + mid(3);
            let want = t.powi(4) / 4.0;
            assert!((num - want).abs() < 1e-14, "j={j}: {num} vs {want}");
            let ones: f64 = (0..=j).map(|k| time_weight(j, k, dt)).sum::<f64>() + mid(0);
            assert!((ones - t).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_is_a_partition_of_unity() {
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let b = cubic_basis(s);
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let moment: f64 = b
                .iter()
                .zip([-1.0, 0.0, 1.0, 2.0])
                .map(|(w, x)| w * x * x * x)
                .sum();
            assert!((moment - s * s * s).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_satisfy_mass_and_parity() {
        let e = evaluator();
        let cfg = PotentialConfig::default();
        for &lag in &[0.025, 0.5, 1.0] {
            let w = LagWeights::build(&e, 0.1, lag, &cfg).unwrap();
            assert!(w.mass_defect < 1e-10, "lag {lag}: {}", w.mass_defect);
            let n = w.k.len();
            for m in 0..n {
                assert!((w.k[m] - w.k[n - 1 - m]).abs() < 1e-15);
                assert!((w.kx[m] + w.kx[n - 1 - m]).abs() < 1e-15);
            }
            // star channel integrates to 1 - e^{-b lag}
            let s: f64 = w.star.iter().sum();
            assert!((s - (1.0 - (-2.0 * lag).exp())).abs() < 1e-9);
            // derivative weights annihilate constants
            assert!(w.kx.iter().sum::<f64>().abs() < 1e-13);
        }
    }

    #[test]
    fn weights_reproduce_convolution_of_linear_data() {
        // d/dx of (K * g) for g(x) = x is the kernel mass
        let e = evaluator();
        let w = LagWeights::build(&e, 0.1, 0.3, &PotentialConfig::default()).unwrap();
        let first_moment: f64 = (0..w.kx.len())
            .map(|l| w.kx[l] * -((l as f64 - w.half as f64) * 0.1))
            .sum();
        let mass = (1.0 - (-0.3f64).exp()) / 1.0;
        assert!((first_moment - mass).abs() < 1e-9, "{first_moment}");
    }

    #[test]
    fn clamped_convolution() {
        let w = [0.25, 0.5, 0.25];
        let data = [1.0, 2.0, 3.0, 4.0];
        let mut out = [0.0; 4];
        convolve_clamped(&w, 1, &data, 2.0, &mut out);
        assert_eq!(out, [2.5, 4.0, 6.0, 7.5]);
    }
}
