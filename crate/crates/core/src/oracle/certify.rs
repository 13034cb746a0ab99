//! Richardson certification of the finite-difference solution.

use serde::{Deserialize, Serialize};

use super::fd::{fd_solve, FdConfig};
use crate::error::{Error, Result};
use crate::picard::Problem;
use crate::potentials::SpaceTimeField;

/// Formal spatial order of the scheme.
pub const FORMAL_ORDER: f64 = 2.0;

/// Safety factor on the band when an order is observed from three levels.
pub const SAFETY_OBSERVED: f64 = 1.25;

/// Safety factor on the band when only two levels are available.
pub const SAFETY_ASSUMED: f64 = 3.0;

/// Differences below this are treated as converged when checking monotonicity.
const NOISE_FLOOR: f64 = 1e-12;

/// Error band of the finest finite-difference solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Spacings used, coarsest first.
    pub spacings: Vec<f64>,
    /// `sup` differences between consecutive levels in the `u` channel.
    pub level_gaps: Vec<f64>,
    /// Order observed from the last three levels, if there are three.
    pub observed_order: Option<f64>,
    /// Order used to scale the band.
    pub order: f64,
    pub safety: f64,
    /// Finest solution.
    pub solution: SpaceTimeField,
    /// Richardson-extrapolated solution.
    pub extrapolated: SpaceTimeField,
    /// Per-node band in the `u` channel, time-major like the field.
    pub band_u: Vec<f64>,
    /// Per-node band in the `u_x` channel.
    pub band_ux: Vec<f64>,
}

impl Certificate {
    pub fn max_band_u(&self) -> f64 {
        self.band_u.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_band_ux(&self) -> f64 {
        self.band_ux.iter().copied().fold(0.0, f64::max)
    }

    /// `(sup |u - u_fd|, sup |u - u_fd| - band)` on the finest solution's nodes.
    pub fn compare(&self, field: &SpaceTimeField) -> Result<Comparison> {
        let (gap_u, _) = field.channel_gaps(&self.solution)?;
        let mut excess: f64 = f64::NEG_INFINITY;
        let mut l2 = 0.0;
        for (k, (a, b)) in field.u.iter().zip(&self.solution.u).enumerate() {
            let d = (a - b).abs();
            l2 += d * d;
            excess = excess.max(d - self.band_u[k]);
        }
        let nodes = field.u.len() as f64;
        Ok(Comparison {
            linf_gap: gap_u,
            l2_gap: (l2 * field.dx * field.dt).sqrt(),
            rms_gap: (l2 / nodes).sqrt(),
            max_band: self.max_band_u(),
            pointwise_excess: excess,
        })
    }
}

/// Gap between a field and the certified solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub linf_gap: f64,
    /// Discrete `L^2(D)` norm of the gap.
    pub l2_gap: f64,
    pub rms_gap: f64,
    pub max_band: f64,
    /// `max_node (|gap| - band)`; negative when every node is inside its band.
    pub pointwise_excess: f64,
}

impl Comparison {
    /// Worst gap within the worst band, plus `slack`.
    pub fn within(&self, slack: f64) -> bool {
        self.linf_gap <= self.max_band + slack
    }
}

/// Solves at `levels` spacings `dx, dx/2, ...` and estimates the finest
/// solution's error per node by Richardson extrapolation.
pub fn certify(problem: &Problem, config: &FdConfig, levels: usize) -> Result<Certificate> {
    if levels < 2 {
        return Err(Error::Usage(format!(
            "certification needs at least 2 levels (got {levels})"
        )));
    }
    let mut configs = vec![*config];
    for _ in 1..levels {
        let last = *configs.last().expect("nonempty");
        configs.push(last.refined(problem, 2.0));
    }
    let solutions = configs
        .iter()
        .map(|c| fd_solve(problem, c))
        .collect::<Result<Vec<_>>>()?;
    let level_gaps = solutions
        .windows(2)
        .map(|p| p[1].channel_gaps(&p[0]).map(|g| g.0))
        .collect::<Result<Vec<_>>>()?;
    for (i, p) in level_gaps.windows(2).enumerate() {
        if p[0] > NOISE_FLOOR && p[1] >= p[0] {
            return Err(Error::Certification(format!(
                "refinement is not monotone: gap {:e} after {:e} at dx = {}",
                p[1],
                p[0],
                configs[i + 2].dx
            )));
        }
    }
    let observed_order = if levels >= 3 {
        let n = level_gaps.len();
        let (g1, g2) = (level_gaps[n - 2], level_gaps[n - 1]);
        (g1 > NOISE_FLOOR && g2 > 0.0).then(|| (g1 / g2).log2())
    } else {
        None
    };
    let (order, safety) = match observed_order {
        Some(p) => (p.clamp(1.0, FORMAL_ORDER), SAFETY_OBSERVED),
        None if levels >= 3 => (FORMAL_ORDER, SAFETY_OBSERVED),
        None => (FORMAL_ORDER, SAFETY_ASSUMED),
    };
    let fine = solutions.last().expect("at least two levels").clone();
    let prev = &solutions[solutions.len() - 2];
    let denom = 2f64.powf(order) - 1.0;
    let band_of = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| safety * (x - y).abs() / denom)
            .collect()
    };
    let band_u: Vec<f64> = band_of(&fine.u, &prev.u);
    let band_ux: Vec<f64> = match (&fine.ux, &prev.ux) {
        (Some(a), Some(b)) => band_of(a, b),
        _ => vec![0.0; fine.u.len()],
    };
    let mut extrapolated = fine.clone();
    for (e, p) in extrapolated.u.iter_mut().zip(&prev.u) {
        *e += (*e - p) / denom;
    }
    if let (Some(ex), Some(px)) = (extrapolated.ux.as_mut(), prev.ux.as_ref()) {
        for (e, p) in ex.iter_mut().zip(px) {
            *e += (*e - p) / denom;
        }
    }
    Ok(Certificate {
        spacings: configs.iter().map(|c| c.dx).collect(),
        level_gaps,
        observed_order,
        order,
        safety,
        solution: fine,
        extrapolated,
        band_u,
        band_ux,
    })
}
