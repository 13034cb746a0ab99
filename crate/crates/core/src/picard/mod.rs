//! Nonlinear solves by fixed-point iteration of the integral representation
//! `u = -u_F[u] + u_{f1} + u*_{f0}`, one contraction window at a time.

mod residual;
mod rhs;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::potentials::{GridSpec, PotentialConfig, SampledFunction};

pub use residual::pde_residual;
pub use rhs::{ProbeRange, ProbeReport, RhsSpec};
pub use solver::{
    continue_solution, picard_map, History, PicardSolver, SolveReport, SolvedLevels, Window,
    WindowReport,
};

/// Initial-value problem `L u = F`, `u(., 0) = f0`, `u_t(., 0) = f1`, on an
/// output grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: ModelParams,
    pub f0: SampledFunction,
    pub f1: SampledFunction,
    pub rhs: RhsSpec,
    pub grid: GridSpec,
}

impl Problem {
    pub fn new(
        params: ModelParams,
        f0: SampledFunction,
        f1: SampledFunction,
        rhs: RhsSpec,
        grid: GridSpec,
    ) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            params,
            f0,
            f1,
            rhs,
            grid,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }
}

/// Fixed-point iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target contraction factor in `(0, 1)`.
    pub theta: f64,
    /// Stopping tolerance on successive iterates in the `sup|u| + sup|u_x|` norm.
    pub tol: f64,
    pub max_iters: usize,
    pub potentials: PotentialConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            tol: 1e-8,
            max_iters: 50,
            potentials: PotentialConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.theta > 0.0 && self.theta < 1.0) {
            problems.push(format!("theta must lie in (0, 1) (got {})", self.theta));
        }
        if !(self.tol > 0.0) {
            problems.push(format!("tol must be positive (got {})", self.tol));
        }
        if self.max_iters < 1 {
            problems.push("max_iters must be >= 1".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Usage(problems.join("; ")));
        }
        self.potentials.validate()
    }
}

/// Window length on which the fixed-point map contracts with factor `theta`:
/// `theta / (beta (1/a + 1/sqrt(eps (b - a))))`, or `horizon` when `beta = 0`.
pub fn contraction_window(
    params: &ModelParams,
    beta: f64,
    theta: f64,
    horizon: f64,
) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Usage(format!(
            "Lipschitz constant must be finite and >= 0 (got {beta})"
        )));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Usage(format!(
            "theta must lie in (0, 1) (got {theta})"
        )));
    }
    if beta == 0.0 {
        return Ok(horizon);
    }
    let (a, b, eps) = (params.a(), params.b(), params.epsilon());
    if a >= b {
        return Err(Error::Domain(format!(
            "the contraction estimate needs a < b (a = {a}, b = {b})"
        )));
    }
    Ok(theta / (beta * (1.0 / a + 1.0 / (eps * (b - a)).sqrt())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_lengths() {
        let p = ModelParams::from_b(1.0, 1.0, 2.0).unwrap();
        assert_eq!(contraction_window(&p, 0.0, 0.5, 3.0).unwrap(), 3.0);
        assert!((contraction_window(&p, 1.0, 0.5, 3.0).unwrap() - 0.25).abs() < 1e-15);
        let q = ModelParams::from_b(0.25, 1.0, 4.0).unwrap();
        let eta = contraction_window(&q, 2.0, 0.9, 3.0).unwrap();
        assert!((eta - 0.9 / (2.0 * (1.0 + 1.0 / 0.75f64.sqrt()))).abs() < 1e-15);
        assert!((eta - 0.2088).abs() < 1e-4);
        let d = ModelParams::from_b(1.0, 2.0, 2.0).unwrap();
        assert!(matches!(
            contraction_window(&d, 1.0, 0.5, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(contraction_window(&p, 1.0, 1.0, 1.0).is_err());
    }
}
