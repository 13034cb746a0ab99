//! Grid evaluation of the potentials and the explicit linear solution
//! `u = -u_f + u_{f1} + u*_{f0}`.

use serde::{Deserialize, Serialize};

use super::field::SpaceTimeField;
use super::sampled::SampledFunction;
use super::weights::{
    convolve_clamped, half_step_weight, time_weight, LagWeights, PotentialConfig,
};
use super::Source;
use crate::error::{Error, Result};
use crate::kernel::{EvalPath, KernelEvaluator};
use crate::params::ModelParams;

/// Output grid: `nx` nodes on `[x_min, x_max]`, levels `t_j = j T / nt` for
/// `j = 0..=nt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub horizon: f64,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, nx: usize, horizon: f64, nt: usize) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            nx,
            horizon,
            nt,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            problems.push(format!(
                "x_max > x_min required (got [{}, {}])",
                self.x_min, self.x_max
            ));
        }
        if self.nx < 2 {
            problems.push(format!("nx >= 2 required (got {})", self.nx));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            problems.push(format!("T > 0 required (got {})", self.horizon));
        }
        if self.nt < 1 {
            problems.push(format!("nt >= 1 required (got {})", self.nt));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(problems.join("; ")))
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }
}

/// Kernel weights for every lag `j dt`, `j = 1..=nt`, plus the extended
/// lattice on which convolutions are carried out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTables {
    pub params: ModelParams,
    pub grid: GridSpec,
    /// `lags[j - 1]` holds the weights at lag `j dt`.
    pub lags: Vec<LagWeights>,
    /// Weights at lag `dt / 2`.
    pub half: LagWeights,
    /// Number of extra lattice nodes on each side of the output window.
    pub margin: usize,
}

impl KernelTables {
    pub fn build(params: &ModelParams, grid: &GridSpec, config: &PotentialConfig) -> Result<Self> {
        grid.validate()?;
        config.validate()?;
        let eval = KernelEvaluator::new(*params, config.quad).with_path(EvalPath::Talbot);
        let (h, dt) = (grid.dx(), grid.dt());
        let lags = (1..=grid.nt)
            .map(|j| LagWeights::build(&eval, h, j as f64 * dt, config))
            .collect::<Result<Vec<_>>>()?;
        let half = LagWeights::build(&eval, h, 0.5 * dt, config)?;
        let margin = lags
            .iter()
            .map(|w| w.half)
            .max()
            .unwrap_or(0)
            .max(half.half);
        Ok(Self {
            params: *params,
            grid: *grid,
            lags,
            half,
            margin,
        })
    }

    /// Number of nodes on the extended lattice.
    pub fn width(&self) -> usize {
        self.grid.nx + 2 * self.margin
    }

    /// Position of extended-lattice node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.grid.x_min + (i as f64 - self.margin as f64) * self.grid.dx()
    }

    pub fn lag(&self, j: usize) -> &LagWeights {
        &self.lags[j - 1]
    }

    /// Largest mass-law defect over all lags.
    pub fn worst_mass_defect(&self) -> f64 {
        self.lags
            .iter()
            .map(|w| w.mass_defect)
            .fold(self.half.mass_defect, f64::max)
    }

    /// Samples `g` on the extended lattice.
    pub fn sample(&self, g: &SampledFunction) -> Vec<f64> {
        (0..self.width()).map(|i| g.value(self.x(i))).collect()
    }
}

/// Data terms `u_{f1} + u*_{f0}` and their `x` derivatives at every level,
/// on the extended lattice. Level 0 holds `(f0, f0')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTerms {
    pub u: Vec<Vec<f64>>,
    pub ux: Vec<Vec<f64>>,
    /// Both channels at `t = dt / 2`.
    pub half_u: Vec<f64>,
    pub half_ux: Vec<f64>,
}

impl DataTerms {
    pub fn build(tables: &KernelTables, f0: &SampledFunction, f1: &SampledFunction) -> Self {
        let n = tables.width();
        let g0 = tables.sample(f0);
        let g1 = tables.sample(f1);
        let d0: Vec<f64> = (0..n).map(|i| f0.derivative(tables.x(i))).collect();
        let level = |w: &LagWeights, t: f64| {
            let decay = (-tables.params.b() * t).exp();
            let mut uj: Vec<f64> = g0.iter().map(|v| decay * v).collect();
            let mut xj: Vec<f64> = d0.iter().map(|v| decay * v).collect();
            if !f1.is_zero() {
                convolve_clamped(&w.k, w.half, &g1, 1.0, &mut uj);
                convolve_clamped(&w.kx, w.half, &g1, 1.0, &mut xj);
            }
            if !f0.is_zero() {
                convolve_clamped(&w.star, w.half, &g0, 1.0, &mut uj);
                convolve_clamped(&w.star_x, w.half, &g0, 1.0, &mut xj);
            }
            (uj, xj)
        };
        let mut u = vec![g0.clone()];
        let mut ux = vec![d0.clone()];
        for j in 1..=tables.grid.nt {
            let (uj, xj) = level(tables.lag(j), tables.grid.t(j));
            u.push(uj);
            ux.push(xj);
        }
        let (half_u, half_ux) = level(&tables.half, 0.5 * tables.grid.dt());
        Self {
            u,
            ux,
            half_u,
            half_ux,
        }
    }
}

/// Adds `scale * (K * density, K_x * density)` at lag `j - k` into the two
/// output rows, with the quadrature weight of level `k` in `int_0^{t_j}`.
pub fn add_volume_level(
    tables: &KernelTables,
    j: usize,
    k: usize,
    density: &[f64],
    scale: f64,
    out_u: &mut [f64],
    out_ux: &mut [f64],
) {
    debug_assert!(k < j);
    let w = tables.lag(j - k);
    let c = scale * time_weight(j, k, tables.grid.dt());
    convolve_clamped(&w.k, w.half, density, c, out_u);
    convolve_clamped(&w.kx, w.half, density, c, out_ux);
}

/// Adds the midpoint term of the first step, `scale * (K * density, K_x *
/// density)` at lag `dt / 2`, where `density` is sampled at `t = dt / 2`.
pub fn add_half_level(
    tables: &KernelTables,
    density: &[f64],
    scale: f64,
    out_u: &mut [f64],
    out_ux: &mut [f64],
) {
    let w = &tables.half;
    let c = scale * half_step_weight(tables.grid.dt());
    convolve_clamped(&w.k, w.half, density, c, out_u);
    convolve_clamped(&w.kx, w.half, density, c, out_ux);
}

/// Extracts the output window of an extended-lattice level.
pub fn output_slice<'a>(tables: &KernelTables, row: &'a [f64]) -> &'a [f64] {
    &row[tables.margin..tables.margin + tables.grid.nx]
}

/// Explicit solution of `L u = f` with `u(., 0) = f0`, `u_t(., 0) = f1`,
/// sampled on `grid` with both channels.
pub fn linear_solve<S: Source + ?Sized>(
    f: &S,
    f0: &SampledFunction,
    f1: &SampledFunction,
    grid: &GridSpec,
    params: &ModelParams,
    config: &PotentialConfig,
) -> Result<SpaceTimeField> {
    let tables = KernelTables::build(params, grid, config)?;
    linear_solve_with(&tables, f, f0, f1)
}

/// As [`linear_solve`] with prebuilt kernel tables.
pub fn linear_solve_with<S: Source + ?Sized>(
    tables: &KernelTables,
    f: &S,
    f0: &SampledFunction,
    f1: &SampledFunction,
) -> Result<SpaceTimeField> {
    let grid = tables.grid;
    let n = tables.width();
    let data = DataTerms::build(tables, f0, f1);
    let sources: Vec<Vec<f64>> = (0..grid.nt)
        .map(|k| {
            let t = grid.t(k);
            (0..n).map(|i| f.value(tables.x(i), t)).collect()
        })
        .collect();
    let mid: Vec<f64> = (0..n)
        .map(|i| f.value(tables.x(i), 0.5 * grid.dt()))
        .collect();
    let mut field =
        SpaceTimeField::zeros(grid.x_min, grid.dx(), grid.nx, 0.0, grid.dt(), grid.nt + 1)?;
    for j in 0..=grid.nt {
        let mut u = data.u[j].clone();
        let mut ux = data.ux[j].clone();
        for (k, row) in sources.iter().enumerate().take(j) {
            add_volume_level(tables, j, k, row, -1.0, &mut u, &mut ux);
        }
        if j == 1 {
            add_half_level(tables, &mid, -1.0, &mut u, &mut ux);
        }
        field.set_row(j, output_slice(tables, &u), Some(output_slice(tables, &ux)));
    }
    field.validate()?;
    // volume part obeys |u_f| <= t sup|f| / a; checked through the data-free split
    if f.bound() > 0.0 {
        check_volume_bound(tables, &sources, &mid, f.bound())?;
    }
    Ok(field)
}

fn check_volume_bound(
    tables: &KernelTables,
    sources: &[Vec<f64>],
    mid: &[f64],
    sup: f64,
) -> Result<()> {
    let grid = tables.grid;
    let n = tables.width();
    for j in 1..=grid.nt {
        let mut v = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        for (k, row) in sources.iter().enumerate().take(j) {
            add_volume_level(tables, j, k, row, 1.0, &mut v, &mut scratch);
        }
        if j == 1 {
            add_half_level(tables, mid, 1.0, &mut v, &mut scratch);
        }
        let bound = grid.t(j) * sup / tables.params.a();
        let worst = output_slice(tables, &v)
            .iter()
            .fold(0.0, |m: f64, x| m.max(x.abs()));
        if worst > bound * (1.0 + 1e-9) + 1e-14 {
            return Err(Error::Consistency(format!(
                "volume potential {worst:e} at t = {} exceeds t sup|f| / a = {bound:e}",
                grid.t(j)
            )));
        }
    }
    Ok(())
}
