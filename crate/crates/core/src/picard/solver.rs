//! Windowed fixed-point iteration.
//!
//! All iterates live on the extended lattice of [`KernelTables`], so every
//! output node sees its full kernel support. Levels `t_k = k dt` are split
//! into windows of `floor(eta / dt)` steps; on each window the volume
//! integral over already-solved levels is computed once and frozen, and only
//! the contribution of the window's own levels is iterated.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{contraction_window, pde_residual, Problem, SolverConfig};
use crate::error::{Error, Result};
use crate::potentials::{
    add_half_level, add_volume_level, output_slice, DataTerms, KernelTables, SpaceTimeField,
};

/// Levels `start..=end`; `start` is already known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Solved levels `0..=K` with their right-hand-side values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolvedLevels {
    pub u: Vec<Vec<f64>>,
    pub ux: Vec<Vec<f64>>,
    pub forcing: Vec<Vec<f64>>,
}

/// Frozen volume contributions of solved levels, for levels `start..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub window: Window,
    pub u: Vec<Vec<f64>>,
    pub ux: Vec<Vec<f64>>,
}

/// Per-window record of the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    /// `||v_{k+1} - v_k||` for each application of the map.
    pub differences: Vec<f64>,
    /// Successive quotients of `differences`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Every difference obeys `d_{k+1} <= theta d_k + 1e-10`.
    pub contraction_ok: bool,
    /// Gap between the solved value at `t_start` and the map re-evaluated there.
    pub junction_gap_u: f64,
    pub junction_gap_ux: f64,
    /// `tol theta / (1 - theta)`.
    pub error_bound: f64,
}

/// Whole-run record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub eta: f64,
    pub theta: f64,
    pub tol: f64,
    pub lipschitz: f64,
    pub steps_per_window: usize,
    pub windows: Vec<WindowReport>,
    pub pde_residual: Option<f64>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Usage(format!("report encoding failed: {e}")))
    }

    pub fn contraction_ok(&self) -> bool {
        self.windows.iter().all(|w| w.contraction_ok)
    }

    pub fn max_junction_gap(&self) -> f64 {
        self.windows
            .iter()
            .map(|w| w.junction_gap_u.max(w.junction_gap_ux))
            .fold(0.0, f64::max)
    }
}

/// Slack added to the contraction check.
const CONTRACTION_SLACK: f64 = 1e-10;

/// Fixed-point solver for one problem.
#[derive(Debug, Clone)]
pub struct PicardSolver {
    problem: Problem,
    config: SolverConfig,
    tables: KernelTables,
    data: DataTerms,
    eta: f64,
    steps_per_window: usize,
}

impl PicardSolver {
    pub fn new(problem: &Problem, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let tables = KernelTables::build(&problem.params, &problem.grid, &config.potentials)?;
        Self::with_tables(problem, config, tables)
    }

    /// Reuses kernel tables built for the same parameters and grid.
    pub fn with_tables(
        problem: &Problem,
        config: &SolverConfig,
        tables: KernelTables,
    ) -> Result<Self> {
        config.validate()?;
        if tables.params != problem.params || tables.grid != problem.grid {
            return Err(Error::Usage(
                "kernel tables were built for a different problem".into(),
            ));
        }
        let grid = problem.grid;
        let eta = contraction_window(
            &problem.params,
            problem.rhs.lipschitz(),
            config.theta,
            grid.horizon,
        )?;
        let steps = ((eta / grid.dt()) * (1.0 + 1e-12)).floor() as usize;
        if steps == 0 {
            return Err(Error::Usage(format!(
                "time step {} exceeds the contraction window {eta}; increase nt",
                grid.dt()
            )));
        }
        let data = DataTerms::build(&tables, &problem.f0, &problem.f1);
        Ok(Self {
            problem: problem.clone(),
            config: *config,
            tables,
            data,
            eta,
            steps_per_window: steps.min(grid.nt),
        })
    }

    pub fn tables(&self) -> &KernelTables {
        &self.tables
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn steps_per_window(&self) -> usize {
        self.steps_per_window
    }

    /// Consecutive windows covering all levels.
    pub fn windows(&self) -> Vec<Window> {
        let nt = self.problem.grid.nt;
        let mut out = Vec::new();
        let mut start = 0;
        while start < nt {
            let end = (start + self.steps_per_window).min(nt);
            out.push(Window { start, end });
            start = end;
        }
        out
    }

    fn forcing(&self, level: usize, u: &[f64], ux: &[f64]) -> Result<Vec<f64>> {
        let t = self.problem.grid.t(level);
        (0..u.len())
            .map(|i| self.problem.rhs.eval(self.tables.x(i), t, u[i], ux[i]))
            .collect()
    }

    /// Forcing at `t = dt / 2`, evaluated on the data terms there.
    fn midpoint_forcing(&self) -> Result<Vec<f64>> {
        let t = 0.5 * self.problem.grid.dt();
        (0..self.tables.width())
            .map(|i| {
                self.problem.rhs.eval(
                    self.tables.x(i),
                    t,
                    self.data.half_u[i],
                    self.data.half_ux[i],
                )
            })
            .collect()
    }

    /// Level 0 with its forcing.
    pub fn initial_levels(&self) -> Result<SolvedLevels> {
        let u0 = self.data.u[0].clone();
        let ux0 = self.data.ux[0].clone();
        let f0 = self.forcing(0, &u0, &ux0)?;
        Ok(SolvedLevels {
            u: vec![u0],
            ux: vec![ux0],
            forcing: vec![f0],
        })
    }

    /// Lattice field over the window's levels.
    fn blank(&self, window: Window) -> Result<SpaceTimeField> {
        let g = self.problem.grid;
        SpaceTimeField::zeros(
            self.tables.x(0),
            g.dx(),
            self.tables.width(),
            g.t(window.start),
            g.dt(),
            window.len() + 1,
        )
    }

    /// Data-only iterate: the homogeneous linear solution, with the known
    /// level at `window.start`.
    pub fn data_iterate(&self, window: Window, solved: &SolvedLevels) -> Result<SpaceTimeField> {
        let mut v = self.blank(window)?;
        v.set_row(0, &solved.u[window.start], Some(&solved.ux[window.start]));
        for j in window.start + 1..=window.end {
            v.set_row(j - window.start, &self.data.u[j], Some(&self.data.ux[j]));
        }
        Ok(v)
    }

    /// Volume contributions of levels `0..=window.start` (those below `j`),
    /// with the first step's midpoint term.
    pub fn history(&self, window: Window, solved: &SolvedLevels) -> Result<History> {
        if solved.forcing.len() <= window.start {
            return Err(Error::Usage(format!(
                "history for a window starting at level {} needs that many solved levels",
                window.start
            )));
        }
        let n = self.tables.width();
        let mut hu = Vec::with_capacity(window.len() + 1);
        let mut hx = Vec::with_capacity(window.len() + 1);
        for j in window.start..=window.end {
            let mut u = vec![0.0; n];
            let mut ux = vec![0.0; n];
            for k in 0..=window.start.min(j.saturating_sub(1)) {
                if j > k {
                    add_volume_level(&self.tables, j, k, &solved.forcing[k], 1.0, &mut u, &mut ux);
                }
            }
            if j == 1 {
                let mid = self.midpoint_forcing()?;
                add_half_level(&self.tables, &mid, 1.0, &mut u, &mut ux);
            }
            hu.push(u);
            hx.push(ux);
        }
        Ok(History {
            window,
            u: hu,
            ux: hx,
        })
    }

    /// One application of the map to `v` (a lattice field over the window's
    /// levels). Row 0 of the result is the map re-evaluated at the known level.
    pub fn apply(&self, v: &SpaceTimeField, history: &History) -> Result<SpaceTimeField> {
        let w = history.window;
        if v.nt != w.len() + 1 || v.nx != self.tables.width() {
            return Err(Error::Usage(
                "iterate does not cover the window on the solver lattice".into(),
            ));
        }
        let vx =
            v.ux.as_ref()
                .ok_or_else(|| Error::Usage("iterate needs a u_x channel".into()))?;
        let n = v.nx;
        let forcing = (w.start + 1..w.end)
            .map(|k| {
                let r = (k - w.start) * n..(k - w.start + 1) * n;
                self.forcing(k, &v.u[r.clone()], &vx[r])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.blank(w)?;
        for j in w.start..=w.end {
            let row = j - w.start;
            let mut u: Vec<f64> = self.data.u[j]
                .iter()
                .zip(&history.u[row])
                .map(|(d, h)| d - h)
                .collect();
            let mut ux: Vec<f64> = self.data.ux[j]
                .iter()
                .zip(&history.ux[row])
                .map(|(d, h)| d - h)
                .collect();
            for k in w.start + 1..j {
                add_volume_level(
                    &self.tables,
                    j,
                    k,
                    &forcing[k - w.start - 1],
                    -1.0,
                    &mut u,
                    &mut ux,
                );
            }
            out.set_row(row, &u, Some(&ux));
        }
        Ok(out)
    }

    /// Iterates the map on `window` from `v_init` until successive iterates
    /// differ by at most `tol`.
    pub fn solve_window(
        &self,
        index: usize,
        history: &History,
        solved: &SolvedLevels,
        v_init: &SpaceTimeField,
    ) -> Result<(SpaceTimeField, WindowReport)> {
        let w = history.window;
        let n = self.tables.width();
        let known_u = &solved.u[w.start];
        let known_ux = &solved.ux[w.start];
        let mut v = v_init.clone();
        v.set_row(0, known_u, Some(known_ux));
        let mut differences = Vec::new();
        let mut gaps = (0.0, 0.0);
        loop {
            let mut next = self.apply(&v, history)?;
            if differences.is_empty() {
                let gu = max_gap(next.u_row(0), known_u);
                let gx = max_gap(next.ux_row(0).unwrap_or(&[]), known_ux);
                gaps = (gu, gx);
            }
            next.set_row(0, known_u, Some(known_ux));
            let d = next.eta_distance(&v)?;
            differences.push(d);
            v = next;
            if d <= self.config.tol {
                break;
            }
            if differences.len() >= self.config.max_iters {
                return Err(Error::Convergence {
                    iterations: differences.len(),
                    history: differences,
                });
            }
        }
        debug_assert_eq!(v.nx, n);
        let ratios: Vec<f64> = differences
            .windows(2)
            .map(|p| if p[0] > 0.0 { p[1] / p[0] } else { 0.0 })
            .collect();
        let theta = self.config.theta;
        let contraction_ok = differences
            .windows(2)
            .all(|p| p[1] <= theta * p[0] + CONTRACTION_SLACK);
        let g = self.problem.grid;
        let report = WindowReport {
            index,
            t_start: g.t(w.start),
            t_end: g.t(w.end),
            iterations: differences.len(),
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            differences,
            ratios,
            contraction_ok,
            junction_gap_u: gaps.0,
            junction_gap_ux: gaps.1,
            error_bound: self.config.tol * theta / (1.0 - theta),
        };
        Ok((v, report))
    }

    /// Appends the window's solved levels (excluding the known first one).
    pub fn commit(
        &self,
        v: &SpaceTimeField,
        window: Window,
        solved: &mut SolvedLevels,
    ) -> Result<()> {
        let vx = v.ux.as_ref().expect("solver iterates carry u_x");
        for j in window.start + 1..=window.end {
            let r = (j - window.start) * v.nx..(j - window.start + 1) * v.nx;
            let u = v.u[r.clone()].to_vec();
            let ux = vx[r].to_vec();
            solved.forcing.push(self.forcing(j, &u, &ux)?);
            solved.u.push(u);
            solved.ux.push(ux);
        }
        Ok(())
    }

    /// Solves window by window and returns the field on the output grid.
    pub fn solve(&self) -> Result<(SpaceTimeField, SolveReport)> {
        let clock = Instant::now();
        let mut solved = self.initial_levels()?;
        let mut reports = Vec::new();
        let limit = 10.0 * self.config.tol;
        for (index, window) in self.windows().into_iter().enumerate() {
            let history = self.history(window, &solved)?;
            let v0 = self.data_iterate(window, &solved)?;
            let (v, report) = self.solve_window(index, &history, &solved, &v0)?;
            if report.junction_gap_u > limit || report.junction_gap_ux > limit {
                return Err(Error::Consistency(format!(
                    "junction gap at t = {} is ({:e}, {:e}), above {limit:e}",
                    report.t_start, report.junction_gap_u, report.junction_gap_ux
                )));
            }
            self.commit(&v, window, &mut solved)?;
            reports.push(report);
        }
        let field = self.output_field(&solved)?;
        let residual = pde_residual(&field, &self.problem).ok();
        let report = SolveReport {
            eta: self.eta,
            theta: self.config.theta,
            tol: self.config.tol,
            lipschitz: self.problem.rhs.lipschitz(),
            steps_per_window: self.steps_per_window,
            windows: reports,
            pde_residual: residual,
            wall_time_s: clock.elapsed().as_secs_f64(),
        };
        Ok((field, report))
    }

    /// Restricts solved lattice levels to the output grid.
    pub fn output_field(&self, solved: &SolvedLevels) -> Result<SpaceTimeField> {
        let g = self.problem.grid;
        let mut field = SpaceTimeField::zeros(g.x_min, g.dx(), g.nx, 0.0, g.dt(), solved.u.len())?;
        for (j, (u, ux)) in solved.u.iter().zip(&solved.ux).enumerate() {
            field.set_row(
                j,
                output_slice(&self.tables, u),
                Some(output_slice(&self.tables, ux)),
            );
        }
        field.validate()?;
        Ok(field)
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

/// Partitions `[0, T]` into contraction windows and solves them in turn.
pub fn continue_solution(
    problem: &Problem,
    config: &SolverConfig,
) -> Result<(SpaceTimeField, SolveReport)> {
    PicardSolver::new(problem, config)?.solve()
}

/// One application of the map on the first window, levels `0..v.nt`, with
/// `v` given on the solver's lattice (see [`PicardSolver::tables`]).
pub fn picard_map(
    problem: &Problem,
    config: &SolverConfig,
    v: &SpaceTimeField,
) -> Result<SpaceTimeField> {
    let solver = PicardSolver::new(problem, config)?;
    if v.nt < 1 || v.nt - 1 > problem.grid.nt {
        return Err(Error::Usage(
            "iterate levels exceed the problem grid".into(),
        ));
    }
    let window = Window {
        start: 0,
        end: v.nt - 1,
    };
    let history = solver.history(window, &solver.initial_levels()?)?;
    solver.apply(v, &history)
}
