//! Method-of-lines finite differences for the first-order system
//! `u_t = v`, `v_t = eps v_xx + c^2 u_xx - a v - F(x, t, u, u_x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::picard::Problem;
use crate::potentials::SpaceTimeField;

/// Largest admissible `dt / min(dx^2 / (2 eps), dx / c)`.
pub const STABILITY_FACTOR: f64 = 0.5;

/// Diffusion lengths `sqrt(eps T)` kept between the output window and the
/// artificial boundary, on top of the light-cone distance `c T`.
pub const FARFIELD_SPREAD: f64 = 12.0;

/// `|u|` above which the run is declared divergent.
pub const BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// End nodes follow the spatially uniform ODE `u_tt + a u_t = -F`.
    FrozenFarfield,
    /// Mirror ghost nodes, `u_x = v_x = 0`.
    HomogeneousNeumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
}

/// Finite-difference settings. `dt` is an upper bound; the step actually
/// taken divides the output spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub dx: f64,
    pub dt: f64,
    /// Computational domain is `[-half_width, half_width]`.
    pub half_width: f64,
    pub boundary: Boundary,
    pub integrator: Integrator,
}

impl FdConfig {
    /// Largest stable step for `dx` under `problem`'s coefficients.
    pub fn stable_dt(problem: &Problem, dx: f64) -> f64 {
        let p = &problem.params;
        STABILITY_FACTOR * (dx * dx / (2.0 * p.epsilon())).min(dx / p.c())
    }

    /// Smallest half-width that keeps the boundary out of reach of the output window.
    pub fn min_half_width(problem: &Problem) -> f64 {
        let p = &problem.params;
        let g = &problem.grid;
        let t = g.horizon;
        g.x_min.abs().max(g.x_max.abs()) + p.c() * t + FARFIELD_SPREAD * (p.epsilon() * t).sqrt()
    }

    /// Stable defaults at spacing `dx`.
    pub fn for_problem(problem: &Problem, dx: f64) -> Self {
        Self {
            dx,
            dt: Self::stable_dt(problem, dx),
            half_width: Self::min_half_width(problem),
            boundary: Boundary::FrozenFarfield,
            integrator: Integrator::Rk4,
        }
    }

    /// Same settings at spacing `dx / factor`.
    pub fn refined(&self, problem: &Problem, factor: f64) -> Self {
        let dx = self.dx / factor;
        Self {
            dx,
            dt: self.dt.min(Self::stable_dt(problem, dx)),
            ..*self
        }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            problems.push(format!("dx must be positive (got {})", self.dx));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            problems.push(format!("dt must be positive (got {})", self.dt));
        } else if self.dx > 0.0 {
            let limit = Self::stable_dt(problem, self.dx);
            if self.dt > limit * (1.0 + 1e-12) {
                problems.push(format!(
                    "dt = {} violates the stability limit {limit}",
                    self.dt
                ));
            }
        }
        let needed = Self::min_half_width(problem);
        if !(self.half_width >= needed * (1.0 - 1e-12)) {
            problems.push(format!(
                "half_width = {} is below the required {needed}",
                self.half_width
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(problems.join("; ")))
        }
    }
}

struct Lattice {
    x0: f64,
    dx: f64,
    n: usize,
}

impl Lattice {
    fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }
}

/// Fourth-order first differences, one-sided at the two end pairs.
fn slope(u: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len();
    let h12 = 12.0 * dx;
    if n < 5 {
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            *o = if r > l {
                (u[r] - u[l]) / ((r - l) as f64 * dx)
            } else {
                0.0
            };
        }
        return;
    }
    for i in 2..n - 2 {
        out[i] = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / h12;
    }
    out[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / h12;
    out[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / h12;
    out[n - 1] = (25.0 * u[n - 1] - 48.0 * u[n - 2] + 36.0 * u[n - 3] - 16.0 * u[n - 4]
        + 3.0 * u[n - 5])
        / h12;
    out[n - 2] =
        (3.0 * u[n - 1] + 10.0 * u[n - 2] - 18.0 * u[n - 3] + 6.0 * u[n - 4] - u[n - 5]) / h12;
}

struct System<'a> {
    problem: &'a Problem,
    lattice: Lattice,
    boundary: Boundary,
    ux: Vec<f64>,
}

impl System<'_> {
    /// Writes `(u_t, v_t)` for state `(u, v)` at time `t`.
    fn rate(&mut self, t: f64, u: &[f64], v: &[f64], du: &mut [f64], dv: &mut [f64]) -> Result<()> {
        let p = &self.problem.params;
        let (eps, c2, a) = (p.epsilon(), p.c() * p.c(), p.a());
        let n = self.lattice.n;
        let inv = 1.0 / (self.lattice.dx * self.lattice.dx);
        slope(u, self.lattice.dx, &mut self.ux);
        for i in 0..n {
            let (lap_u, lap_v, p_x) = if i > 0 && i + 1 < n {
                (
                    (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv,
                    (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv,
                    self.ux[i],
                )
            } else {
                match self.boundary {
                    Boundary::FrozenFarfield => (0.0, 0.0, 0.0),
                    Boundary::HomogeneousNeumann => {
                        let j = if i == 0 { 1 } else { n - 2 };
                        (2.0 * (u[j] - u[i]) * inv, 2.0 * (v[j] - v[i]) * inv, 0.0)
                    }
                }
            };
            let f = self.problem.rhs.eval(self.lattice.x(i), t, u[i], p_x)?;
            du[i] = v[i];
            dv[i] = eps * lap_v + c2 * lap_u - a * v[i] - f;
        }
        Ok(())
    }
}

/// Four-point Lagrange interpolation of `row` (on `lattice`) at `x`.
fn interpolate(lattice: &Lattice, row: &[f64], x: f64) -> f64 {
    let s = (x - lattice.x0) / lattice.dx;
    let k = s.round();
    if (s - k).abs() < 1e-9 {
        return row[k as usize];
    }
    let i = (s.floor() as isize - 1).clamp(0, lattice.n as isize - 4) as usize;
    let mut acc = 0.0;
    for m in 0..4 {
        let mut w = 1.0;
        for l in 0..4 {
            if l != m {
                w *= (s - (i + l) as f64) / ((m as f64) - (l as f64));
            }
        }
        acc += w * row[i + m];
    }
    acc
}

/// Explicit finite-difference solution sampled on `problem`'s output grid,
/// with `u_x` from fourth-order differences.
pub fn fd_solve(problem: &Problem, config: &FdConfig) -> Result<SpaceTimeField> {
    config.validate(problem)?;
    let g = problem.grid;
    let dx = config.dx;
    let lo = ((-config.half_width - g.x_min) / dx).floor();
    let hi = ((config.half_width - g.x_min) / dx).ceil();
    let n = (hi - lo) as usize + 1;
    if n < 5 {
        return Err(Error::Usage(
            "finite-difference domain needs at least 5 nodes".into(),
        ));
    }
    let lattice = Lattice {
        x0: g.x_min + lo * dx,
        dx,
        n,
    };
    let out_dt = g.dt();
    let substeps = (out_dt / config.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = out_dt / substeps as f64;

    let mut u: Vec<f64> = (0..n).map(|i| problem.f0.value(lattice.x(i))).collect();
    let mut v: Vec<f64> = (0..n).map(|i| problem.f1.value(lattice.x(i))).collect();
    let mut field = SpaceTimeField::zeros(g.x_min, g.dx(), g.nx, 0.0, out_dt, g.nt + 1)?;
    let mut sys = System {
        problem,
        lattice,
        boundary: config.boundary,
        ux: vec![0.0; n],
    };
    let mut slope_row = vec![0.0; n];
    let record =
        |sys: &System, u: &[f64], j: usize, field: &mut SpaceTimeField, slope_row: &mut [f64]| {
            slope(u, dx, slope_row);
            let ou: Vec<f64> = (0..g.nx)
                .map(|i| interpolate(&sys.lattice, u, field.x(i)))
                .collect();
            let ox: Vec<f64> = (0..g.nx)
                .map(|i| interpolate(&sys.lattice, slope_row, field.x(i)))
                .collect();
            field.set_row(j, &ou, Some(&ox));
        };
    record(&sys, &u, 0, &mut field, &mut slope_row);

    let mut k = [(); 4].map(|_| (vec![0.0; n], vec![0.0; n]));
    let mut su = vec![0.0; n];
    let mut sv = vec![0.0; n];
    for j in 1..=g.nt {
        for s in 0..substeps {
            let t = g.t(j - 1) + s as f64 * h;
            match config.integrator {
                Integrator::Rk4 => {
                    let [k1, k2, k3, k4] = &mut k;
                    sys.rate(t, &u, &v, &mut k1.0, &mut k1.1)?;
                    for i in 0..n {
                        su[i] = u[i] + 0.5 * h * k1.0[i];
                        sv[i] = v[i] + 0.5 * h * k1.1[i];
                    }
                    sys.rate(t + 0.5 * h, &su, &sv, &mut k2.0, &mut k2.1)?;
                    for i in 0..n {
                        su[i] = u[i] + 0.5 * h * k2.0[i];
                        sv[i] = v[i] + 0.5 * h * k2.1[i];
                    }
                    sys.rate(t + 0.5 * h, &su, &sv, &mut k3.0, &mut k3.1)?;
                    for i in 0..n {
                        su[i] = u[i] + h * k3.0[i];
                        sv[i] = v[i] + h * k3.1[i];
                    }
                    sys.rate(t + h, &su, &sv, &mut k4.0, &mut k4.1)?;
                    for i in 0..n {
                        u[i] += h / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
                        v[i] += h / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]);
                    }
                }
            }
            if let Some(bad) = u.iter().position(|x| !(x.abs() <= BLOW_UP)) {
                return Err(Error::Divergence(format!(
                    "|u| = {} at x = {}, t = {}",
                    u[bad].abs(),
                    sys.lattice.x(bad),
                    t + h
                )));
            }
        }
        record(&sys, &u, j, &mut field, &mut slope_row);
    }
    Ok(field)
}
