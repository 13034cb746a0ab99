//! Sampled space-time fields carrying `u` and optionally `u_x`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of `u` (and `u_x`) on a uniform `(x, t)` grid, stored time-major:
/// entry `(i, j)` is at `x_min + i dx`, `t0 + j dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub x_min: f64,
    pub dx: f64,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub u: Vec<f64>,
    pub ux: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x: f64,
    t: f64,
    u: f64,
    ux: Option<f64>,
}

impl SpaceTimeField {
    /// A zero field with both channels.
    pub fn zeros(x_min: f64, dx: f64, nx: usize, t0: f64, dt: f64, nt: usize) -> Result<Self> {
        if nx < 1 || nt < 1 {
            return Err(Error::Usage(format!(
                "field needs nx >= 1 and nt >= 1 (got {nx}, {nt})"
            )));
        }
        if !(dx > 0.0) || !(dt > 0.0) || !x_min.is_finite() || !t0.is_finite() {
            return Err(Error::Usage(format!(
                "field grid must be strictly increasing (dx = {dx}, dt = {dt})"
            )));
        }
        Ok(Self {
            x_min,
            dx,
            nx,
            t0,
            dt,
            nt,
            u: vec![0.0; nx * nt],
            ux: Some(vec![0.0; nx * nt]),
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.nt - 1)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.nt);
        j * self.nx + i
    }

    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.u[self.idx(i, j)]
    }

    pub fn ux(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.idx(i, j);
        self.ux.as_ref().map(|v| v[k])
    }

    pub fn u_row(&self, j: usize) -> &[f64] {
        &self.u[j * self.nx..(j + 1) * self.nx]
    }

    pub fn ux_row(&self, j: usize) -> Option<&[f64]> {
        self.ux.as_ref().map(|v| &v[j * self.nx..(j + 1) * self.nx])
    }

    pub fn set_row(&mut self, j: usize, u: &[f64], ux: Option<&[f64]>) {
        let range = j * self.nx..(j + 1) * self.nx;
        self.u[range.clone()].copy_from_slice(u);
        if let (Some(dst), Some(src)) = (self.ux.as_mut(), ux) {
            dst[range].copy_from_slice(src);
        }
    }

    /// Checks that every stored value is finite.
    pub fn validate(&self) -> Result<()> {
        if self.u.len() != self.nx * self.nt
            || self.ux.as_ref().is_some_and(|v| v.len() != self.u.len())
        {
            return Err(Error::Usage(
                "field arrays do not match the grid size".into(),
            ));
        }
        let bad = self
            .u
            .iter()
            .chain(self.ux.iter().flatten())
            .position(|v| !v.is_finite());
        if let Some(k) = bad {
            let k = k % (self.nx * self.nt);
            return Err(Error::Consistency(format!(
                "non-finite value at x = {}, t = {}",
                self.x(k % self.nx),
                self.t(k / self.nx)
            )));
        }
        Ok(())
    }

    /// `sup|u| + sup|u_x|` over the grid.
    pub fn eta_norm(&self) -> f64 {
        let mu = self.u.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let mx = self
            .ux
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        mu + mx
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        if self.nx != other.nx
            || self.nt != other.nt
            || !close(self.x_min, other.x_min)
            || !close(self.dx, other.dx)
            || !close(self.t0, other.t0)
            || !close(self.dt, other.dt)
        {
            return Err(Error::Usage("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `(sup|u - v|, sup|u_x - v_x|)`; the second is 0 unless both carry `u_x`.
    pub fn channel_gaps(&self, other: &Self) -> Result<(f64, f64)> {
        self.same_grid(other)?;
        let gu = max_gap(&self.u, &other.u);
        let gx = match (&self.ux, &other.ux) {
            (Some(a), Some(b)) => max_gap(a, b),
            _ => 0.0,
        };
        Ok((gu, gx))
    }

    /// Distance in the `sup|u| + sup|u_x|` norm.
    pub fn eta_distance(&self, other: &Self) -> Result<f64> {
        let (gu, gx) = self.channel_gaps(other)?;
        Ok(gu + gx)
    }

    /// Sub-field over columns `i0..i0+nx` and rows `j0..j0+nt`.
    pub fn window(&self, i0: usize, nx: usize, j0: usize, nt: usize) -> Result<Self> {
        if i0 + nx > self.nx || j0 + nt > self.nt || nx == 0 || nt == 0 {
            return Err(Error::Usage("window exceeds the field".into()));
        }
        let take = |v: &Vec<f64>| {
            (j0..j0 + nt)
                .flat_map(|j| v[j * self.nx + i0..j * self.nx + i0 + nx].iter().copied())
                .collect::<Vec<_>>()
        };
        Ok(Self {
            x_min: self.x(i0),
            dx: self.dx,
            nx,
            t0: self.t(j0),
            dt: self.dt,
            nt,
            u: take(&self.u),
            ux: self.ux.as_ref().map(take),
        })
    }

    /// Cubic Lagrange interpolation in `x` and `t` (linear when fewer than
    /// four points exist along an axis). Returns `(u, u_x)`.
    pub fn interpolate(&self, x: f64, t: f64) -> Result<(f64, Option<f64>)> {
        let eps = 1e-12;
        if x < self.x_min - eps * self.dx
            || x > self.x_max() + eps * self.dx
            || t < self.t0 - eps * self.dt
            || t > self.t_max() + eps * self.dt
        {
            return Err(Error::Domain(format!("({x}, {t}) lies outside the field")));
        }
        let (xi, xw) = stencil((x - self.x_min) / self.dx, self.nx);
        let (tj, tw) = stencil((t - self.t0) / self.dt, self.nt);
        let eval = |data: &[f64]| {
            let mut acc = 0.0;
            for (a, wa) in tj.iter().zip(tw.iter()) {
                for (b, wb) in xi.iter().zip(xw.iter()) {
                    acc += wa * wb * data[a * self.nx + b];
                }
            }
            acc
        };
        Ok((eval(&self.u), self.ux.as_deref().map(eval)))
    }

    /// Largest gap between the stored `u_x` and centred differences of `u`
    /// over interior columns.
    pub fn ux_discrepancy(&self) -> Option<f64> {
        let ux = self.ux.as_ref()?;
        let mut worst: f64 = 0.0;
        for j in 0..self.nt {
            for i in 1..self.nx.saturating_sub(1) {
                let k = j * self.nx + i;
                let fd = (self.u[k + 1] - self.u[k - 1]) / (2.0 * self.dx);
                worst = worst.max((fd - ux[k]).abs());
            }
        }
        Some(worst)
    }

    /// Self-check of the derivative channel against `tol`.
    pub fn check_ux(&self, tol: f64) -> Result<()> {
        match self.ux_discrepancy() {
            Some(d) if d > tol => Err(Error::Consistency(format!(
                "u_x channel differs from centred differences of u by {d:e} (> {tol:e})"
            ))),
            _ => Ok(()),
        }
    }

    /// Long-form CSV with columns `x,t,u,ux`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for j in 0..self.nt {
            for i in 0..self.nx {
                w.serialize(CsvRow {
                    x: self.x(i),
                    t: self.t(j),
                    u: self.u(i, j),
                    ux: self.ux(i, j),
                })
                .map_err(io_error)?;
            }
        }
        w.flush()
            .map_err(|e| Error::Usage(format!("CSV write failed: {e}")))?;
        Ok(())
    }

    /// Reads the long-form CSV written by [`write_csv`](Self::write_csv);
    /// rows must be time-major on a uniform grid.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: CsvRow = row.map_err(io_error)?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Usage("CSV field has no rows".into()));
        }
        let t0 = rows[0].t;
        let nx = rows.iter().take_while(|r| r.t == t0).count();
        if rows.len() % nx != 0 {
            return Err(Error::Usage(
                "CSV rows do not form a rectangular grid".into(),
            ));
        }
        let nt = rows.len() / nx;
        let x_min = rows[0].x;
        let dx = if nx > 1 {
            (rows[nx - 1].x - x_min) / (nx - 1) as f64
        } else {
            1.0
        };
        let dt = if nt > 1 {
            (rows[rows.len() - 1].t - t0) / (nt - 1) as f64
        } else {
            1.0
        };
        let has_ux = rows.iter().all(|r| r.ux.is_some());
        let field = Self {
            x_min,
            dx,
            nx,
            t0,
            dt,
            nt,
            u: rows.iter().map(|r| r.u).collect(),
            ux: has_ux.then(|| rows.iter().map(|r| r.ux.unwrap_or_default()).collect()),
        };
        for (k, r) in rows.iter().enumerate() {
            let (i, j) = (k % nx, k / nx);
            let tol = 1e-9;
            if (field.x(i) - r.x).abs() > tol * (1.0 + r.x.abs())
                || (field.t(j) - r.t).abs() > tol * (1.0 + r.t.abs())
            {
                return Err(Error::Usage(format!(
                    "CSV row {} is off the uniform grid",
                    k + 2
                )));
            }
        }
        field.validate()?;
        Ok(field)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Usage(format!("JSON encoding failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let field: Self =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("JSON field: {e}")))?;
        field.validate()?;
        Ok(field)
    }
}

fn io_error(e: csv::Error) -> Error {
    Error::Usage(format!("CSV field: {e}"))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

/// Interpolation nodes and weights around fractional index `pos`.
fn stencil(pos: f64, n: usize) -> (Vec<usize>, Vec<f64>) {
    if n == 1 {
        return (vec![0], vec![1.0]);
    }
    let width = n.min(4);
    let base =
        (pos.floor() as isize - (width as isize / 2 - 1)).clamp(0, (n - width) as isize) as usize;
    let nodes: Vec<usize> = (base..base + width).collect();
    let weights = nodes
        .iter()
        .map(|&k| {
            nodes
                .iter()
                .filter(|&&m| m != k)
                .map(|&m| (pos - m as f64) / (k as f64 - m as f64))
                .product()
        })
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpaceTimeField {
        let mut f = SpaceTimeField::zeros(-1.0, 0.1, 21, 0.0, 0.05, 5).unwrap();
        for j in 0..f.nt {
            let t = f.t(j);
            let u: Vec<f64> = (0..f.nx).map(|i| (f.x(i) + t).sin() / 3.0).collect();
            let ux: Vec<f64> = (0..f.nx).map(|i| (f.x(i) + t).cos() / 3.0).collect();
            f.set_row(j, &u, Some(&ux));
        }
        f
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,t,u,ux\n"));
        let g = SpaceTimeField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f.u, g.u);
        assert_eq!(f.ux, g.ux);
        assert!((f.dx - g.dx).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = sample();
        let g = SpaceTimeField::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn interpolation_is_cubic() {
        let f = sample();
        let (u, ux) = f.interpolate(0.234, 0.117).unwrap();
        assert!((u - (0.351f64).sin() / 3.0).abs() < 1e-6);
        assert!((ux.unwrap() - (0.351f64).cos() / 3.0).abs() < 1e-6);
        assert!(f.interpolate(2.0, 0.1).is_err());
        let (u, _) = f.interpolate(f.x(3), f.t(2)).unwrap();
        assert!((u - f.u(3, 2)).abs() < 1e-15);
    }

    #[test]
    fn derivative_channel_self_check() {
        let mut f = sample();
        let d = f.ux_discrepancy().unwrap();
        assert!(d < 0.1 * 0.1 / 6.0 / 3.0 * 1.01, "{d}");
        assert!(f.check_ux(1e-3).is_ok());
        f.ux.as_mut().unwrap()[30] += 0.1;
        assert!(f.check_ux(1e-3).is_err());
    }

    #[test]
    fn norms_and_windows() {
        let f = sample();
        assert!(f.eta_distance(&f).unwrap() == 0.0);
        let w = f.window(5, 10, 1, 3).unwrap();
        assert_eq!(w.u(0, 0), f.u(5, 1));
        assert!((w.x_min - f.x(5)).abs() < 1e-15);
        assert!(f.eta_distance(&w).is_err());
        assert!(f.eta_norm() > 0.0);
        let z = SpaceTimeField::zeros(0.0, 1.0, 3, 0.0, 1.0, 2).unwrap();
        assert_eq!(z.eta_norm(), 0.0);
        assert!(SpaceTimeField::zeros(0.0, -1.0, 3, 0.0, 1.0, 2).is_err());
    }
}
