//! A-posteriori residual of the differential equation on a sampled field.

use super::Problem;
use crate::error::{Error, Result};
use crate::potentials::SpaceTimeField;

/// Five-point first derivative.
fn d1(f: [f64; 5], h: f64) -> f64 {
    (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h)
}

/// Five-point second derivative.
fn d2(f: [f64; 5], h: f64) -> f64 {
    (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h)
}

/// Max over interior nodes of `|(eps d_t + c^2) u_xx - (d_t + a) u_t - F|`,
/// with fourth-order central differences. `F` sees the field's `u_x`
/// channel when present and a differenced slope otherwise.
pub fn pde_residual(field: &SpaceTimeField, problem: &Problem) -> Result<f64> {
    field.validate()?;
    if field.nx < 5 || field.nt < 5 {
        return Err(Error::Usage(format!(
            "residual stencils need at least 5 nodes per direction (got {} x {})",
            field.nx, field.nt
        )));
    }
    let p = &problem.params;
    let (eps, c2, a) = (p.epsilon(), p.c() * p.c(), p.a());
    let (dx, dt) = (field.dx, field.dt);
    let u = |i: usize, j: usize| field.u(i, j);
    let uxx = |i: usize, j: usize| {
        d2(
            [u(i - 2, j), u(i - 1, j), u(i, j), u(i + 1, j), u(i + 2, j)],
            dx,
        )
    };
    let mut worst: f64 = 0.0;
    for j in 2..field.nt - 2 {
        let t = field.t(j);
        for i in 2..field.nx - 2 {
            let col = [u(i, j - 2), u(i, j - 1), u(i, j), u(i, j + 1), u(i, j + 2)];
            let ut = d1(col, dt);
            let utt = d2(col, dt);
            let uxxt = d1(
                [
                    uxx(i, j - 2),
                    uxx(i, j - 1),
                    uxx(i, j),
                    uxx(i, j + 1),
                    uxx(i, j + 2),
                ],
                dt,
            );
            let slope = match field.ux(i, j) {
                Some(v) => v,
                None => d1(
                    [u(i - 2, j), u(i - 1, j), u(i, j), u(i + 1, j), u(i + 2, j)],
                    dx,
                ),
            };
            let f = problem.rhs.eval(field.x(i), t, u(i, j), slope)?;
            let r = eps * uxxt + c2 * uxx(i, j) - utt - a * ut - f;
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
