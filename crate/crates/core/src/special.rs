//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series below [`ASYMPTOTIC_SWITCH`], Hankel asymptotic expansion
//! above it. The exponentially scaled variants `e^{-z} I_n(z)` never
//! overflow and are what the kernel integrands use.

use crate::error::{Error, Result};

/// Argument above which the asymptotic expansion replaces the series.
pub const ASYMPTOTIC_SWITCH: f64 = 25.0;

fn series(z: f64, order: u32) -> f64 {
    let q = 0.25 * z * z;
    let mut term = if order == 0 { 1.0 } else { 0.5 * z };
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term *= q / (f64::from(k) * f64::from(k + order));
        sum += term;
        if term <= f64::EPSILON * 0.5 * sum || k > 500 {
            break;
        }
        k += 1;
    }
    sum
}

/// `sqrt(2 pi z) e^{-z} I_order(z)` via the large-argument expansion.
fn asymptotic_scaled(z: f64, order: u32) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        term *= -(mu - odd * odd) / (8.0 * f64::from(k) * z);
        let mag = term.abs();
        if mag >= prev {
            break;
        }
        sum += term;
        if mag <= f64::EPSILON * 0.5 * sum.abs() {
            break;
        }
        prev = mag;
    }
    sum
}

fn scaled(z: f64, order: u32) -> f64 {
    let z = z.abs();
    if z < ASYMPTOTIC_SWITCH {
        series(z, order) * (-z).exp()
    } else {
        asymptotic_scaled(z, order) / (2.0 * std::f64::consts::PI * z).sqrt()
    }
}

/// `e^{-|z|} I0(z)`.
pub fn bessel_i0e(z: f64) -> f64 {
    scaled(z, 0)
}

/// `e^{-|z|} I1(|z|)`.
pub fn bessel_i1e(z: f64) -> f64 {
    scaled(z, 1)
}

/// `e^{-z} I1(z) / z` for `z >= 0`, continuous at the origin where it equals 1/2.
pub fn bessel_i1e_over_z(z: f64) -> f64 {
    let z = z.abs();
    if z < 1e-3 {
        // I1(z)/z = 1/2 + z^2/16 + z^4/384 + ...
        let q = z * z;
        (0.5 + q / 16.0 + q * q / 384.0) * (-z).exp()
    } else {
        bessel_i1e(z) / z
    }
}

fn unscaled(z: f64, order: u32, name: &str) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!(
            "{name} argument must be finite (got {z})"
        )));
    }
    let z = z.abs();
    let value = if z < ASYMPTOTIC_SWITCH {
        series(z, order)
    } else {
        let log =
            z - 0.5 * (2.0 * std::f64::consts::PI * z).ln() + asymptotic_scaled(z, order).ln();
        log.exp()
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range(format!(
            "{name}({z}) overflows double precision"
        )))
    }
}

/// Modified Bessel function `I0(z)`.
pub fn bessel_i0(z: f64) -> Result<f64> {
    unscaled(z, 0, "I0")
}

/// Modified Bessel function `I1(z)` for `z >= 0`.
pub fn bessel_i1(z: f64) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::Domain(format!(
            "I1 is evaluated for nonnegative z only (got {z})"
        )));
    }
    unscaled(z, 1, "I1")
}
