use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical coefficients of `(eps d_t + c^2) u_xx - (d_t + a) u_t = F`.
///
/// `b = c^2 / eps` is derived. Construction requires `a <= b`; the strict
/// inequality is what the positivity and contraction estimates need, while
/// `a == b` is kept as an analytically reducible test case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    epsilon: f64,
    c: f64,
    a: f64,
    b: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, c: f64, a: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            violations.push(format!(
                "epsilon must be positive and finite (got {epsilon})"
            ));
        }
        if !(c > 0.0 && c.is_finite()) {
            violations.push(format!("c must be positive and finite (got {c})"));
        }
        if !(a > 0.0 && a.is_finite()) {
            violations.push(format!("a must be positive and finite (got {a})"));
        }
        if !violations.is_empty() {
            return Err(Error::Domain(violations.join("; ")));
        }
        let b = c * c / epsilon;
        if a > b {
            return Err(Error::Domain(format!(
                "a < b required (a = {a}, b = c^2/epsilon = {b})"
            )));
        }
        Ok(Self { epsilon, c, a, b })
    }

    /// Builds the parameters from `(epsilon, a, b)`, setting `c = sqrt(b * epsilon)`.
    pub fn from_b(epsilon: f64, a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "b must be positive and finite (got {b})"
            )));
        }
        if a > b {
            return Err(Error::Domain(format!("a < b required (a = {a}, b = {b})")));
        }
        let mut p = Self::new(epsilon, (b * epsilon).sqrt(), a.min(b * (1.0 - 1e-15)))?;
        // keep a and b bit-exact rather than round-tripping through c
        p.a = a;
        p.b = b;
        Ok(p)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    /// Scaled distance `r = |x| / sqrt(eps)` used by the transform formulas.
    pub fn scaled_distance(&self, x: f64) -> f64 {
        x.abs() / self.epsilon.sqrt()
    }

    /// Spatial reach of the kernel after time `t`: light cone plus a
    /// diffusive margin of `spread` standard widths.
    pub fn reach(&self, t: f64, spread: f64) -> f64 {
        self.c * t + spread * (self.epsilon * t).sqrt()
    }
}

/// Tolerances for the adaptive Gauss-Kronrod integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::Usage(format!(
                "quadrature tolerances must be positive and max_subdivisions >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// A complex frequency inside the half-plane of absolute convergence,
/// `Re(s) > max(-a, -b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint(Complex64);

impl LaplacePoint {
    pub fn new(s: Complex64, params: &ModelParams) -> Result<Self> {
        let bound = (-params.a()).max(-params.b());
        if !(s.re > bound) || !s.im.is_finite() {
            return Err(Error::Domain(format!(
                "Laplace point {s} outside the half-plane Re(s) > {bound}"
            )));
        }
        Ok(Self(s))
    }

    pub fn real(s: f64, params: &ModelParams) -> Result<Self> {
        Self::new(Complex64::new(s, 0.0), params)
    }

    pub fn s(&self) -> Complex64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_b() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        assert_eq!(p.b(), 2.0);
        let q = ModelParams::from_b(0.25, 0.5, 4.0).unwrap();
        assert_eq!(q.b(), 4.0);
        assert!((q.c() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_a_above_b() {
        let err = ModelParams::new(1.0, 1.0, 3.0).unwrap_err();
        assert!(err.to_string().contains("a < b required"));
    }

    #[test]
    fn degenerate_case_allowed() {
        let p = ModelParams::from_b(1.0, 1.0, 1.0).unwrap();
        assert!(p.is_degenerate());
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0).is_err());
        assert!(QuadratureSpec::new(0.0, 1e-14, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-14, 0).is_err());
    }

    #[test]
    fn laplace_half_plane() {
        let p = ModelParams::from_b(1.0, 1.0, 2.0).unwrap();
        assert!(LaplacePoint::real(-0.5, &p).is_ok());
        assert!(LaplacePoint::real(-1.0, &p).is_err());
        assert!(LaplacePoint::new(Complex64::new(-2.0, 3.0), &p).is_err());
    }
}
