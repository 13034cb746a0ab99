//! Right-hand sides `F(x, t, u, p)` with declared Lipschitz and sup bounds.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type RhsFn = dyn Fn(f64, f64, f64, f64) -> Result<f64> + Send + Sync;

/// `F(x, t, u, p)` with `p = u_x`, its global Lipschitz constant in
/// `(u, p)` and a bound on `|F|`.
#[derive(Clone)]
pub struct RhsSpec {
    name: String,
    f: Arc<RhsFn>,
    lipschitz: f64,
    sup_bound: f64,
    state_free: bool,
}

impl fmt::Debug for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsSpec")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

/// Outcome of randomized probing of an [`RhsSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: usize,
    /// Largest `|F(z1) - F(z2)| / (|u1 - u2| + |p1 - p2|)` seen.
    pub max_ratio: f64,
    /// Largest `|F|` seen.
    pub max_abs: f64,
    pub lipschitz_ok: bool,
    pub bound_ok: bool,
}

/// Box of arguments explored by [`RhsSpec::probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRange {
    pub x: (f64, f64),
    pub t: (f64, f64),
    pub u: (f64, f64),
    pub p: (f64, f64),
}

impl RhsSpec {
    /// A general right-hand side. `lipschitz` must be finite and `>= 0`.
    pub fn new<F>(name: &str, f: F, lipschitz: f64, sup_bound: f64) -> Result<Self>
    where
        F: Fn(f64, f64, f64, f64) -> Result<f64> + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Usage(format!(
                "Lipschitz constant must be finite and >= 0 (got {lipschitz})"
            )));
        }
        if !(sup_bound >= 0.0) {
            return Err(Error::Usage(format!(
                "sup bound must be >= 0 (got {sup_bound})"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            f: Arc::new(f),
            lipschitz,
            sup_bound,
            state_free: false,
        })
    }

    /// Marks `F` as independent of `(u, p)`.
    pub fn state_free(mut self) -> Self {
        self.state_free = true;
        self
    }

    /// `F = 0`.
    pub fn zero() -> Self {
        Self::new("zero", |_, _, _, _| Ok(0.0), 0.0, 0.0)
            .expect("valid constants")
            .state_free()
    }

    /// `F = value`.
    pub fn source(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Usage(format!(
                "source value must be finite (got {value})"
            )));
        }
        Ok(Self::new("source", move |_, _, _, _| Ok(value), 0.0, value.abs())?.state_free())
    }

    /// `F = sin(u)`.
    pub fn sine_gordon() -> Self {
        Self::new("sine-gordon", |_, _, u, _| Ok(u.sin()), 1.0, 1.0).expect("valid constants")
    }

    /// `F = u^3 / (1 + u^2)`; its Lipschitz constant is `9/8`, attained at
    /// `u^2 = 3`. `F` is unbounded, so `sup_bound` is the bound over
    /// `|u| <= u_max`.
    pub fn cubic(u_max: f64) -> Result<Self> {
        let sup = u_max.powi(3) / (1.0 + u_max * u_max);
        Self::new(
            "cubic",
            |_, _, u, _| Ok(u * u * u / (1.0 + u * u)),
            1.125,
            sup,
        )
    }

    /// Replaces the declared Lipschitz constant.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Usage(format!(
                "Lipschitz constant must be finite and >= 0 (got {lipschitz})"
            )));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    /// Replaces the declared bound on `|F|`.
    pub fn with_sup_bound(mut self, sup_bound: f64) -> Result<Self> {
        if !(sup_bound >= 0.0) {
            return Err(Error::Usage(format!(
                "sup bound must be >= 0 (got {sup_bound})"
            )));
        }
        self.sup_bound = sup_bound;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn is_state_free(&self) -> bool {
        self.state_free
    }

    pub fn eval(&self, x: f64, t: f64, u: f64, p: f64) -> Result<f64> {
        let v = (self.f)(x, t, u, p).map_err(|e| match e {
            Error::Evaluation { .. } => e,
            other => Error::Evaluation {
                x,
                t,
                message: other.to_string(),
            },
        })?;
        if !v.is_finite() {
            return Err(Error::Evaluation {
                x,
                t,
                message: format!("F returned {v} for u = {u}, p = {p}"),
            });
        }
        Ok(v)
    }

    /// Spot-checks the Lipschitz and sup bounds on `samples` random pairs.
    pub fn probe(&self, range: &ProbeRange, samples: usize, seed: u64) -> Result<ProbeReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        };
        let mut max_ratio: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for _ in 0..samples {
            let x = draw(&mut rng, range.x);
            let t = draw(&mut rng, range.t);
            let (u1, p1) = (draw(&mut rng, range.u), draw(&mut rng, range.p));
            let (u2, p2) = (draw(&mut rng, range.u), draw(&mut rng, range.p));
            let f1 = self.eval(x, t, u1, p1)?;
            let f2 = self.eval(x, t, u2, p2)?;
            max_abs = max_abs.max(f1.abs()).max(f2.abs());
            let gap = (u1 - u2).abs() + (p1 - p2).abs();
            if gap > 0.0 {
                max_ratio = max_ratio.max((f1 - f2).abs() / gap);
            }
        }
        let slack = 1e-9;
        Ok(ProbeReport {
            samples,
            max_ratio,
            max_abs,
            lipschitz_ok: max_ratio <= self.lipschitz * (1.0 + slack) + slack,
            bound_ok: max_abs <= self.sup_bound * (1.0 + slack) + slack,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range() -> ProbeRange {
        ProbeRange {
            x: (-5.0, 5.0),
            t: (0.0, 1.0),
            u: (-3.0, 3.0),
            p: (-2.0, 2.0),
        }
    }

    #[test]
    fn presets_respect_their_constants() {
        for rhs in [
            RhsSpec::zero(),
            RhsSpec::source(2.5).unwrap(),
            RhsSpec::sine_gordon(),
            RhsSpec::cubic(3.0).unwrap(),
        ] {
            let r = rhs.probe(&range(), 5000, 7).unwrap();
            assert!(r.lipschitz_ok && r.bound_ok, "{}: {r:?}", rhs.name());
        }
    }

    #[test]
    fn cubic_constant_is_sharp() {
        let c = RhsSpec::cubic(3.0).unwrap();
        let u = 3f64.sqrt();
        let h = 1e-6;
        let slope = (c.eval(0.0, 0.0, u + h, 0.0).unwrap() - c.eval(0.0, 0.0, u - h, 0.0).unwrap())
            / (2.0 * h);
        assert!((slope - 1.125).abs() < 1e-8);
    }

    #[test]
    fn understated_constant_is_caught() {
        let bad = RhsSpec::new("steep", |_, _, u, _| Ok((2.0 * u).sin()), 1.0, 1.0).unwrap();
        let r = bad.probe(&range(), 2000, 1).unwrap();
        assert!(!r.lipschitz_ok);
    }

    #[test]
    fn evaluation_failures_carry_location() {
        let bad = RhsSpec::new("root", |_, _, u, _| Ok(u.sqrt()), 1.0, 1.0).unwrap();
        match bad.eval(0.5, 0.25, -1.0, 0.0) {
            Err(Error::Evaluation { x, t, .. }) => assert_eq!((x, t), (0.5, 0.25)),
            other => panic!("{other:?}"),
        }
        assert!(RhsSpec::new("x", |_, _, _, _| Ok(0.0), -1.0, 0.0).is_err());
    }
}
