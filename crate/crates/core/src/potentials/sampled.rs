//! Bounded functions of `x` used as initial data and potential densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form profiles with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum Preset {
    Zero,
    Constant {
        value: f64,
    },
    /// `exp(-(x - center)^2 / (2 width^2))`.
    Gaussian {
        center: f64,
        width: f64,
    },
    /// `sin(wavenumber * x)`.
    Sine {
        wavenumber: f64,
    },
    /// `(1 + tanh((x - center) / width)) / 2`.
    TanhFront {
        center: f64,
        width: f64,
    },
}

impl Preset {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Preset::Zero => true,
            Preset::Constant { value } => value.is_finite(),
            Preset::Gaussian { center, width } | Preset::TanhFront { center, width } => {
                center.is_finite() && width > 0.0 && width.is_finite()
            }
            Preset::Sine { wavenumber } => wavenumber.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!("invalid preset parameters {self:?}")))
        }
    }

    fn value(&self, x: f64) -> f64 {
        match *self {
            Preset::Zero => 0.0,
            Preset::Constant { value } => value,
            Preset::Gaussian { center, width } => {
                let z = (x - center) / width;
                (-0.5 * z * z).exp()
            }
            Preset::Sine { wavenumber } => (wavenumber * x).sin(),
            Preset::TanhFront { center, width } => 0.5 * (1.0 + ((x - center) / width).tanh()),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match *self {
            Preset::Zero | Preset::Constant { .. } => 0.0,
            Preset::Gaussian { center, width } => {
                let z = (x - center) / width;
                -z / width * (-0.5 * z * z).exp()
            }
            Preset::Sine { wavenumber } => wavenumber * (wavenumber * x).cos(),
            Preset::TanhFront { center, width } => {
                let th = ((x - center) / width).tanh();
                0.5 * (1.0 - th * th) / width
            }
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            Preset::Zero => 0.0,
            Preset::Constant { value } => value.abs(),
            Preset::Gaussian { .. } | Preset::TanhFront { .. } => 1.0,
            Preset::Sine { wavenumber } => {
                if wavenumber == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Natural cubic spline through uniformly spaced samples, extended by
/// constants outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    x_min: f64,
    dx: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x_min: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Usage("a spline needs at least two samples".into()));
        }
        if !(dx > 0.0 && dx.is_finite()) || !x_min.is_finite() {
            return Err(Error::Usage(format!(
                "invalid sample spacing {dx} or origin {x_min}"
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Usage(format!(
                "sample {bad} at x = {} is not finite",
                x_min + bad as f64 * dx
            )));
        }
        let n = values.len();
        let mut curvature = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2y[i] + y[i-1]) / dx^2
            let m = n - 2;
            let mut diag = vec![4.0; m];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (dx * dx))
                .collect();
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            curvature[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                curvature[i + 1] = (rhs[i] - curvature[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            x_min,
            dx,
            values,
            curvature,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.values.len() - 1) as f64 * self.dx
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if x <= self.x_min || x >= self.x_max() {
            return None;
        }
        let pos = (x - self.x_min) / self.dx;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        Some((i, pos - i as f64))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            None if x <= self.x_min => self.values[0],
            None => self.values[self.values.len() - 1],
            Some((i, s)) => {
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
                let h2 = self.dx * self.dx / 6.0;
                let u = 1.0 - s;
                u * y0 + s * y1 + h2 * ((u * u * u - u) * m0 + (s * s * s - s) * m1)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => 0.0,
            Some((i, s)) => {
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
                let u = 1.0 - s;
                (y1 - y0) / self.dx
                    + self.dx / 6.0 * (-(3.0 * u * u - 1.0) * m0 + (3.0 * s * s - 1.0) * m1)
            }
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Repr {
    Preset(Preset),
    Expression { source: String, spline: CubicSpline },
    Tabulated(CubicSpline),
}

/// How a [`SampledFunction`] was defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    Preset,
    Expression,
    Tabulated,
}

/// A bounded function of `x` with a declared bound `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    repr: Repr,
    bound: f64,
}

impl SampledFunction {
    pub fn preset(preset: Preset) -> Result<Self> {
        preset.validate()?;
        Ok(Self {
            bound: preset.sup(),
            repr: Repr::Preset(preset),
        })
    }

    pub fn zero() -> Self {
        Self {
            repr: Repr::Preset(Preset::Zero),
            bound: 0.0,
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::preset(Preset::Constant { value })
    }

    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        Self::preset(Preset::Gaussian { center, width })
    }

    /// Samples uniformly spaced values and interpolates them.
    pub fn tabulated(x_min: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        let spline = CubicSpline::new(x_min, dx, values)?;
        let bound = spline_bound(&spline);
        Ok(Self {
            repr: Repr::Tabulated(spline),
            bound,
        })
    }

    /// Samples `f` once at `n` points on `[x_min, x_max]` and interpolates.
    pub fn from_expression<F>(source: &str, f: F, x_min: f64, x_max: f64, n: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if n < 2 || !(x_max > x_min) {
            return Err(Error::Usage(format!(
                "expression sampling needs n >= 2 and x_max > x_min (got n={n}, [{x_min}, {x_max}])"
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        let values = (0..n)
            .map(|i| f(x_min + i as f64 * dx))
            .collect::<Result<Vec<_>>>()?;
        let spline = CubicSpline::new(x_min, dx, values)?;
        let bound = spline_bound(&spline);
        Ok(Self {
            repr: Repr::Expression {
                source: source.to_string(),
                spline,
            },
            bound,
        })
    }

    /// Replaces the bound by a declared one, which must dominate the samples.
    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound >= self.bound) {
            return Err(Error::Usage(format!(
                "declared bound {bound} is below the sampled maximum {}",
                self.bound
            )));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn kind(&self) -> FunctionKind {
        match self.repr {
            Repr::Preset(_) => FunctionKind::Preset,
            Repr::Expression { .. } => FunctionKind::Expression,
            Repr::Tabulated(_) => FunctionKind::Tabulated,
        }
    }

    pub fn as_preset(&self) -> Option<Preset> {
        match self.repr {
            Repr::Preset(p) => Some(p),
            _ => None,
        }
    }

    pub fn expression_source(&self) -> Option<&str> {
        match &self.repr {
            Repr::Expression { source, .. } => Some(source),
            _ => None,
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Preset(Preset::Zero))
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Preset(p) => p.value(x),
            Repr::Expression { spline, .. } | Repr::Tabulated(spline) => spline.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Preset(p) => p.derivative(x),
            Repr::Expression { spline, .. } | Repr::Tabulated(spline) => spline.derivative(x),
        }
    }
}

/// Maximum of `|spline|`, checked on a 4x refinement of the knots.
fn spline_bound(spline: &CubicSpline) -> f64 {
    let n = (spline.samples().len() - 1) * 4;
    let step = spline.dx() / 4.0;
    (0..=n)
        .map(|k| spline.value(spline.x_min() + k as f64 * step).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_derivatives_match_differences() {
        let presets = [
            Preset::Gaussian {
                center: 0.3,
                width: 0.7,
            },
            Preset::Sine { wavenumber: 2.0 },
            Preset::TanhFront {
                center: -1.0,
                width: 0.5,
            },
            Preset::Constant { value: 3.0 },
        ];
        for p in presets {
            let f = SampledFunction::preset(p).unwrap();
            for &x in &[-2.0, -0.4, 0.0, 0.9, 2.5] {
                let h = 1e-5;
                let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
                assert!((fd - f.derivative(x)).abs() < 1e-8, "{p:?} at {x}");
                assert!(f.value(x).abs() <= f.bound());
            }
        }
    }

    #[test]
    fn spline_reproduces_smooth_data() {
        let n = 201;
        let dx = 0.05;
        let values: Vec<f64> = (0..n).map(|i| (-5.0 + i as f64 * dx).sin()).collect();
        let f = SampledFunction::tabulated(-5.0, dx, values).unwrap();
        for k in 0..100 {
            let x = -4.0 + 0.0813 * k as f64;
            assert!((f.value(x) - x.sin()).abs() < 2e-6, "{x}");
            assert!((f.derivative(x) - x.cos()).abs() < 2e-4, "{x}");
        }
        assert_eq!(f.value(-7.0), (-5.0f64).sin());
        assert_eq!(f.derivative(7.0), 0.0);
        assert_eq!(f.kind(), FunctionKind::Tabulated);
    }

    #[test]
    fn spline_interpolates_knots() {
        let values = vec![0.0, 1.0, -1.0, 2.0, 0.5];
        let s = CubicSpline::new(1.0, 0.5, values.clone()).unwrap();
        for (i, v) in values.iter().enumerate() {
            assert!((s.value(1.0 + 0.5 * i as f64) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn expression_sampling_and_bounds() {
        let f = SampledFunction::from_expression("x^2", |x| Ok(x * x), -1.0, 1.0, 41).unwrap();
        assert_eq!(f.kind(), FunctionKind::Expression);
        assert_eq!(f.expression_source(), Some("x^2"));
        assert!((f.bound() - 1.0).abs() < 1e-12);
        assert!(f.clone().with_bound(0.5).is_err());
        assert_eq!(f.with_bound(2.0).unwrap().bound(), 2.0);
        assert!(SampledFunction::tabulated(0.0, 1.0, vec![1.0, f64::NAN]).is_err());
        assert!(SampledFunction::gaussian(0.0, 0.0).is_err());
    }
}
