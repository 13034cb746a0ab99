//! Surface, star and volume potentials and the explicit linear solution.

mod field;
mod linear;
mod pointwise;
mod sampled;
mod weights;

pub use field::SpaceTimeField;
pub use linear::{
    add_half_level, add_volume_level, linear_solve, linear_solve_with, output_slice, DataTerms,
    GridSpec, KernelTables,
};
pub use pointwise::{
    surface_potential, surface_potential_star, surface_values, volume_potential, SurfaceValues,
};
pub use sampled::{CubicSpline, FunctionKind, Preset, SampledFunction};
pub use weights::{convolve_clamped, half_step_weight, time_weight, LagWeights, PotentialConfig};

/// A bounded source term `f(x, t)`.
pub trait Source {
    fn value(&self, x: f64, t: f64) -> f64;
    /// Bound on `|f|` over the strip.
    fn bound(&self) -> f64;
}

/// `f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSource;

impl Source for ZeroSource {
    fn value(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn bound(&self) -> f64 {
        0.0
    }
}

/// `f = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSource(pub f64);

impl Source for ConstantSource {
    fn value(&self, _x: f64, _t: f64) -> f64 {
        self.0
    }
    fn bound(&self) -> f64 {
        self.0.abs()
    }
}

/// A closure with a declared bound.
pub struct FnSource<F> {
    f: F,
    bound: f64,
}

impl<F: Fn(f64, f64) -> f64> FnSource<F> {
    pub fn new(f: F, bound: f64) -> Self {
        Self { f, bound }
    }
}

impl<F: Fn(f64, f64) -> f64> Source for FnSource<F> {
    fn value(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }
    fn bound(&self) -> f64 {
        self.bound
    }
}
