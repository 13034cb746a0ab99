//! Fundamental-solution methods for the dissipative wave equation
//!
//! ```text
//! (eps d_t + c^2) u_xx - (d_t + a) u_t = F(x, t, u, u_x),   x in R, t > 0.
//! ```
//!
//! The crate evaluates the equation's fundamental solution, builds the
//! surface, star and volume potentials that solve the linear problem, and
//! solves the nonlinear problem by a windowed fixed-point iteration on the
//! integral representation. An independent finite-difference solver serves
//! as a reference.

pub mod error;
pub mod kernel;
pub mod oracle;
pub mod params;
pub mod picard;
pub mod potentials;
pub mod quadrature;
pub mod special;
pub mod talbot;

pub use error::{Error, Result};
pub use kernel::{EvalPath, KernelChannels, KernelDerivatives, KernelEvaluator};
pub use params::{LaplacePoint, ModelParams, QuadratureSpec};
