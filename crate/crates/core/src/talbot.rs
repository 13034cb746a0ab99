//! Fixed-Talbot numerical inversion of the Laplace transform.
//!
//! The contour `s(theta) = r theta (cot theta + i)`, `r = 2M / (5t)`, wraps
//! the negative real axis, so the transform may have branch cuts there but
//! must be analytic elsewhere and satisfy `F(conj s) = conj F(s)`.

use num_complex::Complex64;

/// Node count used throughout the kernel evaluator.
pub const DEFAULT_NODES: usize = 32;

/// Inverts a bundle of `N` transforms sharing one contour evaluation.
///
/// `t` must be positive.
pub fn invert_bundle<const N: usize, F>(transform: F, t: f64, nodes: usize) -> [f64; N]
where
    F: FnMut(Complex64) -> [Complex64; N],
{
    invert_bundle_with_noise(transform, t, nodes).0
}

/// As [`invert_bundle`], also returning a per-channel round-off scale: the
/// machine epsilon times the sum of the magnitudes of the contour terms.
pub fn invert_bundle_with_noise<const N: usize, F>(
    mut transform: F,
    t: f64,
    nodes: usize,
) -> ([f64; N], [f64; N])
where
    F: FnMut(Complex64) -> [Complex64; N],
{
    debug_assert!(t > 0.0);
    let mut noise = [0.0; N];
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut acc = [0.0; N];

    let f0 = transform(Complex64::new(r, 0.0));
    let e0 = (r * t).exp();
    for ((a, n), v) in acc.iter_mut().zip(noise.iter_mut()).zip(f0.iter()) {
        *a = 0.5 * v.re * e0;
        *n = 0.5 * v.norm() * e0;
    }
    for k in 1..nodes {
        let theta = k as f64 * std::f64::consts::PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let jac = Complex64::new(1.0, sigma);
        let weight = (s * t).exp() * jac;
        let values = transform(s);
        for ((a, n), v) in acc.iter_mut().zip(noise.iter_mut()).zip(values.iter()) {
            let term = weight * v;
            *a += term.re;
            *n += term.norm();
        }
    }
    let scale = r / m;
    for (a, n) in acc.iter_mut().zip(noise.iter_mut()) {
        *a *= scale;
        *n *= scale * f64::EPSILON;
    }
    (acc, noise)
}

/// Inverts a single transform.
pub fn invert<F>(mut transform: F, t: f64, nodes: usize) -> f64
where
    F: FnMut(Complex64) -> Complex64,
{
    invert_bundle::<1, _>(|s| [transform(s)], t, nodes)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_pairs() {
        // 1/(s+1) -> e^{-t}
        for &t in &[0.1, 1.0, 3.0] {
            let v = invert(|s| 1.0 / (s + 1.0), t, DEFAULT_NODES);
            assert!((v - (-t).exp()).abs() < 1e-10, "t={t}");
        }
        // 1/s^{3/2} -> 2 sqrt(t/pi)
        let t = 0.7;
        let v = invert(|s| 1.0 / (s * s.sqrt()), t, DEFAULT_NODES);
        assert!((v - 2.0 * (t / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        // e^{-sqrt s} -> heat-kernel flux
        let t: f64 = 0.5;
        let v = invert(|s| (-s.sqrt()).exp(), t, DEFAULT_NODES);
        let exact = (-1.0 / (4.0 * t)).exp() / (2.0 * (std::f64::consts::PI * t.powi(3)).sqrt());
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn bundle_matches_single() {
        let t = 1.3;
        let [a, b] = invert_bundle(|s| [1.0 / (s + 2.0), 1.0 / (s * s + 1.0)], t, DEFAULT_NODES);
        assert!((a - (-2.0 * t).exp()).abs() < 1e-10);
        assert!((b - t.sin()).abs() < 1e-9);
    }
}
