//! Quadrature rules used by the Melnikov and contour integrals.
//!
//! The integrands here are either periodic and analytic in a strip (orbit
//! integrals over whole periods, contour integrals around circles) or analytic
//! with exponential decay (separatrix integrals). For both the plain
//! trapezoid sum converges geometrically in the node count, so the only
//! driver needed is node doubling with reuse of the previous nodes.

use num_complex::Complex64;

use crate::error::{MelnikovError, Result};

/// Values that can be accumulated by a quadrature rule.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, factor: f64) -> Self;
    /// Largest component magnitude, used for convergence tests.
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, factor: f64) -> Self {
        self * factor
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, factor: f64) -> Self {
        self * factor
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl<T: QuadValue, const N: usize> QuadValue for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn add(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.add(b);
        }
        self
    }
    fn scale(mut self, factor: f64) -> Self {
        for a in self.iter_mut() {
            *a = a.scale(factor);
        }
        self
    }
    fn magnitude(&self) -> f64 {
        self.iter().map(QuadValue::magnitude).fold(0.0, f64::max)
    }
}

/// Node-doubling controls for [`trapezoid_doubling`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingRule {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Stop when successive sums differ by at most `rel_tol · (1 + scale)`.
    pub rel_tol: f64,
}

impl Default for DoublingRule {
    fn default() -> Self {
        Self {
            initial_nodes: 64,
            max_nodes: 1 << 20,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub nodes: usize,
    /// Difference between the last two sums.
    pub change: f64,
    /// Trapezoid sum of `|f|`.
    pub abs_scale: f64,
}

/// Trapezoid sum of `f` over `[start, start + length)`, the periodic rule with
/// equal weights. Doubles the node count until two successive sums agree.
pub fn trapezoid_doubling<T, F>(f: F, start: f64, length: f64, rule: DoublingRule) -> Result<Quadrature<T>>
where
    T: QuadValue,
    F: Fn(f64) -> Result<T>,
{
    let mut nodes = rule.initial_nodes.max(2);
    let mut h = length / nodes as f64;
    let mut sum = T::zero();
    let mut abs_sum = 0.0;
    for j in 0..nodes {
        let v = f(start + j as f64 * h)?;
        abs_sum += v.magnitude();
        sum = sum.add(v);
    }
    let mut value = sum.scale(h);
    while nodes < rule.max_nodes {
        // new nodes sit at the odd positions of the refined grid
        let half = 0.5 * h;
        for j in 0..nodes {
            let v = f(start + half + j as f64 * h)?;
            abs_sum += v.magnitude();
            sum = sum.add(v);
        }
        nodes *= 2;
        h = half;
        let refined = sum.scale(h);
        let change = refined.add(value.scale(-1.0)).magnitude();
        let abs_scale = abs_sum * h;
        value = refined;
        if change <= rule.rel_tol * (1.0 + value.magnitude()) {
            return Ok(Quadrature {
                value,
                nodes,
                change,
                abs_scale,
            });
        }
    }
    Err(MelnikovError::NonConvergence {
        what: "trapezoid rule",
        detail: format!("tolerance {} not met with {} nodes", rule.rel_tol, nodes),
    })
}

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_trapezoid_is_spectral() {
        // ∫₀^{2π} 1/(2 + cos t) dt = 2π/√3
        let q = trapezoid_doubling(|t: f64| Ok(1.0 / (2.0 + t.cos())), 0.0, 2.0 * PI, DoublingRule::default()).unwrap();
        assert!((q.value - 2.0 * PI / 3f64.sqrt()).abs() < 1e-13);
        assert!(q.nodes <= 256);
    }

    #[test]
    fn decaying_integrand_on_truncated_line() {
        // ∫ sech t cos(ωt) dt = π sech(πω/2)
        let w = 1.3;
        let q = trapezoid_doubling(
            |t: f64| Ok((w * t).cos() / t.cosh()),
            -60.0,
            120.0,
            DoublingRule { initial_nodes: 256, ..Default::default() },
        )
        .unwrap();
        assert!((q.value - PI / (PI * w / 2.0).cosh()).abs() < 1e-12);
    }

    #[test]
    fn array_values_accumulate_componentwise() {
        let q = trapezoid_doubling(
            |t: f64| Ok([t.cos().powi(2), t.sin() * t.cos()]),
            0.0,
            2.0 * PI,
            DoublingRule::default(),
        )
        .unwrap();
        assert!((q.value[0] - PI).abs() < 1e-13 && (q.value[1]).abs() < 1e-13);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let rule = DoublingRule { initial_nodes: 4, max_nodes: 16, rel_tol: 1e-14 };
        let err = trapezoid_doubling(|t: f64| Ok(t.abs().sqrt()), -1.0, 2.0, rule).unwrap_err();
        assert!(matches!(err, MelnikovError::NonConvergence { .. }));
    }

    #[test]
    fn simpson_on_smooth_and_empty_intervals() {
        let v = adaptive_simpson(&|x| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert_eq!(adaptive_simpson(&|x| x, 0.4, 0.4, 1e-12), 0.0);
    }
}
