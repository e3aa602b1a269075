//! Complex-time contour integrals of the subharmonic Melnikov integrand.
//!
//! The resonant orbit is re-timed by half a period, so its pole above the real
//! axis sits at `iK' + 2K` (inner) or `ikK' + kK` (rotating), away from the
//! lines `Re t = 0` and `Re t = 2πm/ω`. A small positively oriented circle
//! around that pole is sampled with the periodic trapezoid rule, which
//! converges geometrically for an integrand analytic in the surrounding
//! annulus.
//!
//! Only `x₂` enters `DH · g = x₂ (β cos(ωs + θ) − δ x₂)`, so three kernels
//! `∮x₂ cos ωs`, `∮x₂ sin ωs` and `∮x₂²` fix the integral for every θ, β, δ.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{jacobi_complex, EllipticModulus, POLE_THRESHOLD};
use crate::error::{domain, MelnikovError, Result};
use crate::melnikov::Resonance;
use crate::pendulum::FamilyTag;
use crate::quad::{adaptive_simpson, trapezoid_doubling, DoublingRule};

/// Relative tolerance of the node doubling on the circle.
pub const CONTOUR_TOL: f64 = 1e-9;

/// Radii used for the radius-independence checks, as fractions of
/// [`admissible_radius`].
pub const RADIUS_FRACTIONS: [f64; 3] = [0.05, 0.1, 0.2];

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Imaginary offset of the orbit pole: `K'` or `kK'`.
fn pole_height(r: &Resonance) -> f64 {
    let e = r.modulus();
    match r.family() {
        FamilyTag::Inner => e.first_kind_prime(),
        _ => e.k() * e.first_kind_prime(),
    }
}

/// Half the orbit period: `2K` or `kK`.
pub fn half_period(r: &Resonance) -> f64 {
    0.5 * r.orbit().period()
}

/// Pole of the re-timed orbit enclosed by the contour.
pub fn shifted_pole(r: &Resonance) -> Complex64 {
    Complex64::new(half_period(r), pole_height(r))
}

/// Half the spacing of the pole lattice around [`shifted_pole`]:
/// `min(K, K')` (inner) or `k·min(K, K')` (rotating).
pub fn admissible_radius(r: &Resonance) -> f64 {
    let e = r.modulus();
    let m = e.first_kind().min(e.first_kind_prime());
    match r.family() {
        FamilyTag::Inner => m,
        _ => e.k() * m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    /// Initial trapezoid node count on the circle.
    pub nodes: usize,
    pub theta: f64,
}

impl ContourSpec {
    /// Circle about the shifted pole with radius `fraction · admissible_radius`.
    pub fn around_pole(r: &Resonance, fraction: f64, theta: f64) -> Self {
        Self {
            center: shifted_pole(r),
            radius: fraction * admissible_radius(r),
            nodes: 64,
            theta,
        }
    }

    /// Checks that the circle winds once around the shifted pole, encloses
    /// no other pole and stays clear of `Re t = 0` and `Re t = 2πm/ω`.
    pub fn validate(&self, r: &Resonance) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(domain("radius", self.radius, "finite, > 0"));
        }
        if self.nodes < 64 {
            return Err(domain("nodes", self.nodes as f64, ">= 64"));
        }
        let bound = admissible_radius(r);
        let offset = (self.center - shifted_pole(r)).norm();
        if offset + self.radius >= bound {
            return Err(MelnikovError::SingleEnclosureViolation {
                radius: self.radius,
                bound: bound - offset,
            });
        }
        if self.radius - offset < POLE_THRESHOLD {
            return Err(domain("radius", self.radius, "circle must enclose the shifted pole"));
        }
        let (lo, hi) = (self.center.re - self.radius, self.center.re + self.radius);
        for line in [0.0, r.window()] {
            if lo <= line && line <= hi {
                return Err(domain("radius", self.radius, "circle crosses an excluded line"));
            }
        }
        Ok(())
    }
}

/// The three circle integrals that determine `Î(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourKernels {
    /// `∮ x₂ cos ωs ds`
    pub cos_kernel: Complex64,
    /// `∮ x₂ sin ωs ds`
    pub sin_kernel: Complex64,
    /// `∮ x₂² ds`
    pub damping_kernel: Complex64,
    pub nodes: usize,
}

impl ContourKernels {
    /// `β(C cos θ − S sin θ) − δD`.
    pub fn value(&self, theta: f64, beta: f64, delta: f64) -> Complex64 {
        beta * (self.cos_kernel * theta.cos() - self.sin_kernel * theta.sin()) - delta * self.damping_kernel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourValue {
    pub value: Complex64,
    pub theta: f64,
    pub family: FamilyTag,
}

/// Integrates `f` once around the circle `center + ρe^{iφ}`, counterclockwise.
fn circle_integral<const N: usize>(
    center: Complex64,
    radius: f64,
    nodes: usize,
    f: impl Fn(Complex64) -> Result<[Complex64; N]>,
) -> Result<([Complex64; N], usize)> {
    let q = trapezoid_doubling(
        |phi: f64| {
            let z = Complex64::from_polar(radius, phi);
            let w = f(center + z)?;
            // dt = iz dφ
            Ok(w.map(|v| v * I * z))
        },
        0.0,
        2.0 * PI,
        DoublingRule {
            initial_nodes: nodes,
            rel_tol: CONTOUR_TOL,
            ..DoublingRule::default()
        },
    )?;
    Ok((q.value, q.nodes))
}

/// Contour kernels on the circle of `spec` (its θ is ignored).
pub fn contour_kernels(r: &Resonance, spec: &ContourSpec) -> Result<ContourKernels> {
    spec.validate(r)?;
    let orbit = r.orbit();
    let shift = half_period(r);
    let omega = r.omega();
    let ([c, s, d], nodes) = circle_integral(spec.center, spec.radius, spec.nodes, |t| {
        // re-timed orbit: x(t − T/2) with forcing phase ω(t − T/2) + θ
        let u = t - shift;
        let x2 = orbit.complex_state(u)?.x2;
        Ok([x2 * (omega * u).cos(), x2 * (omega * u).sin(), x2 * x2])
    })?;
    Ok(ContourKernels {
        cos_kernel: c,
        sin_kernel: s,
        damping_kernel: d,
        nodes,
    })
}

/// `∮ DH(x(t)) · g(x(t), ωt + θ) dt` on the circle of `spec`.
pub fn contour_integral_numeric(r: &Resonance, spec: &ContourSpec, beta: f64, delta: f64) -> Result<ContourValue> {
    let kernels = contour_kernels(r, spec)?;
    Ok(ContourValue {
        value: kernels.value(spec.theta, beta, delta),
        theta: spec.theta,
        family: r.family(),
    })
}

/// Residue value `±4πβ(cosh(ωh) cos θ − i sinh(ωh) sin θ)`, `h` the pole height.
pub fn contour_integral_closed(r: &Resonance, theta: f64, beta: f64) -> ContourValue {
    let wh = r.omega() * pole_height(r);
    let sign = match r.family() {
        FamilyTag::RotatingMinus => -1.0,
        _ => 1.0,
    };
    let value = sign * 4.0 * PI * beta * Complex64::new(wh.cosh() * theta.cos(), -wh.sinh() * theta.sin());
    ContourValue {
        value,
        theta,
        family: r.family(),
    }
}

/// Lower bound `4πβ·min(1, sinh(ωh))` on `|Î(θ)|` over all θ.
pub fn closed_lower_bound(r: &Resonance, beta: f64) -> f64 {
    4.0 * PI * beta * (r.omega() * pole_height(r)).sinh().min(1.0)
}

/// Functions whose leading Laurent coefficients are probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaurentFunction {
    /// `cn t` at `iK'`
    Cn,
    /// `dn t` at `iK'`
    Dn,
    /// `dn(t/k)` at `ikK'`
    DnScaled,
    /// `cn² t` at `iK'`
    CnSquared,
    /// `cos ωt` at `iK'`
    Cos,
    /// `sin ωt` at `iK'`
    Sin,
    /// `cos ωt · cn t` at `iK'`
    CosCn,
    /// `sin ωt · cn t` at `iK'`
    SinCn,
}

impl LaurentFunction {
    pub const ALL: [LaurentFunction; 8] = [
        LaurentFunction::Cn,
        LaurentFunction::Dn,
        LaurentFunction::DnScaled,
        LaurentFunction::CnSquared,
        LaurentFunction::Cos,
        LaurentFunction::Sin,
        LaurentFunction::CosCn,
        LaurentFunction::SinCn,
    ];

    fn center(self, e: &EllipticModulus) -> Complex64 {
        match self {
            LaurentFunction::DnScaled => Complex64::new(0.0, e.k() * e.first_kind_prime()),
            _ => Complex64::new(0.0, e.first_kind_prime()),
        }
    }

    /// Largest radius keeping a single pole inside.
    fn radius_bound(self, e: &EllipticModulus) -> f64 {
        let m = e.first_kind().min(e.first_kind_prime());
        match self {
            LaurentFunction::DnScaled => e.k() * m,
            _ => m,
        }
    }

    fn eval(self, t: Complex64, e: &EllipticModulus, omega: f64) -> Result<Complex64> {
        let jac = |u: Complex64| jacobi_complex(u, e);
        Ok(match self {
            LaurentFunction::Cn => jac(t)?.cn,
            LaurentFunction::Dn => jac(t)?.dn,
            LaurentFunction::DnScaled => jac(t / e.k())?.dn,
            LaurentFunction::CnSquared => jac(t)?.cn.powi(2),
            LaurentFunction::Cos => (omega * t).cos(),
            LaurentFunction::Sin => (omega * t).sin(),
            LaurentFunction::CosCn => (omega * t).cos() * jac(t)?.cn,
            LaurentFunction::SinCn => (omega * t).sin() * jac(t)?.cn,
        })
    }

    /// Analytic residue and constant term at the expansion point.
    pub fn expected(self, e: &EllipticModulus, omega: f64) -> LaurentCoefficients {
        let (k, kp) = (e.k(), e.first_kind_prime());
        let (ch, sh) = ((omega * kp).cosh(), (omega * kp).sinh());
        let zero = Complex64::new(0.0, 0.0);
        let (residue, constant) = match self {
            LaurentFunction::Cn => (-I / k, zero),
            LaurentFunction::Dn => (-I, zero),
            LaurentFunction::DnScaled => (-I * k, zero),
            LaurentFunction::CnSquared => (zero, ((2.0 * k * k - 1.0) / (3.0 * k * k)).into()),
            LaurentFunction::Cos => (zero, ch.into()),
            LaurentFunction::Sin => (zero, I * sh),
            // constant terms need the next Taylor coefficient of cos/sin
            LaurentFunction::CosCn => (-I / k * ch, -I * omega * sh * (-I / k)),
            LaurentFunction::SinCn => (-I / k * (I * sh), omega * ch * (-I / k)),
        };
        LaurentCoefficients { residue, constant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaurentCoefficients {
    /// Coefficient of `(t − p)⁻¹`.
    pub residue: Complex64,
    /// Coefficient of `(t − p)⁰`.
    pub constant: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaurentSample {
    pub radius: f64,
    pub coefficients: LaurentCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentReport {
    pub function: LaurentFunction,
    pub center: Complex64,
    pub samples: Vec<LaurentSample>,
    pub expected: LaurentCoefficients,
}

impl LaurentReport {
    /// Largest deviation of any sample from the analytic coefficients.
    pub fn max_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                (s.coefficients.residue - self.expected.residue)
                    .norm()
                    .max((s.coefficients.constant - self.expected.constant).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Largest disagreement between samples at different radii.
    pub fn radius_spread(&self) -> f64 {
        let mut spread: f64 = 0.0;
        for a in &self.samples {
            for b in &self.samples {
                let d = (a.coefficients.residue - b.coefficients.residue)
                    .norm()
                    .max((a.coefficients.constant - b.coefficients.constant).norm());
                spread = spread.max(d);
            }
        }
        spread
    }
}

/// Residue `(1/2πi)∮f` and constant term `(1/2πi)∮f/(t − p)` of `function`
/// at its expansion point, measured on circles of the given radii, each a
/// fraction of the single-pole bound.
pub fn laurent_probe(function: LaurentFunction, r: &Resonance, radius_fractions: &[f64]) -> Result<LaurentReport> {
    let e = r.modulus();
    let center = function.center(e);
    let bound = function.radius_bound(e);
    let samples = radius_fractions
        .iter()
        .map(|&fraction| {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(MelnikovError::SingleEnclosureViolation {
                    radius: fraction * bound,
                    bound,
                });
            }
            let radius = fraction * bound;
            let ([res, cst], _) = circle_integral(center, radius, 64, |t| {
                let v = function.eval(t, e, r.omega())?;
                Ok([v, v / (t - center)])
            })?;
            let scale = 1.0 / (2.0 * PI * I);
            Ok(LaurentSample {
                radius,
                coefficients: LaurentCoefficients {
                    residue: res * scale,
                    constant: cst * scale,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LaurentReport {
        function,
        center,
        samples,
        expected: function.expected(e, r.omega()),
    })
}

/// Compares `∫ₐᵇ cn²t dt` with `−∫ (1/s²)√((1−s²)/(k²−s²)) ds` over the image
/// of `[a, b]` under `s = 1/sn t`; returns the absolute discrepancy.
/// Requires `0 < a ≤ b < K`, where `sn` and `cn` keep one sign.
pub fn substitution_check(e: &EllipticModulus, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a <= b && b < e.first_kind()) {
        return Err(domain("path", b - a, "0 < a <= b < K"));
    }
    if a == b {
        return Ok(0.0);
    }
    let k2 = e.k() * e.k();
    let tol = 1e-13;
    let lhs = adaptive_simpson(
        &|t| {
            let cn = crate::elliptic::jacobi_real(t, e).cn;
            cn * cn
        },
        a,
        b,
        tol,
    );
    let s_of = |t: f64| 1.0 / crate::elliptic::jacobi_real(t, e).sn;
    let rhs = -adaptive_simpson(
        &|s| ((1.0 - s * s) / (k2 - s * s)).sqrt() / (s * s),
        s_of(a),
        s_of(b),
        tol,
    );
    Ok((lhs - rhs).abs())
}
