//! The unperturbed pendulum and its forced, damped perturbation.
//!
//! Orbits of `H = 1 − cos x₁ + x₂²/2` come in closed form:
//!
//! | family            | state                                   | period   |
//! |-------------------|-----------------------------------------|----------|
//! | inner (libration) | `(2 asin(k sn t), 2k cn t)`             | `4K`     |
//! | rotating ±        | `(±2 am(t/k), ±(2/k) dn(t/k))`          | `2kK`    |
//! | homoclinic ±      | `(±2 asin(tanh t), ±2 sech t)`          | ∞        |
//!
//! Rotating angles are unwrapped (`2 am` rather than `2 asin sn`) so the
//! state is continuous on the real line.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{amplitude, jacobi_complex, jacobi_real, EllipticModulus, POLE_THRESHOLD};
use crate::error::{domain, MelnikovError, Result};

/// A planar Hamiltonian system with a time-periodic perturbation,
/// `ẋ = J DH(x) + ε g(x, ωt)`.
pub trait ForcedSystem: Sync {
    fn hamiltonian(&self, x: [f64; 2]) -> f64;

    fn grad_hamiltonian(&self, x: [f64; 2]) -> [f64; 2];

    /// The perturbation `g(x, phase)`, 2π-periodic in `phase`.
    fn perturbation(&self, x: [f64; 2], phase: f64) -> [f64; 2];

    /// Forcing frequency ω.
    fn omega(&self) -> f64;

    fn vector_field(&self, t: f64, x: [f64; 2], eps: f64) -> [f64; 2] {
        let dh = self.grad_hamiltonian(x);
        let g = self.perturbation(x, self.omega() * t);
        [dh[1] + eps * g[0], -dh[0] + eps * g[1]]
    }

    /// `DH(x) · g(x, phase)`, the Melnikov integrand.
    fn melnikov_integrand(&self, x: [f64; 2], phase: f64) -> f64 {
        let dh = self.grad_hamiltonian(x);
        let g = self.perturbation(x, phase);
        dh[0] * g[0] + dh[1] * g[1]
    }

    /// Jacobian of [`ForcedSystem::vector_field`] in `x`, by centered differences.
    fn jacobian(&self, t: f64, x: [f64; 2], eps: f64) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for col in 0..2 {
            let h = 1e-6 * x[col].abs().max(1.0);
            let (mut xp, mut xm) = (x, x);
            xp[col] += h;
            xm[col] -= h;
            let (fp, fm) = (self.vector_field(t, xp, eps), self.vector_field(t, xm, eps));
            for row in 0..2 {
                out[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        out
    }
}

/// The periodically forced damped pendulum,
/// `ẍ₁ = −sin x₁ + ε(β cos ωt − δ ẋ₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedPendulum {
    pub beta: f64,
    pub delta: f64,
    pub omega: f64,
}

impl ForcedPendulum {
    pub fn new(beta: f64, delta: f64, omega: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(domain("beta", beta, "finite, >= 0"));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(domain("delta", delta, "finite, >= 0"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(domain("omega", omega, "finite, > 0"));
        }
        Ok(Self { beta, delta, omega })
    }
}

impl ForcedSystem for ForcedPendulum {
    fn hamiltonian(&self, x: [f64; 2]) -> f64 {
        1.0 - x[0].cos() + 0.5 * x[1] * x[1]
    }

    fn grad_hamiltonian(&self, x: [f64; 2]) -> [f64; 2] {
        [x[0].sin(), x[1]]
    }

    fn perturbation(&self, x: [f64; 2], phase: f64) -> [f64; 2] {
        [0.0, self.beta * phase.cos() - self.delta * x[1]]
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn jacobian(&self, _t: f64, x: [f64; 2], eps: f64) -> [[f64; 2]; 2] {
        [[0.0, 1.0], [-x[0].cos(), -eps * self.delta]]
    }
}

/// Which of the two mirror-image branches (upper `+`, lower `−`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Inner,
    RotatingPlus,
    RotatingMinus,
    HomoclinicPlus,
    HomoclinicMinus,
}

impl FamilyTag {
    pub fn is_homoclinic(self) -> bool {
        matches!(self, FamilyTag::HomoclinicPlus | FamilyTag::HomoclinicMinus)
    }

    pub fn is_rotating(self) -> bool {
        matches!(self, FamilyTag::RotatingPlus | FamilyTag::RotatingMinus)
    }

    pub fn branch(self) -> Branch {
        match self {
            FamilyTag::RotatingMinus | FamilyTag::HomoclinicMinus => Branch::Minus,
            _ => Branch::Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::Inner => "inner",
            FamilyTag::RotatingPlus => "rotating-plus",
            FamilyTag::RotatingMinus => "rotating-minus",
            FamilyTag::HomoclinicPlus => "homoclinic-plus",
            FamilyTag::HomoclinicMinus => "homoclinic-minus",
        }
    }
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub x1: f64,
    pub x2: f64,
}

impl OrbitPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

/// Orbit state at complex time. The angle itself is multivalued there, so
/// only `sin x₁` and `x₂` are carried; they are all `DH · g` needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexOrbitPoint {
    pub sin_x1: Complex64,
    pub x2: Complex64,
}

/// One closed-form orbit of the unperturbed pendulum.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitFamily {
    tag: FamilyTag,
    modulus: Option<EllipticModulus>,
}

impl OrbitFamily {
    pub fn inner(modulus: EllipticModulus) -> Self {
        Self {
            tag: FamilyTag::Inner,
            modulus: Some(modulus),
        }
    }

    pub fn rotating(modulus: EllipticModulus, branch: Branch) -> Self {
        let tag = match branch {
            Branch::Plus => FamilyTag::RotatingPlus,
            Branch::Minus => FamilyTag::RotatingMinus,
        };
        Self {
            tag,
            modulus: Some(modulus),
        }
    }

    pub fn homoclinic(branch: Branch) -> Self {
        let tag = match branch {
            Branch::Plus => FamilyTag::HomoclinicPlus,
            Branch::Minus => FamilyTag::HomoclinicMinus,
        };
        Self { tag, modulus: None }
    }

    /// Builds a family from its tag; periodic tags need a modulus.
    pub fn new(tag: FamilyTag, modulus: Option<EllipticModulus>) -> Result<Self> {
        match (tag, modulus) {
            (FamilyTag::Inner, Some(m)) => Ok(Self::inner(m)),
            (t, Some(m)) if t.is_rotating() => Ok(Self::rotating(m, t.branch())),
            (t, _) if t.is_homoclinic() => Ok(Self::homoclinic(t.branch())),
            (_, None) => Err(domain("modulus", f64::NAN, "required for periodic families")),
            _ => unreachable!(),
        }
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn modulus(&self) -> Option<&EllipticModulus> {
        self.modulus.as_ref()
    }

    fn sign(&self) -> f64 {
        self.tag.branch().sign()
    }

    /// `4K` (inner), `2kK` (rotating), `+∞` (homoclinic).
    pub fn period(&self) -> f64 {
        match (&self.modulus, self.tag) {
            (Some(m), FamilyTag::Inner) => 4.0 * m.first_kind(),
            (Some(m), _) => 2.0 * m.k() * m.first_kind(),
            (None, _) => f64::INFINITY,
        }
    }

    /// Energy level: `2k²`, `2/k²` or 2.
    pub fn energy(&self) -> f64 {
        match (&self.modulus, self.tag) {
            (Some(m), FamilyTag::Inner) => 2.0 * m.k() * m.k(),
            (Some(m), _) => 2.0 / (m.k() * m.k()),
            (None, _) => 2.0,
        }
    }

    pub fn state(&self, t: f64) -> OrbitPoint {
        let s = self.sign();
        match (&self.modulus, self.tag) {
            (Some(m), FamilyTag::Inner) => {
                let j = jacobi_real(t, m);
                OrbitPoint::new(2.0 * (m.k() * j.sn).asin(), 2.0 * m.k() * j.cn)
            }
            (Some(m), _) => {
                let u = t / m.k();
                let j = jacobi_real(u, m);
                OrbitPoint::new(s * 2.0 * amplitude(u, m), s * 2.0 / m.k() * j.dn)
            }
            (None, _) => OrbitPoint::new(s * 2.0 * t.tanh().asin(), s * 2.0 / t.cosh()),
        }
    }

    /// `(sin x₁, x₂)` at complex time.
    pub fn complex_state(&self, t: Complex64) -> Result<ComplexOrbitPoint> {
        let s = self.sign();
        match (&self.modulus, self.tag) {
            (Some(m), FamilyTag::Inner) => {
                let j = jacobi_complex(t, m)?;
                // sin(2 asin(k sn)) = 2k sn dn
                Ok(ComplexOrbitPoint {
                    sin_x1: 2.0 * m.k() * j.sn * j.dn,
                    x2: 2.0 * m.k() * j.cn,
                })
            }
            (Some(m), _) => {
                let j = jacobi_complex(t / m.k(), m)?;
                Ok(ComplexOrbitPoint {
                    sin_x1: s * 2.0 * j.sn * j.cn,
                    x2: s * 2.0 / m.k() * j.dn,
                })
            }
            (None, _) => {
                let l = ((t.im - FRAC_PI_2) / PI).round();
                let pole = Complex64::new(0.0, FRAC_PI_2 + l * PI);
                let distance = (t - pole).norm();
                if !(distance >= POLE_THRESHOLD) {
                    return Err(MelnikovError::PoleProximity { t, pole, distance });
                }
                let sech = t.cosh().inv();
                Ok(ComplexOrbitPoint {
                    sin_x1: s * 2.0 * t.tanh() * sech,
                    x2: s * 2.0 * sech,
                })
            }
        }
    }

    /// The singularity of the orbit closest above the real axis at `Re t = 0`:
    /// `iK'` (inner), `ikK'` (rotating), `iπ/2` (homoclinic).
    pub fn pole(&self) -> Complex64 {
        match (&self.modulus, self.tag) {
            (Some(m), FamilyTag::Inner) => Complex64::new(0.0, m.first_kind_prime()),
            (Some(m), _) => Complex64::new(0.0, m.k() * m.first_kind_prime()),
            (None, _) => Complex64::new(0.0, FRAC_PI_2),
        }
    }
}

/// Largest deviation of the closed form from the pendulum equations,
/// `max |ẋ − (x₂, −sin x₁)|` over `t_grid`, with a fourth-order centered
/// difference of step `1e−3`.
pub fn orbit_ode_residual(family: &OrbitFamily, t_grid: &[f64]) -> f64 {
    const H: f64 = 1e-3;
    t_grid
        .iter()
        .map(|&t| {
            let p = |dt: f64| family.state(t + dt);
            let (p2, p1, m1, m2) = (p(2.0 * H), p(H), p(-H), p(-2.0 * H));
            let d = |f: fn(OrbitPoint) -> f64| {
                (-f(p2) + 8.0 * f(p1) - 8.0 * f(m1) + f(m2)) / (12.0 * H)
            };
            let here = family.state(t);
            let r1 = d(|q| q.x1) - here.x2;
            let r2 = d(|q| q.x2) + here.x1.sin();
            r1.hypot(r2)
        })
        .fold(0.0, f64::max)
}

/// Distance from a point to `Γ = Γ₊ ∪ Γ₋ ∪ {(π, 0)}`, the separatrix set.
pub fn distance_to_separatrix(p: OrbitPoint) -> f64 {
    // Γ₋ mirrors Γ₊, and a point in the upper half plane is never closer to Γ₋
    let a = (p.x1 + PI).rem_euclid(2.0 * PI) - PI;
    let b = p.x2.abs();
    [-2.0 * PI, 0.0, 2.0 * PI]
        .into_iter()
        .map(|shift| distance_to_upper_branch(a + shift, b))
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `(a, b)` to `{(x, 2cos(x/2)) : |x| ≤ π}`.
fn distance_to_upper_branch(a: f64, b: f64) -> f64 {
    let d2 = |x: f64| (a - x).powi(2) + (b - 2.0 * (0.5 * x).cos()).powi(2);
    const GRID: usize = 512;
    let step = 2.0 * PI / GRID as f64;
    let best = (0..=GRID)
        .map(|i| -PI + i as f64 * step)
        .min_by(|x, y| d2(*x).total_cmp(&d2(*y)))
        .unwrap_or(0.0);
    // golden-section refinement on the bracketing cell
    let (mut lo, mut hi) = ((best - step).max(-PI), (best + step).min(PI));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (d2(x1), d2(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = d2(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = d2(x2);
        }
    }
    f1.min(f2).min(d2(best)).sqrt()
}

/// `sup_t d(x(t), Γ)` over one period of a periodic family, sampled at 512
/// points.
pub fn homoclinic_limit_distance(family: &OrbitFamily) -> Result<f64> {
    if family.tag().is_homoclinic() {
        return Err(domain("family", f64::NAN, "inner or rotating"));
    }
    const SAMPLES: usize = 512;
    let period = family.period();
    Ok((0..SAMPLES)
        .map(|i| distance_to_separatrix(family.state(period * i as f64 / SAMPLES as f64)))
        .fold(0.0, f64::max))
}
