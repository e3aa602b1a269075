//! Subharmonic and homoclinic Melnikov functions of the forced pendulum.
//!
//! Resonant orbits are found by bisection on the complementary modulus `k'`,
//! which keeps the defining equation well resolved even when the orbit hugs
//! the separatrix (`k'` of order `1e−7` at `m = 11`). Melnikov integrals are
//! computed both by trapezoid quadrature of `DH · g` along the closed-form
//! orbit and from the residue closed forms, so the two can be cross-checked.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticModulus;
use crate::error::{domain, MelnikovError, Result};
use crate::pendulum::{Branch, FamilyTag, ForcedSystem, OrbitFamily};
use crate::quad::{trapezoid_doubling, DoublingRule};

/// Relative tolerance for the node-doubling quadratures.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Relative width of the tangency band in [`simple_zeros`].
pub const TANGENCY_TOL: f64 = 1e-12;

/// Multiplier in the damping coefficient `16·c·(E − k'²K)` (inner) and
/// `8·c·E/k` (rotating): the number of orbit periods `n` or the number of
/// forcing periods `m` in the integration window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum J1Convention {
    #[default]
    #[serde(rename = "n")]
    OrbitPeriods,
    #[serde(rename = "m")]
    ForcingPeriods,
}

/// Forcing phase along the separatrix: `ωt + θ` or `t + θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HomoclinicPhase {
    #[default]
    #[serde(rename = "omega-t")]
    OmegaT,
    #[serde(rename = "t")]
    UnitT,
}

impl HomoclinicPhase {
    fn frequency(self, omega: f64) -> f64 {
        match self {
            HomoclinicPhase::OmegaT => omega,
            HomoclinicPhase::UnitT => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conventions {
    pub j1_arg: J1Convention,
    pub hom_phase: HomoclinicPhase,
}

pub fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A resonant periodic orbit: `n` orbit periods span `m` forcing periods.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    m: u32,
    n: u32,
    family: FamilyTag,
    modulus: EllipticModulus,
    omega: f64,
}

/// Flat, serializable view of a [`Resonance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRecord {
    pub family: FamilyTag,
    pub m: u32,
    pub n: u32,
    pub k: f64,
    pub k_prime: f64,
    pub omega: f64,
    pub period: f64,
    /// ω recomputed from `k` minus the requested ω.
    pub omega_check: f64,
}

impl Resonance {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn modulus(&self) -> &EllipticModulus {
        &self.modulus
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn orbit(&self) -> OrbitFamily {
        OrbitFamily::new(self.family, Some(self.modulus.clone())).expect("periodic family")
    }

    /// Same resonance on the mirror-image rotating branch.
    pub fn with_family(&self, family: FamilyTag) -> Result<Self> {
        let same_kind = (family == FamilyTag::Inner) == (self.family == FamilyTag::Inner);
        if family.is_homoclinic() || !same_kind {
            return Err(domain("family", f64::NAN, "same periodic family kind"));
        }
        Ok(Self {
            family,
            ..self.clone()
        })
    }

    /// `2πm/ω`, the integration window of the subharmonic Melnikov function.
    pub fn window(&self) -> f64 {
        2.0 * PI * self.m as f64 / self.omega
    }

    /// ω implied by `k`: `πm/(2nK)` (inner) or `πm/(nkK)` (rotating).
    pub fn resonant_omega(&self) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        let big_k = self.modulus.first_kind();
        match self.family {
            FamilyTag::Inner => PI * m / (2.0 * n * big_k),
            _ => PI * m / (n * self.modulus.k() * big_k),
        }
    }

    /// Residual of `K(k) = πm/(2nω)` or `kK(k) = πm/(nω)`.
    pub fn defining_residual(&self) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        let big_k = self.modulus.first_kind();
        match self.family {
            FamilyTag::Inner => big_k - PI * m / (2.0 * n * self.omega),
            _ => self.modulus.k() * big_k - PI * m / (n * self.omega),
        }
    }

    pub fn record(&self) -> ResonanceRecord {
        ResonanceRecord {
            family: self.family,
            m: self.m,
            n: self.n,
            k: self.modulus.k(),
            k_prime: self.modulus.k_prime(),
            omega: self.omega,
            period: self.orbit().period(),
            omega_check: self.resonant_omega() - self.omega,
        }
    }
}

/// Solves the resonance condition for `k`.
///
/// The inner family needs `m/n > ω`; otherwise [`MelnikovError::NoSolution`]
/// is returned. The rotating families resolve for every positive ω.
pub fn solve_resonance(family: FamilyTag, omega: f64, m: u32, n: u32) -> Result<Resonance> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(domain("omega", omega, "finite, > 0"));
    }
    if m == 0 || n == 0 || gcd(m, n) != 1 {
        return Err(domain("m/n", m as f64 / n as f64, "m, n positive and coprime"));
    }
    if family.is_homoclinic() {
        return Err(domain("family", f64::NAN, "inner or rotating"));
    }
    let (mf, nf) = (m as f64, n as f64);
    // g(k') is decreasing in k' with g(0+) = +∞
    let (target, g): (f64, Box<dyn Fn(&EllipticModulus) -> f64>) = match family {
        FamilyTag::Inner => {
            let target = PI * mf / (2.0 * nf * omega);
            if target <= std::f64::consts::FRAC_PI_2 {
                return Err(MelnikovError::NoSolution(format!(
                    "inner resonance {m}/{n} needs m/n > omega = {omega}"
                )));
            }
            (target, Box::new(|e: &EllipticModulus| e.first_kind()))
        }
        _ => (
            PI * mf / (nf * omega),
            Box::new(|e: &EllipticModulus| e.k() * e.first_kind()),
        ),
    };
    let residual = |kp: f64| -> Result<(f64, EllipticModulus)> {
        let e = EllipticModulus::from_complement(kp)?;
        Ok((g(&e) - target, e))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best: Option<(f64, EllipticModulus)> = None;
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (r, e) = residual(mid)?;
        if best.as_ref().map_or(true, |(b, _)| r.abs() < b.abs()) {
            best = Some((r, e));
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, modulus) = best.ok_or_else(|| {
        MelnikovError::NoSolution(format!("no modulus bracketed for {m}/{n} at omega = {omega}"))
    })?;
    Ok(Resonance {
        m,
        n,
        family,
        modulus,
        omega,
    })
}

/// All coprime `(m, n)` with `m ≤ m_max`, `n ≤ n_max` whose resonant modulus
/// lies strictly inside `k_window`, sorted by `k`.
pub fn enumerate_resonances(
    family: FamilyTag,
    omega: f64,
    k_window: (f64, f64),
    m_max: u32,
    n_max: u32,
) -> Result<Vec<Resonance>> {
    let (k_lo, k_hi) = k_window;
    if !(0.0 < k_lo && k_lo < k_hi && k_hi < 1.0) {
        return Err(domain("k window", k_lo, "0 < k_lo < k_hi < 1"));
    }
    let mut out = Vec::new();
    for m in 1..=m_max {
        for n in 1..=n_max {
            if gcd(m, n) != 1 {
                continue;
            }
            match solve_resonance(family, omega, m, n) {
                Ok(r) if r.modulus.k() > k_lo && r.modulus.k() < k_hi => out.push(r),
                Ok(_) | Err(MelnikovError::NoSolution(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    out.sort_by(|a, b| a.modulus.k().total_cmp(&b.modulus.k()).then(a.m.cmp(&b.m)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Quadrature,
    ClosedForm,
}

/// `θ ↦ const_term + cos_coeff · cos θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelnikovCurve {
    pub const_term: f64,
    pub cos_coeff: f64,
    pub provenance: Provenance,
}

impl MelnikovCurve {
    pub fn evaluate(&self, theta: f64) -> f64 {
        self.const_term + self.cos_coeff * theta.cos()
    }

    pub fn slope(&self, theta: f64) -> f64 {
        -self.cos_coeff * theta.sin()
    }

    pub fn is_identically_zero(&self, tol: f64) -> bool {
        self.const_term.abs() <= tol && self.cos_coeff.abs() <= tol
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.cos_coeff.abs() <= tol
    }
}

/// `∫₀^{2πm/ω} DH(x(t)) · g(x(t), ωt + θ) dt` along the resonant orbit.
pub fn subharmonic_quadrature<S: ForcedSystem + ?Sized>(sys: &S, r: &Resonance, theta: f64) -> Result<f64> {
    let orbit = r.orbit();
    let omega = r.omega;
    let q = trapezoid_doubling(
        |t| Ok(sys.melnikov_integrand(orbit.state(t).as_array(), omega * t + theta)),
        0.0,
        r.window(),
        DoublingRule {
            rel_tol: QUADRATURE_TOL,
            ..DoublingRule::default()
        },
    )?;
    Ok(q.value)
}

/// Half-width of the truncated separatrix integral, `40 + 5 ln(1/tol)`.
pub fn homoclinic_truncation(tol: f64) -> f64 {
    40.0 + 5.0 * (1.0 / tol).ln()
}

/// `∫ DH(x_h(t)) · g(x_h(t), νt + θ) dt` over the separatrix branch, with
/// `ν = ω` or `1` as selected by `phase`.
pub fn homoclinic_quadrature<S: ForcedSystem + ?Sized>(
    sys: &S,
    branch: Branch,
    theta: f64,
    phase: HomoclinicPhase,
) -> Result<f64> {
    let orbit = OrbitFamily::homoclinic(branch);
    let nu = phase.frequency(sys.omega());
    let half = homoclinic_truncation(1e-13);
    let q = trapezoid_doubling(
        |t| Ok(sys.melnikov_integrand(orbit.state(t).as_array(), nu * t + theta)),
        -half,
        2.0 * half,
        DoublingRule {
            initial_nodes: 1024,
            rel_tol: QUADRATURE_TOL,
            ..DoublingRule::default()
        },
    )?;
    Ok(q.value)
}

/// Cosine-form curve read off two quadratures, at `θ = 0` and `θ = π`.
/// Exact for perturbations affine in `cos(phase)`, as the pendulum's is.
pub fn quadrature_curve<S: ForcedSystem + ?Sized>(sys: &S, r: &Resonance) -> Result<MelnikovCurve> {
    let a = subharmonic_quadrature(sys, r, 0.0)?;
    let b = subharmonic_quadrature(sys, r, PI)?;
    Ok(MelnikovCurve {
        const_term: 0.5 * (a + b),
        cos_coeff: 0.5 * (a - b),
        provenance: Provenance::Quadrature,
    })
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `J₁`: `16c(E − k'²K)` for the inner family, `8cE/k` for rotating ones.
pub fn damping_coefficient(r: &Resonance, convention: J1Convention) -> f64 {
    let c = match convention {
        J1Convention::OrbitPeriods => r.n as f64,
        J1Convention::ForcingPeriods => r.m as f64,
    };
    let e = &r.modulus;
    match r.family {
        FamilyTag::Inner => 16.0 * c * (e.second_kind() - e.k_prime() * e.k_prime() * e.first_kind()),
        _ => 8.0 * c * e.second_kind() / e.k(),
    }
}

/// `J₂`: `4π sech(ωK')` (inner, `n = 1`, `m` odd) or `2π sech(kωK')`
/// (rotating, `n = 1`); zero otherwise.
pub fn forcing_coefficient(r: &Resonance) -> f64 {
    let e = &r.modulus;
    match r.family {
        FamilyTag::Inner if r.n == 1 && r.m % 2 == 1 => 4.0 * PI * sech(r.omega * e.first_kind_prime()),
        FamilyTag::Inner => 0.0,
        _ if r.n == 1 => 2.0 * PI * sech(e.k() * r.omega * e.first_kind_prime()),
        _ => 0.0,
    }
}

/// Residue closed form of the subharmonic Melnikov function.
pub fn closed_form_subharmonic(r: &Resonance, beta: f64, delta: f64, convention: J1Convention) -> MelnikovCurve {
    let sign = match r.family {
        FamilyTag::RotatingMinus => -1.0,
        _ => 1.0,
    };
    MelnikovCurve {
        const_term: -delta * damping_coefficient(r, convention),
        cos_coeff: sign * beta * forcing_coefficient(r),
        provenance: Provenance::ClosedForm,
    }
}

/// `M±(θ) = −8δ ± 2πβ sech(πν/2) cos θ`.
pub fn closed_form_homoclinic(branch: Branch, beta: f64, delta: f64, omega: f64, phase: HomoclinicPhase) -> MelnikovCurve {
    let nu = phase.frequency(omega);
    MelnikovCurve {
        const_term: -8.0 * delta,
        cos_coeff: branch.sign() * 2.0 * PI * beta * sech(0.5 * PI * nu),
        provenance: Provenance::ClosedForm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveZero {
    pub theta: f64,
    pub slope: f64,
    pub simple: bool,
}

/// Zeros of a cosine-form curve in `[0, 2π)`.
///
/// Two simple zeros `±acos(−c/a)` exist when `|c| < |a|`. At tangency
/// (`|c| = |a|` within [`TANGENCY_TOL`] relative) the single double zero is
/// returned with `simple = false`. An identically zero curve has no isolated
/// zeros and yields an empty list.
pub fn simple_zeros(curve: &MelnikovCurve) -> Vec<CurveZero> {
    let (c, a) = (curve.const_term, curve.cos_coeff);
    let scale = c.abs().max(a.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if (c.abs() - a.abs()).abs() <= TANGENCY_TOL * scale {
        // cos θ = −c/a = ±1
        let theta = if -c / a > 0.0 { 0.0 } else { PI };
        return vec![CurveZero {
            theta,
            slope: 0.0,
            simple: false,
        }];
    }
    if c.abs() > a.abs() {
        return Vec::new();
    }
    let first = (-c / a).acos();
    [first, 2.0 * PI - first]
        .into_iter()
        .map(|theta| {
            let slope = curve.slope(theta);
            CurveZero {
                theta,
                slope,
                simple: slope.abs() > 1e-10,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosVerdict {
    pub holds: bool,
    /// `(β/δ) / ((4/π) cosh(πω/2))`; infinite when `δ = 0 < β`.
    #[serde(with = "extended_float")]
    pub ratio: f64,
}

/// Serializes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`,
/// which JSON has no number syntax for.
pub mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// The separatrix-splitting criterion `β/δ > (4/π) cosh(πω/2)`.
pub fn chaos_condition(beta: f64, delta: f64, omega: f64) -> ChaosVerdict {
    if delta == 0.0 {
        return if beta > 0.0 {
            ChaosVerdict {
                holds: true,
                ratio: f64::INFINITY,
            }
        } else {
            ChaosVerdict {
                holds: false,
                ratio: 0.0,
            }
        };
    }
    let ratio = (beta / delta) / (4.0 / PI * (0.5 * PI * omega).cosh());
    ChaosVerdict {
        holds: ratio > 1.0,
        ratio,
    }
}

/// Gap between a subharmonic closed form at `n = 1` and its separatrix limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitGap {
    pub m: u32,
    pub k: f64,
    pub gap: f64,
}

/// `sech x − sech y` without cancellation for nearby arguments.
fn sech_difference(x: f64, y: f64) -> f64 {
    -2.0 * (0.5 * (x + y)).sinh() * (0.5 * (x - y)).sinh() / (x.cosh() * y.cosh())
}

/// For each `m`, `sup_θ |M^{m/1}(θ) − L(θ)|`.
///
/// Rotating branches compare with their own separatrix, `L = M±`. The inner
/// orbit passes near both separatrices within one period, the lower one half
/// a period (`2K`, i.e. forcing phase `mπ`) after the upper one, so
/// `L(θ) = M₊(θ) + M₋(θ + mπ)`.
///
/// The coefficient differences shrink like `k'²` as `m` grows, so they are
/// formed from [`EllipticModulus::second_kind_excess`] and
/// [`EllipticModulus::first_kind_prime_excess`] rather than by subtracting
/// the two curves.
pub fn homoclinic_limit_check(
    family: FamilyTag,
    omega: f64,
    beta: f64,
    delta: f64,
    m_list: &[u32],
    theta_grid: &[f64],
) -> Result<Vec<LimitGap>> {
    if family.is_homoclinic() {
        return Err(domain("family", f64::NAN, "inner or rotating"));
    }
    let y = 0.5 * PI * omega;
    m_list
        .iter()
        .map(|&m| {
            let r = solve_resonance(family, omega, m, 1)?;
            let e = &r.modulus;
            let (k, kp) = (e.k(), e.k_prime());
            // (M^{m/1} − L)(θ) = dc + da cos θ
            let (dc, da) = match family {
                FamilyTag::Inner => {
                    // J₁ − 16 = 16((E − 1) − k'²K)
                    let dj1 = 16.0 * (e.second_kind_excess() - kp * kp * e.first_kind());
                    let da = if m % 2 == 1 {
                        4.0 * PI * beta * sech_difference(omega * e.first_kind_prime(), y)
                    } else {
                        0.0
                    };
                    (-delta * dj1, da)
                }
                _ => {
                    // J̃₁ − 8 = 8((E − 1) + (1 − k))/k
                    let dj1 = 8.0 * (e.second_kind_excess() + kp * kp / (1.0 + k)) / k;
                    // kωK' − πω/2 = ω(k(K' − π/2) − (1 − k)π/2)
                    let x = y + omega * (k * e.first_kind_prime_excess() - kp * kp / (1.0 + k) * FRAC_PI_2);
                    let sign = family.branch().sign();
                    (-delta * dj1, sign * 2.0 * PI * beta * sech_difference(x, y))
                }
            };
            let gap = theta_grid
                .iter()
                .map(|&th| (dc + da * th.cos()).abs())
                .fold(0.0, f64::max);
            Ok(LimitGap { m, k, gap })
        })
        .collect()
}

/// `n` uniform points on `[0, 2π)`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}
