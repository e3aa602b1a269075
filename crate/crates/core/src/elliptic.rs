//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! Everything is driven by the arithmetic–geometric mean. The AGM sequence
//! `a_n, b_n, c_n` started from `(1, k', k)` gives `K` and `E` directly and
//! seeds the descending Landen recursion for `sn`, `cn` and `dn` on the real
//! line. Complex arguments go through the addition theorem, which only needs
//! real evaluations at `k` and at the complementary modulus `k'`.
//!
//! A modulus can be built from `k` or from `k'`. Orbits close to the
//! separatrix have `k'` far below `f64::EPSILON`-relative resolution of `k`,
//! and only the complementary constructor keeps `K(k)` accurate there.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{domain, MelnikovError, Result};

/// Distance (in the `t` plane) below which complex evaluation is refused.
pub const POLE_THRESHOLD: f64 = 1e-9;

const MAX_AGM_TERMS: usize = 48;

/// The AGM sequence `a_n`, `c_n` for one modulus, kept for the Landen recursion.
#[derive(Debug, Clone, PartialEq)]
struct LandenSequence {
    a: [f64; MAX_AGM_TERMS],
    c: [f64; MAX_AGM_TERMS],
    len: usize,
}

impl LandenSequence {
    fn new(k: f64, k_prime: f64) -> Self {
        let mut a = [0.0; MAX_AGM_TERMS];
        let mut c = [0.0; MAX_AGM_TERMS];
        a[0] = 1.0;
        c[0] = k;
        let mut b = k_prime;
        let mut len = 1;
        while len < MAX_AGM_TERMS && c[len - 1].abs() > f64::EPSILON * a[len - 1] {
            let prev = a[len - 1];
            let next = 0.5 * (prev + b);
            c[len] = c[len - 1] * c[len - 1] / (4.0 * next);
            b = (prev * b).sqrt();
            a[len] = next;
            len += 1;
        }
        Self { a, c, len }
    }

    fn agm(&self) -> f64 {
        self.a[self.len - 1]
    }

    fn first_kind(&self) -> f64 {
        FRAC_PI_2 / self.agm()
    }

    /// `Σ 2^{n−1} c_n²`, so that `E = K (1 − Σ)`.
    fn weighted_sum(&self) -> f64 {
        let mut weight = 0.5;
        let mut sum = 0.0;
        for &c in &self.c[..self.len] {
            sum += weight * c * c;
            weight *= 2.0;
        }
        sum
    }

    fn second_kind(&self) -> f64 {
        self.first_kind() * (1.0 - self.weighted_sum())
    }

    /// `(sn, cn)` by the descending Landen recursion. Accurate for `|u| ≤ K/2`.
    fn sn_cn(&self, u: f64) -> (f64, f64) {
        let last = self.len - 1;
        let mut phi = 2f64.powi(last as i32) * self.a[last] * u;
        for n in (1..=last).rev() {
            phi = 0.5 * (phi + (self.c[n] / self.a[n] * phi.sin()).asin());
        }
        phi.sin_cos()
    }
}

fn agm_first_kind(k_prime: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, k_prime);
    for _ in 0..MAX_AGM_TERMS {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    FRAC_PI_2 / a
}

fn complement_of(x: f64) -> f64 {
    ((1.0 - x) * (1.0 + x)).sqrt()
}

/// Complete elliptic integral of the first kind `K(k)`, `0 ≤ k < 1`.
pub fn complete_first_kind(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(domain("k", k, "0 <= k < 1"));
    }
    Ok(agm_first_kind(complement_of(k)))
}

/// Complete elliptic integral of the second kind `E(k)`, `0 ≤ k ≤ 1`.
pub fn complete_second_kind(k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&k) {
        return Err(domain("k", k, "0 <= k <= 1"));
    }
    if k == 1.0 {
        return Ok(1.0);
    }
    Ok(LandenSequence::new(k, complement_of(k)).second_kind())
}

/// A validated elliptic modulus `k ∈ (0, 1)` with its complete integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticModulus {
    k: f64,
    k_prime: f64,
    big_k: f64,
    big_e: f64,
    big_k_prime: f64,
    big_e_prime: f64,
    seq: LandenSequence,
    seq_prime: LandenSequence,
}

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(domain("k", k, "0 < k < 1"));
        }
        Ok(Self::from_pair(k, complement_of(k)))
    }

    /// Builds the modulus from `k' = √(1 − k²)`; `k` is derived from it.
    pub fn from_complement(k_prime: f64) -> Result<Self> {
        if !(k_prime > 0.0 && k_prime < 1.0) {
            return Err(domain("k'", k_prime, "0 < k' < 1"));
        }
        Ok(Self::from_pair(complement_of(k_prime), k_prime))
    }

    fn from_pair(k: f64, k_prime: f64) -> Self {
        let seq = LandenSequence::new(k, k_prime);
        let seq_prime = LandenSequence::new(k_prime, k);
        Self {
            k,
            k_prime,
            big_k: seq.first_kind(),
            big_e: seq.second_kind(),
            big_k_prime: seq_prime.first_kind(),
            big_e_prime: seq_prime.second_kind(),
            seq,
            seq_prime,
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn k_prime(&self) -> f64 {
        self.k_prime
    }

    /// `K(k)`, the real quarter period.
    pub fn first_kind(&self) -> f64 {
        self.big_k
    }

    /// `E(k)`.
    pub fn second_kind(&self) -> f64 {
        self.big_e
    }

    /// `K(k')`, the imaginary quarter period.
    pub fn first_kind_prime(&self) -> f64 {
        self.big_k_prime
    }

    /// `E(k')`.
    pub fn second_kind_prime(&self) -> f64 {
        self.big_e_prime
    }

    /// The modulus `k'` with all roles swapped.
    pub fn complement(&self) -> Self {
        Self {
            k: self.k_prime,
            k_prime: self.k,
            big_k: self.big_k_prime,
            big_e: self.big_e_prime,
            big_k_prime: self.big_k,
            big_e_prime: self.big_e,
            seq: self.seq_prime.clone(),
            seq_prime: self.seq.clone(),
        }
    }

    /// `K' − π/2`, without the cancellation of forming `K'` first.
    ///
    /// Runs the AGM of `(1, k)` on the deviations `1 − a`, `1 − b`, which
    /// stay exact when `k` is close to 1.
    pub fn first_kind_prime_excess(&self) -> f64 {
        let (mut da, mut db) = (0.0f64, self.k_prime * self.k_prime / (1.0 + self.k));
        for _ in 0..MAX_AGM_TERMS {
            if (da - db).abs() <= f64::EPSILON * da.abs().max(db.abs()) {
                break;
            }
            let next = 0.5 * (da + db);
            let one_minus_ab = da + db - da * db;
            db = one_minus_ab / (1.0 + ((1.0 - da) * (1.0 - db)).sqrt());
            da = next;
        }
        FRAC_PI_2 * da / (1.0 - da)
    }

    /// `E − 1`, accurate as `k → 1`.
    ///
    /// From the Legendre relation, `E − 1 = K S' − (K' − π/2)/K'` with
    /// `K' − E' = K' S'`, both terms free of cancellation near `k = 1`.
    pub fn second_kind_excess(&self) -> f64 {
        if self.k_prime >= self.k {
            return self.big_e - 1.0;
        }
        self.big_k * self.seq_prime.weighted_sum() - self.first_kind_prime_excess() / self.big_k_prime
    }

    /// `E K' + E' K − K K'`, which equals π/2.
    pub fn legendre_relation(&self) -> f64 {
        self.big_e * self.big_k_prime + self.big_e_prime * self.big_k
            - self.big_k * self.big_k_prime
    }
}

/// Values of `sn`, `cn`, `dn` at one argument and one modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple<T> {
    pub sn: T,
    pub cn: T,
    pub dn: T,
}

/// Splits `t = 2jK + r` with `|r| ≤ K` and evaluates at `r`.
fn reduced(t: f64, m: &EllipticModulus) -> (f64, JacobiTriple<f64>) {
    let big_k = m.big_k;
    let j = (t / (2.0 * big_k)).round();
    let r = (-j).mul_add(2.0 * big_k, t);
    let ar = r.abs();
    let (sn, cn, dn) = if ar <= 0.5 * big_k {
        let (s, c) = m.seq.sn_cn(ar);
        (s, c, dn_from_cn(c, m))
    } else {
        // sn(K − v) = cn v / dn v, cn(K − v) = k' sn v / dn v, dn(K − v) = k' / dn v
        let v = big_k - ar;
        let (s, c) = m.seq.sn_cn(v);
        let d = dn_from_cn(c, m);
        (c / d, m.k_prime * s / d, m.k_prime / d)
    };
    let sn = if r < 0.0 { -sn } else { sn };
    (j, JacobiTriple { sn, cn, dn })
}

fn dn_from_cn(cn: f64, m: &EllipticModulus) -> f64 {
    (m.k_prime * m.k_prime + m.k * m.k * cn * cn).sqrt()
}

/// `sn`, `cn`, `dn` of a real argument.
pub fn jacobi_real(t: f64, m: &EllipticModulus) -> JacobiTriple<f64> {
    let (j, mut triple) = reduced(t, m);
    if (j as i64).rem_euclid(2) == 1 {
        triple.sn = -triple.sn;
        triple.cn = -triple.cn;
    }
    triple
}

/// The Jacobi amplitude `am(t)`, continuous and increasing on the real line.
pub fn amplitude(t: f64, m: &EllipticModulus) -> f64 {
    let (j, triple) = reduced(t, m);
    j * PI + triple.sn.atan2(triple.cn)
}

/// Nearest point of the pole lattice `2jK + i(2l + 1)K'` to `t`.
pub fn nearest_pole(t: Complex64, m: &EllipticModulus) -> Complex64 {
    let j = (t.re / (2.0 * m.big_k)).round();
    let l = ((t.im - m.big_k_prime) / (2.0 * m.big_k_prime)).round();
    Complex64::new(2.0 * j * m.big_k, (2.0 * l + 1.0) * m.big_k_prime)
}

/// `sn`, `cn`, `dn` of a complex argument, refused within
/// [`POLE_THRESHOLD`] of a pole.
pub fn jacobi_complex(t: Complex64, m: &EllipticModulus) -> Result<JacobiTriple<Complex64>> {
    let pole = nearest_pole(t, m);
    let distance = (t - pole).norm();
    if !(distance >= POLE_THRESHOLD) {
        return Err(MelnikovError::PoleProximity { t, pole, distance });
    }
    let JacobiTriple { sn: s, cn: c, dn: d } = jacobi_real(t.re, m);
    if t.im == 0.0 {
        return Ok(JacobiTriple {
            sn: s.into(),
            cn: c.into(),
            dn: d.into(),
        });
    }
    let comp = m.complement();
    let JacobiTriple {
        sn: s1,
        cn: c1,
        dn: d1,
    } = jacobi_real(t.im, &comp);
    let k2 = m.k * m.k;
    let den = c1 * c1 + k2 * s * s * s1 * s1;
    Ok(JacobiTriple {
        sn: Complex64::new(s * d1, c * d * s1 * c1) / den,
        cn: Complex64::new(c * c1, -s * d * s1 * d1) / den,
        dn: Complex64::new(d * c1 * d1, -k2 * s * c * s1) / den,
    })
}
