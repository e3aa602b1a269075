//! Stroboscopic maps of the forced system and the periodic orbits predicted
//! by simple zeros of the subharmonic Melnikov function.
//!
//! A zero at `θ₀` predicts a `2πm/ω`-periodic orbit near `x(t − θ₀/ω)`, so
//! the time-`2πm/ω` map started at forcing phase 0 should have fixed points
//! near `x(−(θ₀ + 2πi)/ω)`, `i = 0, …, m − 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, MelnikovError, Result};
use crate::melnikov::Resonance;
use crate::ode::{integrate, IntegratorConfig};
use crate::pendulum::{Branch, ForcedSystem, OrbitFamily, OrbitPoint};

/// Residual below which a fixed point counts as converged.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Integrator tolerance for the closure check of the unperturbed map.
pub const ZERO_EPS_TOL: f64 = 1e-14;

/// Angle reduced to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Phase-space distance with the angle difference taken modulo `2π`.
pub fn circle_distance(a: OrbitPoint, b: OrbitPoint) -> f64 {
    wrap_angle(a.x1 - b.x1).hypot(a.x2 - b.x2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapImage {
    /// Image with `x₁` reduced to `(−π, π]`.
    pub point: OrbitPoint,
    /// Whole turns removed from `x₁`.
    pub winding: i64,
}

/// Time-`2πm/ω` map of `ẋ = JDH(x) + εg(x, ωt)` starting at forcing phase
/// `θ_section`, i.e. at `t = θ_section/ω`.
pub fn stroboscopic_map<S: ForcedSystem + ?Sized>(
    sys: &S,
    eps: f64,
    m: u32,
    start: OrbitPoint,
    theta_section: f64,
    cfg: &IntegratorConfig,
) -> Result<MapImage> {
    if m == 0 {
        return Err(domain("m", 0.0, ">= 1"));
    }
    let omega = sys.omega();
    let t0 = theta_section / omega;
    let t1 = t0 + 2.0 * PI * m as f64 / omega;
    let end = integrate(|t, x| sys.vector_field(t, *x, eps), t0, start.as_array(), t1, cfg)?;
    let [x1, x2] = end.state;
    let reduced = wrap_angle(x1);
    Ok(MapImage {
        point: OrbitPoint::new(reduced, x2),
        winding: ((x1 - reduced) / (2.0 * PI)).round() as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicOptions {
    pub seeds: usize,
    pub max_newton: usize,
    pub tol: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SubharmonicOptions {
    fn default() -> Self {
        Self {
            seeds: 32,
            max_newton: 25,
            tol: FIXED_POINT_TOL,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    /// Fixed point on the section `ωt ≡ 0`, angle in `(−π, π]`.
    pub point: OrbitPoint,
    pub theta0: f64,
    /// `|P(x) − x|` with the angle difference reduced modulo `2π`.
    pub residual: f64,
    /// Distance to the nearest predicted point `x(−(θ₀ + 2πi)/ω)`.
    pub distance_to_unperturbed: f64,
    pub converged: bool,
    /// Eigenvalues of the map's Jacobian at the fixed point.
    pub floquet_multipliers: Option<[Complex64; 2]>,
    pub newton_iterations: usize,
}

/// Points of the unperturbed orbit predicted to lie near fixed points.
pub fn predicted_points(r: &Resonance, theta0: f64) -> Vec<OrbitPoint> {
    let orbit = r.orbit();
    (0..r.m())
        .map(|i| {
            let p = orbit.state(-(theta0 + 2.0 * PI * i as f64) / r.omega());
            OrbitPoint::new(wrap_angle(p.x1), p.x2)
        })
        .collect()
}

fn distance_to_set(p: OrbitPoint, set: &[OrbitPoint]) -> f64 {
    set.iter().map(|q| circle_distance(p, *q)).fold(f64::INFINITY, f64::min)
}

struct Shooter<'a, S: ?Sized> {
    sys: &'a S,
    eps: f64,
    m: u32,
    cfg: IntegratorConfig,
}

impl<S: ForcedSystem + ?Sized> Shooter<'_, S> {
    fn displacement(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let img = stroboscopic_map(self.sys, self.eps, self.m, OrbitPoint::new(x[0], x[1]), 0.0, &self.cfg)?;
        Ok([wrap_angle(img.point.x1 - x[0]), img.point.x2 - x[1]])
    }

    /// Jacobian of the map by centered differences.
    fn map_jacobian(&self, x: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-6 * x[j].abs().max(1.0);
            let (mut xp, mut xm) = (x, x);
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (self.displacement(xp)?, self.displacement(xm)?);
            for i in 0..2 {
                // displacement = P(x) − x, so add back the identity
                jac[i][j] = wrap_angle(fp[i] - fm[i]) / (2.0 * h) + if i == j { 1.0 } else { 0.0 };
            }
        }
        Ok(jac)
    }

    /// Damped Newton iteration on `P(x) − x = 0`.
    fn newton(&self, seed: [f64; 2], opts: &SubharmonicOptions) -> Result<(OrbitPoint, f64, usize)> {
        let mut x = seed;
        let mut f = self.displacement(x)?;
        let mut res = norm(f);
        let mut iterations = 0;
        while res > opts.tol && iterations < opts.max_newton {
            iterations += 1;
            let jac = self.map_jacobian(x)?;
            let a = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dx = [
                -(a[1][1] * f[0] - a[0][1] * f[1]) / det,
                -(-a[1][0] * f[0] + a[0][0] * f[1]) / det,
            ];
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..6 {
                let trial = [wrap_angle(x[0] + lambda * dx[0]), x[1] + lambda * dx[1]];
                let ft = self.displacement(trial)?;
                if norm(ft) < res {
                    x = trial;
                    f = ft;
                    res = norm(ft);
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Ok((OrbitPoint::new(x[0], x[1]), res, iterations))
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn multipliers(jac: [[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = Complex64::new(0.25 * tr * tr - det, 0.0).sqrt();
    [0.5 * tr + disc, 0.5 * tr - disc]
}

/// Searches for the periodic orbit predicted by the zero `θ₀`.
///
/// Newton runs from `opts.seeds` points spread over one period of the
/// unperturbed orbit, starting at `x(−θ₀/ω)`; among the converged fixed
/// points the one nearest the predicted set is kept. When no seed converges
/// the best residual is returned with `converged = false`.
pub fn find_subharmonic<S: ForcedSystem + ?Sized>(
    sys: &S,
    eps: f64,
    r: &Resonance,
    theta0: f64,
    opts: &SubharmonicOptions,
) -> Result<FixedPointResult> {
    if !eps.is_finite() {
        return Err(domain("epsilon", eps, "finite"));
    }
    if (sys.omega() - r.omega()).abs() > 1e-12 * r.omega() {
        return Err(domain("omega", sys.omega(), "system and resonance frequencies must agree"));
    }
    if opts.seeds == 0 {
        return Err(domain("seeds", 0.0, ">= 1"));
    }
    let shooter = Shooter {
        sys,
        eps,
        m: r.m(),
        cfg: opts.integrator,
    };
    let predicted = predicted_points(r, theta0);
    let orbit = r.orbit();
    let base = -theta0 / r.omega();
    let seeds: Vec<[f64; 2]> = (0..opts.seeds)
        .map(|j| {
            let p = orbit.state(base + j as f64 * orbit.period() / opts.seeds as f64);
            [wrap_angle(p.x1), p.x2]
        })
        .collect();
    let runs: Vec<Result<(OrbitPoint, f64, usize)>> = if eps == 0.0 {
        // every orbit point is fixed and Newton is degenerate; confirm the
        // prediction with a tighter integration instead
        let tight = Shooter {
            cfg: IntegratorConfig {
                abs_tol: opts.integrator.abs_tol.min(ZERO_EPS_TOL),
                rel_tol: opts.integrator.rel_tol.min(ZERO_EPS_TOL),
                ..opts.integrator
            },
            ..shooter
        };
        let seed = seeds[0];
        vec![tight.displacement(seed).map(|f| (OrbitPoint::new(seed[0], seed[1]), norm(f), 0))]
    } else {
        seeds.par_iter().map(|s| shooter.newton(*s, opts)).collect()
    };
    let mut best: Option<(bool, f64, f64, OrbitPoint, usize)> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok((p, res, it)) => {
                let converged = res <= opts.tol;
                let d = distance_to_set(p, &predicted);
                // converged beats unconverged, then nearest, then smallest residual
                let key = (converged, d, res);
                let better = match &best {
                    None => true,
                    Some((c, bd, br, _, _)) => {
                        if key.0 != *c {
                            key.0
                        } else if key.0 {
                            d < *bd
                        } else {
                            res < *br
                        }
                    }
                };
                if better {
                    best = Some((converged, d, res, p, it));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (converged, distance, residual, point, iterations) = match best {
        Some(b) => b,
        None => {
            return Err(last_err.unwrap_or_else(|| MelnikovError::NonConvergence {
                what: "subharmonic search",
                detail: "no seed produced a result".into(),
            }))
        }
    };
    let floquet_multipliers = if converged {
        Some(multipliers(shooter.map_jacobian(point.as_array())?))
    } else {
        None
    };
    Ok(FixedPointResult {
        point,
        theta0,
        residual,
        distance_to_unperturbed: distance,
        converged,
        floquet_multipliers,
        newton_iterations: iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub result: FixedPointResult,
    /// `distance_to_unperturbed / ε` (0 when ε = 0).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Largest over smallest ratio among converged rows with ε ≠ 0.
    pub band: f64,
    /// All nonzero-ε rows converged and `band ≤ 2`.
    pub first_order: bool,
}

/// Runs [`find_subharmonic`] for each ε and checks that the distance to the
/// unperturbed orbit scales linearly.
pub fn epsilon_scaling<F, S>(make_system: F, r: &Resonance, theta0: f64, eps_list: &[f64], opts: &SubharmonicOptions) -> Result<ScalingReport>
where
    F: Fn() -> S,
    S: ForcedSystem,
{
    let sys = make_system();
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let result = find_subharmonic(&sys, eps, r, theta0, opts)?;
            let ratio = if eps == 0.0 {
                0.0
            } else {
                result.distance_to_unperturbed / eps.abs()
            };
            Ok(ScalingRow { eps, result, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let active: Vec<&ScalingRow> = rows.iter().filter(|r| r.eps != 0.0).collect();
    let all_converged = active.iter().all(|r| r.result.converged);
    let (lo, hi) = active
        .iter()
        .filter(|r| r.result.converged)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    let band = if lo > 0.0 && lo.is_finite() { hi / lo } else { f64::INFINITY };
    Ok(ScalingReport {
        first_order: all_converged && !active.is_empty() && band <= 2.0,
        band,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangleProbeConfig {
    /// Number of initial points on the upper separatrix.
    pub fan: usize,
    /// Separatrix times of the first and last initial point.
    pub fan_span: (f64, f64),
    pub horizon: f64,
    /// Time between renormalizations of the tangent vector.
    pub renormalize_every: f64,
    pub integrator: IntegratorConfig,
}

impl Default for TangleProbeConfig {
    fn default() -> Self {
        Self {
            fan: 16,
            fan_span: (-2.0, 2.0),
            horizon: 200.0,
            renormalize_every: 1.0,
            integrator: IntegratorConfig {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
                ..IntegratorConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangleStats {
    /// Finite-time exponent of each fan member, `ln|v(T)| / T`.
    pub exponents: Vec<f64>,
    pub mean_exponent: f64,
    pub max_exponent: f64,
    /// Largest `ln|v|` reached by each member before the horizon.
    pub peak_log_growth: Vec<f64>,
    /// `ln|v(T)|` of each member.
    pub final_log_growth: Vec<f64>,
}

/// Finite-time separation exponents of a fan of orbits started on the upper
/// separatrix at forcing phase 0. Tangent vectors follow the variational
/// equation of the forced system and start normal to the separatrix.
pub fn homoclinic_tangle_probe<S: ForcedSystem + ?Sized>(sys: &S, eps: f64, cfg: &TangleProbeConfig) -> Result<TangleStats> {
    if cfg.fan == 0 || !(cfg.horizon > 0.0) || !(cfg.renormalize_every > 0.0) {
        return Err(domain("tangle probe", cfg.horizon, "fan >= 1, horizon and interval > 0"));
    }
    let separatrix = OrbitFamily::homoclinic(Branch::Plus);
    let starts: Vec<f64> = (0..cfg.fan)
        .map(|j| {
            if cfg.fan == 1 {
                cfg.fan_span.0
            } else {
                cfg.fan_span.0 + (cfg.fan_span.1 - cfg.fan_span.0) * j as f64 / (cfg.fan - 1) as f64
            }
        })
        .collect();
    let runs = starts
        .par_iter()
        .map(|&s| {
            let p = separatrix.state(s);
            // normal to the separatrix, along ∇H
            let v = [p.x1.sin(), p.x2];
            let vn = norm(v);
            let mut state = [p.x1, p.x2, v[0] / vn, v[1] / vn];
            let rhs = |t: f64, y: &[f64; 4]| {
                let x = [y[0], y[1]];
                let f = sys.vector_field(t, x, eps);
                let j = sys.jacobian(t, x, eps);
                [
                    f[0],
                    f[1],
                    j[0][0] * y[2] + j[0][1] * y[3],
                    j[1][0] * y[2] + j[1][1] * y[3],
                ]
            };
            let (mut t, mut log_growth, mut peak) = (0.0, 0.0f64, 0.0f64);
            while t < cfg.horizon {
                let t_next = (t + cfg.renormalize_every).min(cfg.horizon);
                state = integrate(rhs, t, state, t_next, &cfg.integrator)?.state;
                let g = norm([state[2], state[3]]);
                log_growth += g.ln();
                peak = peak.max(log_growth);
                state[2] /= g;
                state[3] /= g;
                t = t_next;
            }
            Ok((log_growth, peak))
        })
        .collect::<Result<Vec<_>>>()?;
    let exponents: Vec<f64> = runs.iter().map(|(g, _)| g / cfg.horizon).collect();
    Ok(TangleStats {
        mean_exponent: exponents.iter().sum::<f64>() / exponents.len() as f64,
        max_exponent: exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        peak_log_growth: runs.iter().map(|r| r.1).collect(),
        final_log_growth: runs.iter().map(|r| r.0).collect(),
        exponents,
    })
}
