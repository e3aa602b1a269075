//! Dormand–Prince 5(4) integrator with adaptive step size.

use serde::{Deserialize, Serialize};

use crate::error::{domain, MelnikovError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Step count after which integration is abandoned.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 0.5,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(domain("tolerance", self.abs_tol.min(self.rel_tol), "> 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(domain("max_step", self.max_step, "> 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution<const N: usize> {
    pub state: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`, so the scheme is FSAL).
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `ẋ = f(t, x)` from `t0` to `t1` (either direction).
pub fn integrate<const N: usize, F>(f: F, t0: f64, x0: [f64; N], t1: f64, cfg: &IntegratorConfig) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) || !t0.is_finite() || !t1.is_finite() {
        return Err(MelnikovError::IntegrationFailure {
            t: t0,
            reason: "non-finite initial data".into(),
        });
    }
    let mut sol = Solution {
        state: x0,
        accepted: 0,
        rejected: 0,
    };
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(sol);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut x = x0;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &x);
    let mut h = initial_step(&f, t, &x, &k[0], dir, cfg).min(span.abs());
    let mut err_prev: f64 = 1e-4;
    let h_min = 16.0 * f64::EPSILON * t0.abs().max(t1.abs()).max(1.0);
    while (t1 - t) * dir > 0.0 {
        if sol.accepted + sol.rejected >= cfg.max_steps {
            return Err(MelnikovError::IntegrationFailure {
                t,
                reason: format!("step budget of {} exhausted", cfg.max_steps),
            });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        for s in 1..7 {
            let mut y = x;
            for (j, a) in A[s][..s].iter().enumerate() {
                if *a != 0.0 {
                    for i in 0..N {
                        y[i] += hs * a * k[j][i];
                    }
                }
            }
            k[s] = f(t + C[s] * hs, &y);
        }
        let mut x_new = x;
        let mut err_sq = 0.0;
        for i in 0..N {
            let mut inc = 0.0;
            let mut est = 0.0;
            for s in 0..7 {
                inc += B[s] * k[s][i];
                est += E[s] * k[s][i];
            }
            x_new[i] = x[i] + hs * inc;
            let scale = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(x_new[i].abs());
            err_sq += (hs * est / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(MelnikovError::IntegrationFailure {
                t,
                reason: "non-finite state".into(),
            });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            x = x_new;
            k[0] = k[6];
            sol.accepted += 1;
            // PI step-size control
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0)
            };
            err_prev = err.max(1e-4);
            h = (h * factor).min(cfg.max_step);
        } else {
            sol.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < h_min {
            return Err(MelnikovError::IntegrationFailure {
                t,
                reason: format!("step size collapsed to {h:e}"),
            });
        }
    }
    sol.state = x;
    Ok(sol)
}

fn initial_step<const N: usize, F>(f: &F, t: f64, x: &[f64; N], dx: &[f64; N], dir: f64, cfg: &IntegratorConfig) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let norm = |v: &[f64; N]| {
        let s: f64 = v
            .iter()
            .zip(x)
            .map(|(a, b)| (a / (cfg.abs_tol + cfg.rel_tol * b.abs())).powi(2))
            .sum();
        (s / N as f64).sqrt()
    };
    let (d0, d1) = (norm(x), norm(dx));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y = *x;
    for i in 0..N {
        y[i] += dir * h0 * dx[i];
    }
    let f1 = f(t + dir * h0, &y);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - dx[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::EllipticModulus;
    use crate::pendulum::{ForcedPendulum, ForcedSystem, OrbitFamily};

    #[test]
    fn harmonic_oscillator_returns_after_a_period() {
        let cfg = IntegratorConfig::default();
        let s = integrate(|_, x: &[f64; 2]| [x[1], -x[0]], 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, &cfg).unwrap();
        assert!((s.state[0] - 1.0).abs() < 1e-10 && s.state[1].abs() < 1e-10);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let cfg = IntegratorConfig::default();
        let f = |t: f64, x: &[f64; 1]| [x[0] * t.cos()];
        let fwd = integrate(f, 0.0, [1.0], 3.0, &cfg).unwrap();
        assert!((fwd.state[0] - 3f64.sin().exp()).abs() < 1e-11);
        let back = integrate(f, 3.0, fwd.state, 0.0, &cfg).unwrap();
        assert!((back.state[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn pendulum_energy_drift_over_a_hundred_periods() {
        let sys = ForcedPendulum::new(0.0, 0.0, 1.0).unwrap();
        let orbit = OrbitFamily::inner(EllipticModulus::new(0.8).unwrap());
        let x0 = orbit.state(0.0).as_array();
        let end = integrate(|t, x| sys.vector_field(t, *x, 0.0), 0.0, x0, 100.0 * orbit.period(), &IntegratorConfig::default()).unwrap();
        let drift = (sys.hamiltonian(end.state) - sys.hamiltonian(x0)).abs();
        assert!(drift <= 1e-9, "drift {drift:e}");
    }

    #[test]
    fn zero_span_and_bad_config() {
        let cfg = IntegratorConfig::default();
        let s = integrate(|_, x: &[f64; 1]| [x[0]], 1.0, [2.0], 1.0, &cfg).unwrap();
        assert_eq!(s.state, [2.0]);
        let bad = IntegratorConfig { abs_tol: 0.0, ..cfg };
        assert!(integrate(|_, x: &[f64; 1]| [x[0]], 0.0, [1.0], 1.0, &bad).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let cfg = IntegratorConfig::default();
        let err = integrate(|_, x: &[f64; 1]| [x[0] * x[0]], 0.0, [1.0], 2.0, &cfg).unwrap_err();
        assert!(matches!(err, MelnikovError::IntegrationFailure { .. }));
    }
}
