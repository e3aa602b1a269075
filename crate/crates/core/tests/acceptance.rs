//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use melnikov_core::certificate::{certify, CertifyOptions};
use melnikov_core::contour::{
    closed_lower_bound, contour_integral_closed, contour_kernels, laurent_probe, ContourSpec, LaurentFunction,
    RADIUS_FRACTIONS,
};
use melnikov_core::elliptic::{jacobi_complex, jacobi_real, nearest_pole, EllipticModulus};
use melnikov_core::melnikov::{
    chaos_condition, closed_form_homoclinic, closed_form_subharmonic, gcd, homoclinic_limit_check,
    homoclinic_quadrature, simple_zeros, solve_resonance, subharmonic_quadrature, theta_grid, HomoclinicPhase,
    J1Convention, Resonance,
};
use melnikov_core::pendulum::{Branch, FamilyTag, ForcedPendulum};
use melnikov_core::poincare::{epsilon_scaling, SubharmonicOptions};
use melnikov_core::MelnikovError;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut real_err: f64 = 0.0;
    for _ in 0..1000 {
        let k: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
        let t: f64 = rng.gen_range(-50.0..50.0);
        let e = EllipticModulus::new(k).unwrap();
        let j = jacobi_real(t, &e);
        real_err = real_err
            .max((j.sn * j.sn + j.cn * j.cn - 1.0).abs())
            .max((j.dn * j.dn + k * k * j.sn * j.sn - 1.0).abs());
    }
    let mut complex_err: f64 = 0.0;
    let mut count = 0;
    while count < 200 {
        let k: f64 = rng.gen_range(0.05..0.95);
        let e = EllipticModulus::new(k).unwrap();
        let t = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if (t - nearest_pole(t, &e)).norm() < 0.1 {
            continue;
        }
        count += 1;
        let j = jacobi_complex(t, &e).unwrap();
        let one = Complex64::new(1.0, 0.0);
        complex_err = complex_err
            .max((j.sn * j.sn + j.cn * j.cn - one).norm())
            .max((j.dn * j.dn + k * k * j.sn * j.sn - one).norm());
    }
    let legendre = (0..50)
        .map(|i| {
            let e = EllipticModulus::new((i as f64 + 0.5) / 50.0).unwrap();
            (e.legendre_relation() - PI / 2.0).abs()
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: real_err <= 1e-12 && complex_err <= 1e-10 && legendre <= 1e-12,
        detail: format!("real {real_err:.2e}, complex {complex_err:.2e}, Legendre {legendre:.2e}"),
    }
}

fn coprime_pairs(max: u32) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for m in 1..=max {
        for n in 1..=max {
            if gcd(m, n) == 1 {
                v.push((m, n));
            }
        }
    }
    v
}

const PERIODIC: [FamilyTag; 3] = [FamilyTag::Inner, FamilyTag::RotatingPlus, FamilyTag::RotatingMinus];

fn subharmonic_oracle() -> Outcome {
    let (beta, delta) = (1.0, 1.0);
    let grid = theta_grid(16);
    let mut cases = Vec::new();
    for omega in [0.8, 1.0, 1.5] {
        for family in PERIODIC {
            for (m, n) in coprime_pairs(7) {
                match solve_resonance(family, omega, m, n) {
                    Ok(r) => cases.push(r),
                    Err(MelnikovError::NoSolution(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
    // (gap with J₁ in n, gap with J₁ in m, parity residual)
    let rows: Vec<(f64, f64, f64)> = cases
        .par_iter()
        .map(|r| {
            let sys = ForcedPendulum::new(beta, delta, r.omega()).unwrap();
            let by_n = closed_form_subharmonic(r, beta, delta, J1Convention::OrbitPeriods);
            let by_m = closed_form_subharmonic(r, beta, delta, J1Convention::ForcingPeriods);
            let (mut gn, mut gm) = (0.0f64, 0.0f64);
            for &theta in &grid {
                let q = subharmonic_quadrature(&sys, r, theta).unwrap();
                gn = gn.max((q - by_n.evaluate(theta)).abs());
                gm = gm.max((q - by_m.evaluate(theta)).abs());
            }
            let mut parity = 0.0f64;
            if by_n.cos_coeff == 0.0 {
                let undamped = ForcedPendulum::new(beta, 0.0, r.omega()).unwrap();
                for &theta in &grid {
                    parity = parity.max(subharmonic_quadrature(&undamped, r, theta).unwrap().abs());
                }
            }
            (gn, gm, parity)
        })
        .collect();
    let gap_n = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let gap_m = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let parity = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let parity_cases = cases
        .iter()
        .filter(|r| closed_form_subharmonic(r, 1.0, 0.0, J1Convention::OrbitPeriods).cos_coeff == 0.0)
        .count();
    let verdict = match (gap_n <= 1e-8, gap_m <= 1e-8) {
        (true, false) => "J1 argument is n (orbit periods)",
        (false, true) => "J1 argument is m (forcing periods)",
        (true, true) => "J1 argument undecided (no m != n case)",
        (false, false) => "neither J1 argument matches",
    };
    Outcome {
        pass: gap_n <= 1e-8 && parity <= 1e-8,
        detail: format!(
            "{} resonances, sup gap {gap_n:.2e} (J1 with m: {gap_m:.2e}), {parity_cases} parity-zero cases max {parity:.2e}; verdict: {verdict}",
            cases.len()
        ),
    }
}

fn homoclinic_oracle() -> Outcome {
    let mut gap: f64 = 0.0;
    for (beta, delta) in [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        for omega in [0.5, 1.0, 2.0] {
            let sys = ForcedPendulum::new(beta, delta, omega).unwrap();
            for branch in [Branch::Plus, Branch::Minus] {
                let closed = closed_form_homoclinic(branch, beta, delta, omega, HomoclinicPhase::OmegaT);
                for theta in theta_grid(16) {
                    let q = homoclinic_quadrature(&sys, branch, theta, HomoclinicPhase::OmegaT).unwrap();
                    gap = gap.max((q - closed.evaluate(theta)).abs());
                }
            }
        }
    }
    Outcome {
        pass: gap <= 1e-8,
        detail: format!("sup gap {gap:.2e} over 9 parameter pairs, both branches"),
    }
}

fn chaos_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut agree, mut holds, mut total) = (0, 0, 0);
    while total < 100 {
        let beta: f64 = rng.gen_range(0.0..10.0);
        let delta: f64 = rng.gen_range(0.01..3.0);
        let omega: f64 = rng.gen_range(0.1..2.0);
        let verdict = chaos_condition(beta, delta, omega);
        if (verdict.ratio - 1.0).abs() < 1e-6 {
            continue;
        }
        total += 1;
        holds += verdict.holds as usize;
        let mut same = true;
        for branch in [Branch::Plus, Branch::Minus] {
            let curve = closed_form_homoclinic(branch, beta, delta, omega, HomoclinicPhase::OmegaT);
            let has_simple = simple_zeros(&curve).iter().any(|z| z.simple);
            same &= has_simple == verdict.holds;
        }
        agree += same as usize;
    }
    Outcome {
        pass: agree == total,
        detail: format!("{agree}/{total} agree ({holds} above threshold)"),
    }
}

fn contour_resonances() -> Vec<Resonance> {
    let mut rs = Vec::new();
    for (m, n) in [(2, 1), (3, 1), (3, 2), (5, 2), (4, 3)] {
        rs.push(solve_resonance(FamilyTag::Inner, 1.0, m, n).unwrap());
    }
    for (m, n) in [(1, 1), (2, 1), (1, 2), (3, 2), (3, 1)] {
        let plus = solve_resonance(FamilyTag::RotatingPlus, 1.0, m, n).unwrap();
        rs.push(plus.with_family(FamilyTag::RotatingMinus).unwrap());
        rs.push(plus);
    }
    rs
}

fn contour_equivalence() -> Outcome {
    let (mut closed_gap, mut radius_gap, mut delta_gap, mut damping) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let grid = theta_grid(16);
    for r in contour_resonances() {
        let kernels: Vec<_> = RADIUS_FRACTIONS
            .iter()
            .map(|&f| contour_kernels(&r, &ContourSpec::around_pole(&r, f, 0.0)).unwrap())
            .collect();
        for &theta in &grid {
            let closed = contour_integral_closed(&r, theta, 1.0).value;
            let scale = 1.0 + closed.norm();
            let values: Vec<Complex64> = kernels.iter().map(|k| k.value(theta, 1.0, 0.0)).collect();
            for v in &values {
                closed_gap = closed_gap.max((v - closed).norm() / scale);
                for w in &values {
                    radius_gap = radius_gap.max((v - w).norm() / scale);
                }
            }
            for k in &kernels {
                delta_gap = delta_gap.max((k.value(theta, 1.0, 1.0) - k.value(theta, 1.0, 0.0)).norm());
            }
        }
        if r.family() == FamilyTag::Inner {
            for k in &kernels {
                damping = damping.max(k.damping_kernel.norm());
            }
        }
    }
    let r = solve_resonance(FamilyTag::Inner, 1.0, 3, 1).unwrap();
    let mut laurent: f64 = 0.0;
    for f in [
        LaurentFunction::Cn,
        LaurentFunction::Dn,
        LaurentFunction::DnScaled,
        LaurentFunction::Cos,
        LaurentFunction::Sin,
    ] {
        laurent = laurent.max(laurent_probe(f, &r, &RADIUS_FRACTIONS).unwrap().max_error());
    }
    Outcome {
        pass: closed_gap <= 1e-8 && radius_gap <= 1e-8 && delta_gap <= 1e-9 && damping <= 1e-10 && laurent <= 1e-7,
        detail: format!(
            "closed {closed_gap:.2e}, radii {radius_gap:.2e}, delta {delta_gap:.2e}, cn^2 kernel {damping:.2e}, Laurent {laurent:.2e}"
        ),
    }
}

fn limit_check() -> Outcome {
    let grid = theta_grid(64);
    let ms = [3, 5, 7, 9, 11];
    let mut lines = Vec::new();
    let mut pass = true;
    for family in PERIODIC {
        let gaps = homoclinic_limit_check(family, 1.0, 1.0, 1.0, &ms, &grid).unwrap();
        let decreasing = gaps.windows(2).all(|w| w[1].gap < w[0].gap);
        pass &= decreasing && gaps.len() == ms.len();
        lines.push(format!(
            "{family} {}",
            gaps.iter().map(|g| format!("{:.2e}", g.gap)).collect::<Vec<_>>().join(" > ")
        ));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
    }
}

fn contour_nonvanishing() -> Outcome {
    let grid = theta_grid(64);
    let mut worst: f64 = f64::INFINITY;
    let mut pass = true;
    for beta in [0.25, 1.0] {
        for r in contour_resonances() {
            let k = contour_kernels(&r, &ContourSpec::around_pole(&r, 0.1, 0.0)).unwrap();
            let bound = closed_lower_bound(&r, beta);
            let min = grid.iter().map(|&t| k.value(t, beta, 0.3).norm()).fold(f64::INFINITY, f64::min);
            pass &= min > 0.0 && min >= bound * (1.0 - 1e-8);
            worst = worst.min(min / bound);
        }
    }
    Outcome {
        pass,
        detail: format!("min |I|/lower bound = {worst:.4} over 30 resonance cases"),
    }
}

fn poincare_verification() -> Outcome {
    let r = solve_resonance(FamilyTag::Inner, 1.0, 3, 1).unwrap();
    let eps = [1e-3, 5e-4, 2.5e-4];
    let opts = SubharmonicOptions::default();
    let good = epsilon_scaling(|| ForcedPendulum::new(1.0, 0.0, 1.0).unwrap(), &r, PI / 2.0, &eps, &opts).unwrap();
    let residual = good.rows.iter().map(|row| row.result.residual).fold(0.0, f64::max);
    // |−δJ₁| ≈ 16 exceeds |J₂| ≈ 5: no simple zero
    let control = epsilon_scaling(|| ForcedPendulum::new(1.0, 1.0, 1.0).unwrap(), &r, PI / 2.0, &eps, &opts).unwrap();
    let ratios = |rep: &melnikov_core::poincare::ScalingReport| {
        rep.rows.iter().map(|row| format!("{:.3}", row.ratio)).collect::<Vec<_>>().join(", ")
    };
    Outcome {
        pass: good.first_order && residual <= 1e-10 && !control.first_order,
        detail: format!(
            "distance/eps [{}] band {:.3}, residual {residual:.1e}; control band {:.1} (scaling {})",
            ratios(&good),
            good.band,
            control.band,
            if control.first_order { "holds" } else { "fails" }
        ),
    }
}

fn certificate_logic() -> Outcome {
    let opts = CertifyOptions::default();
    let expected = [((1.0, 1.0), (true, true, true)), ((0.0, 1.0), (true, false, false)), ((1.0, 0.0), (false, true, true))];
    let mut pass = true;
    let mut seen = Vec::new();
    for ((beta, delta), want) in expected {
        let c = certify(beta, delta, 1.0, &opts).unwrap();
        let got = (c.prop_4a.applies, c.prop_4b.applies, c.prop_4c.applies);
        pass &= got == want;
        let flag = |b: bool| if b { "A" } else { "I" };
        seen.push(format!("({beta},{delta}) -> {}{}{}", flag(got.0), flag(got.1), flag(got.2)));
    }
    Outcome {
        pass,
        detail: format!("{} (A = applies, I = inconclusive; order 4a 4b 4c)", seen.join(", ")),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("special-function identities", identities),
        ("subharmonic quadrature vs closed forms", subharmonic_oracle),
        ("homoclinic quadrature vs closed form", homoclinic_oracle),
        ("chaos threshold vs simple zeros", chaos_consistency),
        ("contour integrals vs residues", contour_equivalence),
        ("subharmonic to homoclinic limit", limit_check),
        ("contour integral bounded away from zero", contour_nonvanishing),
        ("stroboscopic-map periodic orbits", poincare_verification),
        ("certificate applicability", certificate_logic),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        failures += (!outcome.pass) as usize;
        println!(
            "criterion {}: {status} {name} ({:.2} s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    if failures == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
