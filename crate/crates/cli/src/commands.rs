use std::f64::consts::PI;

use melnikov_core::certificate::{certify as run_certify, CertifyOptions};
use melnikov_core::contour::{contour_integral_closed, contour_kernels, ContourSpec, RADIUS_FRACTIONS};
use melnikov_core::melnikov::{
    closed_form_homoclinic, closed_form_subharmonic, enumerate_resonances, homoclinic_quadrature, simple_zeros,
    extended_float, solve_resonance, subharmonic_quadrature, theta_grid, Conventions, Resonance, ResonanceRecord,
};
use melnikov_core::pendulum::{FamilyTag, ForcedPendulum, OrbitPoint};
use melnikov_core::poincare::{find_subharmonic, SubharmonicOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{sci, sink, write_csv, write_json};
use crate::{CertifyArgs, CommonArgs, Failure, Format, ResonancesArgs, VerifyArgs};

type Outcome = Result<(), Failure>;

fn periodic_family(a: &CommonArgs) -> Result<FamilyTag, Failure> {
    let family: FamilyTag = a.family.map(Into::into).unwrap_or(FamilyTag::Inner);
    if family.is_homoclinic() {
        return Err(Failure::Usage(format!("{family} has no resonant periodic orbits")));
    }
    Ok(family)
}

fn resonance(a: &CommonArgs) -> Result<Resonance, Failure> {
    let family = periodic_family(a)?;
    let m = a.m.ok_or_else(|| Failure::Usage("--m is required for periodic families".into()))?;
    Ok(solve_resonance(family, a.omega, m, a.n)?)
}

fn emit_table(a: &CommonArgs, header: &[&str], rows: &[Vec<String>], json: &impl Serialize) -> Outcome {
    let mut out = sink(a.out.as_deref())?;
    match a.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&mut out, header, rows)?,
        Format::Json => write_json(&mut out, json)?,
    }
    Ok(())
}

fn conventions(a: &CommonArgs) -> Conventions {
    Conventions {
        j1_arg: a.j1(),
        hom_phase: a.phase(),
    }
}

pub fn resonances(args: &ResonancesArgs) -> Outcome {
    let a = &args.common;
    let family = periodic_family(a)?;
    let (m_max, n_max) = (a.m.unwrap_or(args.m_max), args.n_max.max(a.n));
    let window = (f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    let records: Vec<ResonanceRecord> = enumerate_resonances(family, a.omega, window, m_max, n_max)?
        .iter()
        .filter(|r| a.m.map_or(true, |m| r.m() == m) && (a.n == 1 || r.n() == a.n))
        .map(Resonance::record)
        .collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.family.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                sci(r.k),
                sci(r.k_prime),
                sci(r.omega),
                sci(r.period),
                sci(r.omega_check),
            ]
        })
        .collect();
    let header = ["family", "m", "n", "k", "k_prime", "omega", "period", "omega_check"];
    emit_table(a, &header, &rows, &records)
}

#[derive(Debug, Serialize)]
struct CurveRow {
    theta: f64,
    quadrature: f64,
    closed_form: f64,
    difference: f64,
}

#[derive(Debug, Serialize)]
struct CurveTable {
    family: FamilyTag,
    m: Option<u32>,
    n: Option<u32>,
    k: Option<f64>,
    omega: f64,
    beta: f64,
    delta: f64,
    conventions: Conventions,
    sup_difference: f64,
    rows: Vec<CurveRow>,
}

pub fn melnikov(a: &CommonArgs) -> Outcome {
    let family: FamilyTag = a.family.map(Into::into).unwrap_or(FamilyTag::Inner);
    let sys = ForcedPendulum::new(a.beta, a.delta, a.omega)?;
    let grid = theta_grid(a.theta_points as usize);
    let (r, closed) = if family.is_homoclinic() {
        (None, closed_form_homoclinic(family.branch(), a.beta, a.delta, a.omega, a.phase()))
    } else {
        let r = resonance(a)?;
        let c = closed_form_subharmonic(&r, a.beta, a.delta, a.j1());
        (Some(r), c)
    };
    let quad: Vec<f64> = grid
        .par_iter()
        .map(|&th| match &r {
            Some(r) => subharmonic_quadrature(&sys, r, th),
            None => homoclinic_quadrature(&sys, family.branch(), th, a.phase()),
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<CurveRow> = grid
        .iter()
        .zip(quad)
        .map(|(&theta, quadrature)| {
            let closed_form = closed.evaluate(theta);
            CurveRow {
                theta,
                quadrature,
                closed_form,
                difference: quadrature - closed_form,
            }
        })
        .collect();
    let sup = rows.iter().map(|r| r.difference.abs()).fold(0.0, f64::max);
    eprintln!("{family}: sup |quadrature - closed form| = {} over {} phases", sci(sup), rows.len());
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![sci(r.theta), sci(r.quadrature), sci(r.closed_form), sci(r.difference)])
        .collect();
    let table = CurveTable {
        family,
        m: r.as_ref().map(Resonance::m),
        n: r.as_ref().map(Resonance::n),
        k: r.as_ref().map(|r| r.modulus().k()),
        omega: a.omega,
        beta: a.beta,
        delta: a.delta,
        conventions: conventions(a),
        sup_difference: sup,
        rows,
    };
    emit_table(a, &["theta", "quadrature", "closed_form", "difference"], &csv_rows, &table)
}

#[derive(Debug, Serialize)]
struct ContourRow {
    theta: f64,
    radius: f64,
    numeric: Complex64,
    closed: Complex64,
    difference: f64,
}

#[derive(Debug, Serialize)]
struct ContourTable {
    family: FamilyTag,
    m: u32,
    n: u32,
    k: f64,
    omega: f64,
    beta: f64,
    delta: f64,
    center: Complex64,
    radii: Vec<f64>,
    sup_difference: f64,
    /// Largest spread of the numeric value across radii at one θ.
    radius_spread: f64,
    rows: Vec<ContourRow>,
}

pub fn contour(a: &CommonArgs) -> Outcome {
    let r = resonance(a)?;
    let specs: Vec<ContourSpec> = RADIUS_FRACTIONS.iter().map(|&f| ContourSpec::around_pole(&r, f, 0.0)).collect();
    let kernels = specs.par_iter().map(|s| contour_kernels(&r, s)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut spread = 0.0f64;
    for theta in theta_grid(a.theta_points as usize) {
        let closed = contour_integral_closed(&r, theta, a.beta).value;
        let values: Vec<Complex64> = kernels.iter().map(|k| k.value(theta, a.beta, a.delta)).collect();
        for (i, v) in values.iter().enumerate() {
            for w in &values[i + 1..] {
                spread = spread.max((v - w).norm());
            }
        }
        for (spec, numeric) in specs.iter().zip(values) {
            rows.push(ContourRow {
                theta,
                radius: spec.radius,
                numeric,
                closed,
                difference: (numeric - closed).norm(),
            });
        }
    }
    let sup = rows.iter().map(|r| r.difference).fold(0.0, f64::max);
    eprintln!(
        "{} {}:{}: sup |numeric - residue| = {}, radius spread = {}",
        r.family(),
        r.m(),
        r.n(),
        sci(sup),
        sci(spread)
    );
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                sci(r.theta),
                sci(r.radius),
                sci(r.numeric.re),
                sci(r.numeric.im),
                sci(r.closed.re),
                sci(r.closed.im),
                sci(r.difference),
            ]
        })
        .collect();
    let header = ["theta", "radius", "re_numeric", "im_numeric", "re_closed", "im_closed", "difference"];
    let table = ContourTable {
        family: r.family(),
        m: r.m(),
        n: r.n(),
        k: r.modulus().k(),
        omega: a.omega,
        beta: a.beta,
        delta: a.delta,
        center: specs[0].center,
        radii: specs.iter().map(|s| s.radius).collect(),
        sup_difference: sup,
        radius_spread: spread,
        rows,
    };
    emit_table(a, &header, &csv_rows, &table)
}

pub fn certify(args: &CertifyArgs) -> Outcome {
    let a = &args.common;
    if a.format == Some(Format::Csv) {
        return Err(Failure::Usage("certificates are written as JSON only".into()));
    }
    let mut opts = CertifyOptions {
        m_max: args.m_max,
        n_max: args.n_max,
        theta_points: a.theta_points as usize,
        conventions: conventions(a),
        ..CertifyOptions::default()
    };
    if let Some(f) = a.family {
        opts.families = vec![periodic_family(a).map(|_| f.into())?];
    }
    let cert = run_certify(a.beta, a.delta, a.omega, &opts)?;
    let mut out = sink(a.out.as_deref())?;
    write_json(&mut out, &cert)?;
    drop(out);
    if a.out.is_some() {
        println!("{}", cert.summary());
    } else {
        eprintln!("{}", cert.summary());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    eps: f64,
    converged: bool,
    point: Option<OrbitPoint>,
    residual: Option<f64>,
    distance_to_unperturbed: Option<f64>,
    /// `distance / ε`, 0 at ε = 0.
    ratio: Option<f64>,
    floquet_multipliers: Option<[Complex64; 2]>,
    newton_iterations: Option<usize>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    family: FamilyTag,
    m: u32,
    n: u32,
    k: f64,
    omega: f64,
    beta: f64,
    delta: f64,
    theta0: f64,
    theta0_source: &'static str,
    /// "simple-zero" when θ₀ is a simple zero of the Melnikov function,
    /// "violated" otherwise.
    hypothesis: &'static str,
    /// Largest over smallest ratio among converged rows with ε ≠ 0.
    #[serde(with = "extended_float")]
    band: f64,
    first_order: bool,
    rows: Vec<VerifyRow>,
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    let a = &args.common;
    if let Some(bad) = args.eps.iter().find(|e| !e.is_finite()) {
        return Err(Failure::Usage(format!("epsilon {bad} is not finite")));
    }
    let r = resonance(a)?;
    let sys = ForcedPendulum::new(a.beta, a.delta, a.omega)?;
    let curve = closed_form_subharmonic(&r, a.beta, a.delta, a.j1());
    let zeros: Vec<f64> = simple_zeros(&curve).into_iter().filter(|z| z.simple).map(|z| z.theta).collect();
    let (theta0, source) = match (args.theta0, zeros.first()) {
        (Some(t), _) => (t, "explicit"),
        (None, Some(&t)) => (t, "simple-zero"),
        // no zero to aim at: probe where |M| is smallest
        (None, None) => {
            let t = if curve.const_term * curve.cos_coeff > 0.0 { PI } else { 0.0 };
            (t, "closest-approach")
        }
    };
    let simple = zeros.iter().any(|z| {
        let d = (z - theta0).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d) <= 1e-9
    });
    let opts = SubharmonicOptions::default();
    let rows: Vec<VerifyRow> = args
        .eps
        .iter()
        .map(|&eps| match find_subharmonic(&sys, eps, &r, theta0, &opts) {
            Ok(fp) => VerifyRow {
                eps,
                converged: fp.converged,
                point: Some(fp.point),
                residual: Some(fp.residual),
                distance_to_unperturbed: Some(fp.distance_to_unperturbed),
                ratio: Some(if eps == 0.0 { 0.0 } else { fp.distance_to_unperturbed / eps.abs() }),
                floquet_multipliers: fp.floquet_multipliers,
                newton_iterations: Some(fp.newton_iterations),
                error: None,
            },
            Err(e) => VerifyRow {
                eps,
                converged: false,
                point: None,
                residual: None,
                distance_to_unperturbed: None,
                ratio: None,
                floquet_multipliers: None,
                newton_iterations: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let active: Vec<&VerifyRow> = rows.iter().filter(|r| r.eps != 0.0).collect();
    let (lo, hi) = active
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| r.ratio)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let band = if lo > 0.0 && lo.is_finite() { hi / lo } else { f64::INFINITY };
    let report = VerifyReport {
        family: r.family(),
        m: r.m(),
        n: r.n(),
        k: r.modulus().k(),
        omega: a.omega,
        beta: a.beta,
        delta: a.delta,
        theta0,
        theta0_source: source,
        hypothesis: if simple { "simple-zero" } else { "violated" },
        band,
        first_order: !active.is_empty() && active.iter().all(|r| r.converged) && band <= 2.0,
        rows,
    };
    eprintln!(
        "{} {}:{} theta0 = {} ({}), band {} -> {}",
        report.family,
        report.m,
        report.n,
        sci(theta0),
        report.hypothesis,
        sci(band),
        if report.first_order { "first-order displacement" } else { "scaling not confirmed" }
    );
    let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
    let csv_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                sci(r.eps),
                r.converged.to_string(),
                opt(r.point.map(|p| p.x1)),
                opt(r.point.map(|p| p.x2)),
                opt(r.residual),
                opt(r.distance_to_unperturbed),
                opt(r.ratio),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let header = ["eps", "converged", "x1", "x2", "residual", "distance", "ratio", "error"];
    let json_default = CommonArgs {
        format: Some(a.format.unwrap_or(Format::Json)),
        ..a.clone()
    };
    emit_table(&json_default, &header, &csv_rows, &report)
}
