//! Nonintegrability certificates: which of the forced-pendulum results apply
//! at given `(β, δ, ω)`, with the numbers that support each verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{closed_lower_bound, contour_integral_closed, contour_kernels, ContourSpec};
use crate::error::{domain, Result};
use crate::melnikov::{
    chaos_condition, closed_form_homoclinic, closed_form_subharmonic, enumerate_resonances, homoclinic_quadrature,
    quadrature_curve, theta_grid, ChaosVerdict, Conventions, MelnikovCurve, Resonance,
};
use crate::pendulum::{Branch, FamilyTag, ForcedPendulum};

pub const SCHEMA: &str = "melnikov-cert/1";

/// Magnitude below which a Melnikov coefficient counts as zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Applies,
    Inconclusive,
}

impl Status {
    fn from_bool(applies: bool) -> Self {
        if applies {
            Status::Applies
        } else {
            Status::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub families: Vec<FamilyTag>,
    pub m_max: u32,
    pub n_max: u32,
    pub k_window: (f64, f64),
    pub theta_points: usize,
    /// Contour radius as a fraction of the single-pole bound.
    pub radius_fraction: f64,
    pub conventions: Conventions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            families: vec![FamilyTag::Inner, FamilyTag::RotatingPlus, FamilyTag::RotatingMinus],
            m_max: 5,
            n_max: 2,
            k_window: (1e-3, 1.0 - 1e-9),
            theta_points: 64,
            radius_fraction: 0.1,
            conventions: Conventions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub beta: f64,
    pub delta: f64,
    pub omega: f64,
    pub epsilon_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSample {
    pub families: Vec<FamilyTag>,
    pub m_max: u32,
    pub n_max: u32,
    pub k_window: (f64, f64),
    pub theta_points: usize,
    pub resonances: usize,
}

/// A subharmonic Melnikov curve computed both ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveWitness {
    pub family: FamilyTag,
    pub m: u32,
    pub n: u32,
    pub k: f64,
    pub quadrature_const: f64,
    pub quadrature_cos: f64,
    pub closed_const: f64,
    pub closed_cos: f64,
    /// Largest coefficient difference between quadrature and closed form.
    pub closed_form_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicWitness {
    pub branch: Branch,
    pub quadrature_const: f64,
    pub quadrature_cos: f64,
    pub closed_const: f64,
    pub closed_cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourWitness {
    pub family: FamilyTag,
    pub m: u32,
    pub n: u32,
    pub k: f64,
    /// `min_θ |Î(θ)|` from the numeric contour integral.
    pub min_abs_numeric: f64,
    pub min_abs_closed: f64,
    pub lower_bound: f64,
    /// Largest relative gap between numeric and closed values on the grid.
    pub closed_form_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop4a {
    pub applies: bool,
    pub status: Status,
    pub delta_positive: bool,
    pub witness: Vec<CurveWitness>,
    pub homoclinic_nonzero: bool,
    pub homoclinic: Vec<HomoclinicWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop4b {
    pub applies: bool,
    pub status: Status,
    pub beta_positive: bool,
    pub witness: Vec<CurveWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop4c {
    pub applies: bool,
    pub status: Status,
    pub beta_positive: bool,
    pub witness: Vec<ContourWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    pub parameters: Parameters,
    pub conventions: Conventions,
    pub sample: ResonanceSample,
    pub prop_4a: Prop4a,
    pub prop_4b: Prop4b,
    pub prop_4c: Prop4c,
    pub chaos: ChaosVerdict,
}

fn curve_witness(r: &Resonance, sys: &ForcedPendulum, opts: &CertifyOptions) -> Result<(CurveWitness, MelnikovCurve)> {
    let q = quadrature_curve(sys, r)?;
    let c = closed_form_subharmonic(r, sys.beta, sys.delta, opts.conventions.j1_arg);
    Ok((
        CurveWitness {
            family: r.family(),
            m: r.m(),
            n: r.n(),
            k: r.modulus().k(),
            quadrature_const: q.const_term,
            quadrature_cos: q.cos_coeff,
            closed_const: c.const_term,
            closed_cos: c.cos_coeff,
            closed_form_gap: (q.const_term - c.const_term).abs().max((q.cos_coeff - c.cos_coeff).abs()),
        },
        q,
    ))
}

fn contour_witness(r: &Resonance, beta: f64, opts: &CertifyOptions) -> Result<ContourWitness> {
    let kernels = contour_kernels(r, &ContourSpec::around_pole(r, opts.radius_fraction, 0.0))?;
    let (mut min_numeric, mut min_closed, mut gap) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for theta in theta_grid(opts.theta_points) {
        // δ drops out of the contour value
        let numeric = kernels.value(theta, beta, 0.0);
        let closed = contour_integral_closed(r, theta, beta).value;
        min_numeric = min_numeric.min(numeric.norm());
        min_closed = min_closed.min(closed.norm());
        gap = gap.max((numeric - closed).norm() / (1.0 + closed.norm()));
    }
    Ok(ContourWitness {
        family: r.family(),
        m: r.m(),
        n: r.n(),
        k: r.modulus().k(),
        min_abs_numeric: min_numeric,
        min_abs_closed: min_closed,
        lower_bound: closed_lower_bound(r, beta),
        closed_form_gap: gap,
    })
}

/// Builds the certificate for `(β, δ, ω)`.
///
/// 4a applies when `δ > 0` and some sampled Melnikov function is verified
/// nonzero by quadrature; 4b when `β > 0` and some sampled function is
/// nonconstant; 4c when `β > 0` and every sampled contour integral stays
/// away from zero on the θ grid. Otherwise the status is inconclusive.
pub fn certify(beta: f64, delta: f64, omega: f64, opts: &CertifyOptions) -> Result<Certificate> {
    let sys = ForcedPendulum::new(beta, delta, omega)?;
    if opts.theta_points == 0 {
        return Err(domain("theta_points", 0.0, ">= 1"));
    }
    if !(opts.radius_fraction > 0.0 && opts.radius_fraction < 1.0) {
        return Err(domain("radius_fraction", opts.radius_fraction, "in (0, 1)"));
    }
    let mut resonances = Vec::new();
    for &family in &opts.families {
        if family.is_homoclinic() {
            return Err(domain("family", f64::NAN, "inner or rotating"));
        }
        resonances.extend(enumerate_resonances(family, omega, opts.k_window, opts.m_max, opts.n_max)?);
    }

    let curves = resonances
        .par_iter()
        .map(|r| curve_witness(r, &sys, opts))
        .collect::<Result<Vec<_>>>()?;
    let nonzero: Vec<CurveWitness> = curves
        .iter()
        .filter(|(_, q)| !q.is_identically_zero(ZERO_TOL))
        .map(|(w, _)| w.clone())
        .collect();
    let nonconstant: Vec<CurveWitness> = curves
        .iter()
        .filter(|(_, q)| !q.is_constant(ZERO_TOL))
        .map(|(w, _)| w.clone())
        .collect();

    let homoclinic = [Branch::Plus, Branch::Minus]
        .into_iter()
        .map(|branch| {
            let phase = opts.conventions.hom_phase;
            let a = homoclinic_quadrature(&sys, branch, 0.0, phase)?;
            let b = homoclinic_quadrature(&sys, branch, std::f64::consts::PI, phase)?;
            let c = closed_form_homoclinic(branch, beta, delta, omega, phase);
            Ok(HomoclinicWitness {
                branch,
                quadrature_const: 0.5 * (a + b),
                quadrature_cos: 0.5 * (a - b),
                closed_const: c.const_term,
                closed_cos: c.cos_coeff,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let homoclinic_nonzero = homoclinic
        .iter()
        .any(|h| h.quadrature_const.abs().max(h.quadrature_cos.abs()) > ZERO_TOL);

    let contours = if beta > 0.0 {
        resonances
            .par_iter()
            .map(|r| contour_witness(r, beta, opts))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let delta_positive = delta > 0.0;
    let beta_positive = beta > 0.0;
    let applies_4a = delta_positive && !nonzero.is_empty();
    let applies_4b = beta_positive && !nonconstant.is_empty();
    let applies_4c = beta_positive && !contours.is_empty() && contours.iter().all(|c| c.min_abs_numeric > ZERO_TOL);

    Ok(Certificate {
        schema: SCHEMA.to_string(),
        parameters: Parameters {
            beta,
            delta,
            omega,
            epsilon_note: "first order in epsilon near epsilon = 0".to_string(),
        },
        conventions: opts.conventions,
        sample: ResonanceSample {
            families: opts.families.clone(),
            m_max: opts.m_max,
            n_max: opts.n_max,
            k_window: opts.k_window,
            theta_points: opts.theta_points,
            resonances: resonances.len(),
        },
        prop_4a: Prop4a {
            applies: applies_4a,
            status: Status::from_bool(applies_4a),
            delta_positive,
            witness: nonzero,
            homoclinic_nonzero,
            homoclinic,
        },
        prop_4b: Prop4b {
            applies: applies_4b,
            status: Status::from_bool(applies_4b),
            beta_positive,
            witness: nonconstant,
        },
        prop_4c: Prop4c {
            applies: applies_4c,
            status: Status::from_bool(applies_4c),
            beta_positive,
            witness: contours,
        },
        chaos: chaos_condition(beta, delta, omega),
    })
}

impl Certificate {
    /// Short plain-text account of the verdicts.
    pub fn summary(&self) -> String {
        let p = &self.parameters;
        let word = |s: Status| match s {
            Status::Applies => "applies",
            Status::Inconclusive => "inconclusive",
        };
        format!(
            "beta = {}, delta = {}, omega = {} ({} resonances sampled)\n\
             4a (no analytic first integral, needs delta > 0): {} [{} nonzero curves, homoclinic nonzero: {}]\n\
             4b (real-analytic nonintegrability, needs beta > 0): {} [{} nonconstant curves]\n\
             4c (complex-meromorphic nonintegrability, needs beta > 0): {} [{} contour witnesses]\n\
             chaos condition: {} (ratio {:.6e})",
            p.beta,
            p.delta,
            p.omega,
            self.sample.resonances,
            word(self.prop_4a.status),
            self.prop_4a.witness.len(),
            self.prop_4a.homoclinic_nonzero,
            word(self.prop_4b.status),
            self.prop_4b.witness.len(),
            word(self.prop_4c.status),
            self.prop_4c.witness.len(),
            self.chaos.holds,
            self.chaos.ratio,
        )
    }
}
