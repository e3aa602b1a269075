use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use melnikov_core::melnikov::{HomoclinicPhase, J1Convention};
use melnikov_core::pendulum::FamilyTag;
use melnikov_core::MelnikovError;

mod commands;
mod output;

/// Melnikov-function computations for the periodically forced damped pendulum.
#[derive(Debug, Parser)]
#[command(name = "melnikov-lab", version)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "MELNIKOV_LAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List resonant periodic orbits, one row per (m, n).
    Resonances(ResonancesArgs),
    /// Tabulate the Melnikov function by quadrature and in closed form.
    Melnikov(CommonArgs),
    /// Circle integrals around the orbit's complex pole against their residue values.
    Contour(CommonArgs),
    /// Nonintegrability certificate as a JSON document.
    Certify(CertifyArgs),
    /// Locate the perturbed periodic orbits and check their O(ε) displacement.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Inner,
    RotatingPlus,
    RotatingMinus,
    HomoclinicPlus,
    HomoclinicMinus,
}

impl From<Family> for FamilyTag {
    fn from(f: Family) -> Self {
        match f {
            Family::Inner => FamilyTag::Inner,
            Family::RotatingPlus => FamilyTag::RotatingPlus,
            Family::RotatingMinus => FamilyTag::RotatingMinus,
            Family::HomoclinicPlus => FamilyTag::HomoclinicPlus,
            Family::HomoclinicMinus => FamilyTag::HomoclinicMinus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum J1Arg {
    N,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HomPhase {
    OmegaT,
    T,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a positive finite number")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a non-negative finite number")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Orbit family (default depends on the command).
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Forcing frequency ω.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub omega: f64,
    /// Forcing amplitude β.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    pub beta: f64,
    /// Damping δ.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    pub delta: f64,
    /// Forcing periods per orbit cycle.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub m: Option<u32>,
    /// Orbit periods per cycle.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Points of the uniform θ grid on [0, 2π).
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub theta_points: u32,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Multiplier in the damping coefficient: orbit periods n or forcing periods m.
    #[arg(long, value_enum, default_value = "n")]
    pub j1_arg: J1Arg,
    /// Forcing phase along the separatrix: ωt + θ or t + θ.
    #[arg(long, value_enum, default_value = "omega-t")]
    pub hom_phase: HomPhase,
}

impl CommonArgs {
    pub fn j1(&self) -> J1Convention {
        match self.j1_arg {
            J1Arg::N => J1Convention::OrbitPeriods,
            J1Arg::M => J1Convention::ForcingPeriods,
        }
    }

    pub fn phase(&self) -> HomoclinicPhase {
        match self.hom_phase {
            HomPhase::OmegaT => HomoclinicPhase::OmegaT,
            HomPhase::T => HomoclinicPhase::UnitT,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ResonancesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 9)]
    pub m_max: u32,
    #[arg(long, default_value_t = 1)]
    pub n_max: u32,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 5)]
    pub m_max: u32,
    #[arg(long, default_value_t = 2)]
    pub n_max: u32,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Perturbation sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 5e-4, 2.5e-4])]
    pub eps: Vec<f64>,
    /// Phase of the predicted orbit (default: first simple zero of the Melnikov function).
    #[arg(long)]
    pub theta0: Option<f64>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(MelnikovError),
    Other(anyhow::Error),
}

impl From<MelnikovError> for Failure {
    fn from(e: MelnikovError) -> Self {
        match e {
            MelnikovError::Domain { .. } => Failure::Usage(e.to_string()),
            e => Failure::Numerical(e),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: thread count must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Resonances(a) => commands::resonances(a),
        Command::Melnikov(a) => commands::melnikov(a),
        Command::Contour(a) => commands::contour(a),
        Command::Certify(a) => commands::certify(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
