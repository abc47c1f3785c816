use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use specpol::analysis::SpaceChoice;
use specpol::models::JumpPoint;

#[derive(Debug, Parser)]
#[command(name = "specpol", version, about = "Galerkin and second-order relative spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory for data files and the run manifest.
    #[arg(long, global = true, default_value = "specpol-out")]
    pub out: PathBuf,
    /// Check the command's postconditions; exit 4 if any fails.
    #[arg(long, global = true)]
    pub assert: bool,
    /// Print the manifest that would be written and stop.
    #[arg(long, global = true)]
    pub seedless: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First-order (Galerkin) spectrum.
    Spec1(SpectrumArgs),
    /// Second-order relative spectrum.
    Spec2(SpectrumArgs),
    /// Confirmed/suspect labels for the first-order spectrum.
    Classify(ClassifyArgs),
    /// Gap eigenvalue tables and eigenvalue counts for H.
    Tables,
    /// Subspace on which a chosen gap point is an exact Galerkin eigenvalue.
    Pollute(PolluteArgs),
    /// Basis perturbation pushing the Galerkin spectrum of H above a level.
    Push(PushArgs),
    /// Log-log convergence slopes for H.
    Converge(ConvergeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// A, B, H or const:<c>.
    #[arg(long)]
    pub model: ModelArg,
    /// Jump location: radians, or q/p for y = -πq/p.
    #[arg(long, default_value = "0/1", allow_hyphen_values = true)]
    pub y: YArg,
    /// Finite-element pair for H: LxL, MxL, MxM or L<p>xL<p>.
    #[arg(long)]
    pub space: Option<SpaceChoice>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Dimensions (Fourier) or mesh sizes (H); a list runs as a sweep.
    #[arg(long = "N", value_delimiter = ',', required_unless_present = "window")]
    pub n: Vec<usize>,
    /// Explicit Fourier index window lo:hi.
    #[arg(long, conflicts_with = "n", allow_hyphen_values = true)]
    pub window: Option<WindowArg>,
    /// Residual tolerance used by --assert and to mark passing points.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = specpol::analysis::DEFAULT_DELTA)]
    pub delta_re: f64,
    #[arg(long, default_value_t = specpol::analysis::DEFAULT_DELTA)]
    pub delta_im: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PolluteArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "0/1", allow_hyphen_values = true)]
    pub y: YArg,
}

#[derive(Debug, Clone, Args)]
pub struct PushArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long = "R")]
    pub r: f64,
    /// Number of low Fourier modes spanning the starting space.
    #[arg(long, default_value_t = 5)]
    pub modes: usize,
    /// Largest Fourier frequency the construction may use.
    #[arg(long, default_value_t = 1_000_000)]
    pub cutoff: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub space: SpaceChoice,
    #[arg(long = "N", value_delimiter = ',', default_value = "16,32,64,128")]
    pub n: Vec<usize>,
    #[arg(long = "k", value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<u64>,
    /// Skip second-order Im-part slopes even where the space allows them.
    #[arg(long)]
    pub first_only: bool,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelArg {
    A,
    B,
    H,
    Const(f64),
}

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" => Ok(ModelArg::A),
            "B" => Ok(ModelArg::B),
            "H" => Ok(ModelArg::H),
            _ => match s.strip_prefix("const:") {
                Some(c) => c
                    .parse::<f64>()
                    .ok()
                    .filter(|c| c.is_finite())
                    .map(ModelArg::Const)
                    .ok_or_else(|| format!("bad constant in {s:?}")),
                None => Err(format!("unknown model {s:?}; expected A, B, H or const:<c>")),
            },
        }
    }
}

impl fmt::Display for ModelArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelArg::A => write!(f, "A"),
            ModelArg::B => write!(f, "B"),
            ModelArg::H => write!(f, "H"),
            ModelArg::Const(c) => write!(f, "const:{c}"),
        }
    }
}

/// `q/p` is kept exact; anything else is read as radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YArg(pub JumpPoint);

impl FromStr for YArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((q, p)) = s.split_once('/') {
            let q = q.trim().parse::<u64>().map_err(|e| format!("q in {s:?}: {e}"))?;
            let p = p.trim().parse::<u64>().map_err(|e| format!("p in {s:?}: {e}"))?;
            return JumpPoint::rational(q, p).map(YArg).map_err(|e| e.to_string());
        }
        let y = s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?;
        if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&y) {
            return Err(format!("y = {y} outside [-π, π)"));
        }
        Ok(YArg(JumpPoint::Radians(y)))
    }
}

impl fmt::Display for YArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            JumpPoint::Rational { q, p } => write!(f, "{q}/{p}"),
            JumpPoint::Radians(y) => write!(f, "{y}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowArg {
    pub lo: i64,
    pub hi: i64,
}

impl FromStr for WindowArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo = lo.trim().parse().map_err(|e| format!("lo in {s:?}: {e}"))?;
        let hi = hi.trim().parse().map_err(|e| format!("hi in {s:?}: {e}"))?;
        Ok(WindowArg { lo, hi })
    }
}
