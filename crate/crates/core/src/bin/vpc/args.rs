use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vpc::estimators::{BandwidthMethod, Boundary};
use vpc::rootogram::RootogramStyle;
use vpc::synthetic::DensityKind;
use vpc::uniformity::PlotStyle;

#[derive(Debug, Parser)]
#[command(name = "vpc", version, about = "Visual predictive checks with automatic PIT uniformity testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density plot of one sample, tested against its own PIT values.
    Density(DensityArgs),
    /// Uniformity test of PIT values, given directly or computed from draws.
    Pit(PitArgs),
    /// Screen a sample for point masses, discreteness and bounds.
    Detect(DetectArgs),
    /// Observed density over predictive draws.
    Overlay(OverlayArgs),
    /// Count-frequency check on a square-root scale.
    Rootogram(RootogramArgs),
    /// Calibration plots for binary and categorical predictions.
    Calibration(CalibrationArgs),
    /// Write the synthetic example densities as CSV.
    Demo(DemoArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Pit(_) => "pit",
            Command::Detect(_) => "detect",
            Command::Overlay(_) => "overlay",
            Command::Rootogram(_) => "rootogram",
            Command::Calibration(_) => "calibration",
            Command::Demo(_) => "demo",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, env = "PPC_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "PPC_ALPHA", default_value_t = 0.05, value_parser = parse_unit_open)]
    pub alpha: f64,
    /// SVG output; defaults to `<command>.svg`.
    #[arg(long, env = "PPC_OUT")]
    pub out: Option<PathBuf>,
    /// JSON report; defaults to `<command>.json`.
    #[arg(long, env = "PPC_REPORT")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Input {
    /// CSV, or JSON array of records when the extension is `.json`.
    #[arg(long, env = "PPC_INPUT")]
    pub input: PathBuf,
    #[arg(long, env = "PPC_COLUMN", default_value = "y")]
    pub column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Viz {
    Kde,
    Hist,
    Qdot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Ecdf,
    Diff,
}

impl From<Style> for PlotStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Ecdf => PlotStyle::Ecdf,
            Style::Diff => PlotStyle::EcdfDifference,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Estimator {
    #[arg(long, env = "PPC_VIZ", value_enum, default_value = "kde")]
    pub viz: Viz,
    /// `sj`, `silverman` or a positive number.
    #[arg(long, env = "PPC_BW", default_value = "sj", value_parser = parse_bw)]
    pub bw: BandwidthMethod,
    /// `auto`, `none` or `LO,HI` (either side may be empty).
    #[arg(long, env = "PPC_BOUNDS", default_value = "none", value_parser = parse_bounds, allow_hyphen_values = true)]
    pub bounds: Boundary,
    /// Histogram bin count; Freedman-Diaconis when absent.
    #[arg(long, env = "PPC_BINS")]
    pub bins: Option<usize>,
    /// Quantiles in a quantile dot plot.
    #[arg(long, env = "PPC_NQ", default_value_t = 100)]
    pub n_q: usize,
    #[arg(long, value_enum, default_value = "ecdf")]
    pub style: Style,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PitArgs {
    #[arg(long, env = "PPC_INPUT")]
    pub input: PathBuf,
    /// PIT column, or the observation column when `--draws` is given.
    /// Defaults to `pit` or `y` respectively.
    #[arg(long, env = "PPC_COLUMN")]
    pub column: Option<String>,
    /// Predictive draws: one row per draw, one column per observation.
    #[arg(long, env = "PPC_DRAWS")]
    pub draws: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ecdf")]
    pub style: Style,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: Input,
    /// Visualization you intend to use, for the recommendation.
    #[arg(long, env = "PPC_VIZ", value_enum, default_value = "kde")]
    pub viz: Viz,
    /// JSON report; defaults to `detect.json`.
    #[arg(long, env = "PPC_REPORT")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, env = "PPC_DRAWS")]
    pub draws: PathBuf,
    #[command(flatten)]
    pub estimator: Estimator,
    /// Draws shown; 50 for curves and dots, all for histogram intervals.
    #[arg(long)]
    pub n_draws: Option<usize>,
    /// Reuse the observed bandwidth for every draw.
    #[arg(long)]
    pub freeze_bw: bool,
    #[arg(long, default_value_t = 0.9, value_parser = parse_unit_open)]
    pub interval_mass: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RootogramArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, env = "PPC_DRAWS")]
    pub draws: PathBuf,
    /// standing, hanging, suspended or discrete.
    #[arg(long, default_value = "discrete", value_parser = parse_style)]
    pub style: RootogramStyle,
    /// Differences on raw rather than square-root frequencies.
    #[arg(long)]
    pub raw_scale: bool,
    /// Largest count shown separately; larger counts join the last cell.
    #[arg(long)]
    pub max_count: Option<u64>,
    #[arg(long, default_value_t = 0.9, value_parser = parse_unit_open)]
    pub interval_mass: f64,
    /// Also draw a bar check of count frequencies.
    #[arg(long)]
    pub bar: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Binary,
    Ovo,
    Ordinal,
}

#[derive(Debug, Args)]
pub struct CalibrationArgs {
    #[arg(long, env = "PPC_INPUT")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub mode: Mode,
    /// Predicted probability column (binary mode).
    #[arg(long, default_value = "pred")]
    pub pred: String,
    #[arg(long, default_value = "y")]
    pub outcome: String,
    /// Comma-separated category probability columns (ovo and ordinal).
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<String>,
    /// Covariate for a PAV residual plot (binary mode).
    #[arg(long)]
    pub covariate: Option<String>,
    /// Simulated outcome draws for the bands: one row per draw, 0/1 cells.
    #[arg(long, env = "PPC_DRAWS")]
    pub draws: Option<PathBuf>,
    /// Also draw a bar check of outcome frequencies.
    #[arg(long)]
    pub bar: bool,
    #[arg(long, default_value_t = 0.95, value_parser = parse_unit_open)]
    pub level: f64,
    #[arg(long, default_value_t = 2000)]
    pub n_sim: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// smooth_normal, stepped, bounded_exp or point_mass; all when absent.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<DensityKind>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Also write this many draws from the true density per kind.
    #[arg(long, default_value_t = 0)]
    pub n_draws: usize,
    #[arg(long, env = "PPC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = "PPC_OUT", default_value = ".")]
    pub out: PathBuf,
}

fn parse_bw(s: &str) -> Result<BandwidthMethod, String> {
    match s {
        "sj" => Ok(BandwidthMethod::SheatherJones),
        "silverman" => Ok(BandwidthMethod::Silverman),
        _ => match s.parse::<f64>() {
            Ok(h) if h.is_finite() && h > 0.0 => Ok(BandwidthMethod::Fixed(h)),
            _ => Err(format!("expected sj, silverman or a positive number, got '{s}'")),
        },
    }
}

fn parse_bounds(s: &str) -> Result<Boundary, String> {
    match s {
        "auto" => return Ok(Boundary::Auto),
        "none" => return Ok(Boundary::None),
        _ => {}
    }
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected auto, none or LO,HI, got '{s}'"))?;
    let side = |t: &str| -> Result<Option<f64>, String> {
        let t = t.trim();
        if t.is_empty() {
            return Ok(None);
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(format!("bad bound '{t}'")),
        }
    };
    let (lo, hi) = (side(lo)?, side(hi)?);
    if let (Some(a), Some(b)) = (lo, hi) {
        if a >= b {
            return Err(format!("lower bound {a} must be below upper bound {b}"));
        }
    }
    Ok(Boundary::Reflect { lo, hi })
}

fn parse_unit_open(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got '{s}'")),
    }
}

fn parse_style(s: &str) -> Result<RootogramStyle, String> {
    s.parse().map_err(|e: vpc::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<DensityKind, String> {
    s.parse().map_err(|e: vpc::Error| e.to_string())
}
