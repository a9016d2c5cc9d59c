use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optomech_core::{MomentumMode, NoiseModel};

#[derive(Debug, Parser)]
#[command(
    name = "optomech",
    version,
    about = "Noise spectra and effective temperature of a cavity with a moving mirror and a BEC"
)]
pub struct Cli {
    /// JSON parameter file. Defaults to the built-in reference set.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Seed for stochastic runs.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = NoiseArg::Symmetrized)]
    pub noise: NoiseArg,

    #[arg(long, global = true, value_enum, default_value_t = MomentumArg::Paper)]
    pub momentum: MomentumArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    Symmetrized,
    PaperLiteral,
    HighTWhite,
}

impl From<NoiseArg> for NoiseModel {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Symmetrized => NoiseModel::Symmetrized,
            NoiseArg::PaperLiteral => NoiseModel::Literal,
            NoiseArg::HighTWhite => NoiseModel::HighTWhite,
        }
    }
}

/// `paper`: S_p = S_q. `exact`: S_p = (ω/ω_m)² S_q.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MomentumArg {
    Paper,
    Exact,
}

impl From<MomentumArg> for MomentumMode {
    fn from(m: MomentumArg) -> Self {
        match m {
            MomentumArg::Paper => MomentumMode::Static,
            MomentumArg::Exact => MomentumMode::Exact,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print derived couplings.
    Derive(DeriveArgs),
    /// Steady-state branches for a bare-detuning sweep, or one operating point.
    Steady(SteadyArgs),
    /// Displacement spectra on a frequency grid, optionally as a 2-D map.
    Spectrum(SpectrumArgs),
    /// Effective temperature along a sweep.
    Temperature(TemperatureArgs),
    /// Cross-check spectral, Lyapunov and time-domain variances.
    Validate(ValidateArgs),
    /// Print the drift and diffusion matrices.
    DumpMatrix(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZetaUnit {
    /// rad/s
    RadS,
    /// Hz (multiplied by 2π)
    Hz,
    /// Multiples of the single-photon mirror rate χ·x_zpf
    MirrorRate,
}

/// Parameter overrides shared by all subcommands.
#[derive(Debug, Clone, Args)]
pub struct Overrides {
    /// Atom-cavity rate ζ, in --zeta-unit.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,

    #[arg(long, value_enum, default_value_t = ZetaUnit::RadS)]
    pub zeta_unit: ZetaUnit,

    /// Bogoliubov frequency in units of ω_m.
    #[arg(long)]
    pub omega_tilde: Option<f64>,

    /// Set χ = k·ω_C/(2L). k = 2 is the default coupling, k = 0 removes the mirror.
    #[arg(long)]
    pub chi_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SteadyArgs {
    /// Bare detuning grid Δ₀, in units of κ (start:stop:n).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "delta")]
    pub delta0: Option<Grid>,

    /// Single total detuning Δ, in units of κ.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    OmegaDelta,
    OmegaZeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// One row per (ω, y) pair.
    Long,
    /// One row per ω, one column per y.
    Matrix,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// q, p or Q.
    #[arg(long, default_value = "q")]
    pub observable: String,

    /// Frequency grid in units of ω_m (start:stop:n).
    #[arg(long, allow_hyphen_values = true, default_value = "0.5:1.5:400")]
    pub omega: Grid,

    #[arg(long, value_enum)]
    pub map: Option<MapKind>,

    /// Detuning grid for omega-delta maps, in units of κ.
    #[arg(
        long = "delta",
        allow_hyphen_values = true,
        default_value = "0.02:2:100"
    )]
    pub delta_grid: Grid,

    /// ζ grid for omega-zeta maps, in --zeta-unit.
    #[arg(long, allow_hyphen_values = true, default_value = "0:100:41")]
    pub zeta_grid: Grid,

    /// Fixed values, e.g. `delta=kappa/2` (κ units).
    #[arg(long, allow_hyphen_values = true)]
    pub fix: Vec<Fix>,

    /// Divide by S(ω_m) at Δ = 0 (q and p only).
    #[arg(long)]
    pub normalize: bool,

    /// SI units instead of zero-point units.
    #[arg(long)]
    pub si: bool,

    #[arg(long, value_enum, default_value_t = Layout::Long)]
    pub layout: Layout,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Delta,
    Zeta,
    OmegaTilde,
}

#[derive(Debug, Args)]
pub struct TemperatureArgs {
    #[arg(long, value_enum, default_value_t = SweepArg::Delta)]
    pub sweep: SweepArg,

    /// Sweep grid: κ units for delta, --zeta-unit for zeta, ω_m units for omega-tilde.
    #[arg(long, allow_hyphen_values = true, default_value = "0.02:2:100")]
    pub range: Grid,

    /// Fixed detuning for zeta / omega-tilde sweeps, e.g. `delta=kappa/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub fix: Vec<Fix>,

    /// Relative tolerance of the spectral integrals.
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Reference,
    Desk,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Built-in set used when --config is absent.
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,

    /// Total detuning in units of κ.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
    pub delta: f64,

    /// Skip the time-domain integration.
    #[arg(long)]
    pub no_time_domain: bool,

    /// Time step in units of 1/κ.
    #[arg(long, default_value_t = 0.003)]
    pub dt: f64,

    /// Simulated time, s.
    #[arg(long, default_value_t = 0.03)]
    pub t_end: f64,

    #[arg(long, default_value_t = 20)]
    pub batches: usize,

    /// Relative tolerance between spectral and Lyapunov variances.
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,

    /// Time-domain tolerance in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub sigma: f64,

    /// Corrupt the Lyapunov diffusion input; the check must then fail.
    #[arg(long)]
    pub negative_control: bool,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BathArg {
    HighTWhite,
    QuantumExact,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Total detuning in units of κ.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
    pub delta: f64,

    #[arg(long, value_enum, default_value_t = BathArg::HighTWhite)]
    pub bath: BathArg,

    #[command(flatten)]
    pub overrides: Overrides,
}

/// Inclusive linear grid `start:stop:n`, or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        };
        match parts.as_slice() {
            [x] => {
                let v = num(x)?;
                Ok(Grid {
                    start: v,
                    stop: v,
                    n: 1,
                })
            }
            [a, b, n] => {
                let (start, stop) = (num(a)?, num(b)?);
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{n}` is not a point count"))?;
                if n < 2 || !(start < stop) {
                    return Err(format!("grid `{s}` needs start < stop and n >= 2"));
                }
                Ok(Grid { start, stop, n })
            }
            _ => Err(format!(
                "expected start:stop:n or a single value, got `{s}`"
            )),
        }
    }
}

/// `name=value` with the value in units of κ: `0.5`, `kappa/2`, `0.5*kappa`, `0.5kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fix {
    pub name: String,
    pub value: f64,
}

impl FromStr for Fix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, expr) = s
            .split_once('=')
            .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
        let name = name.trim().to_string();
        if name != "delta" {
            return Err(format!("only `delta` can be fixed, got `{name}`"));
        }
        Ok(Fix {
            name,
            value: parse_kappa_multiple(expr.trim())?,
        })
    }
}

fn parse_kappa_multiple(expr: &str) -> Result<f64, String> {
    let bad = || format!("cannot read `{expr}` as a multiple of kappa");
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let v = if let Some(den) = expr.strip_prefix("kappa/") {
        1.0 / num(den)?
    } else if expr == "kappa" {
        1.0
    } else if let Some(k) = expr
        .strip_suffix("*kappa")
        .or_else(|| expr.strip_suffix("kappa"))
    {
        num(k)?
    } else {
        num(expr)?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}
