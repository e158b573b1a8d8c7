use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// `lo:hi:n`, log-spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, collapse_core::Error> {
        collapse_core::bounds::log_grid(self.lo, self.hi, self.n)
    }
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected lo:hi:n, got `{s}`"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo `{lo}`: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi `{hi}`: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("n `{n}`: {e}"))?;
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || n == 0 || (n == 1 && hi != lo) {
        return Err(format!("grid needs 0 < lo <= hi and n >= 2, got `{s}`"));
    }
    Ok(GridSpec { lo, hi, n })
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive and finite"))
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be non-negative and finite"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "collapse-bounds",
    version,
    about = "Exclusion bounds, spectra and thermalisation for dissipative collapse models",
    after_help = "Exit codes: 0 success (verdict: allowed), 2 usage error, 3 numeric failure, 10 verdict: excluded, 1 other failure."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output directory.
    #[arg(long, global = true, env = "COLLAPSE_BOUNDS_OUT", default_value = "collapse-out")]
    pub out: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Experiment config (TOML); the built-in Pontin, Vinante and Dania set otherwise.
    #[arg(long, global = true)]
    pub experiments: Option<PathBuf>,
    /// Density for experiments that give neither radius nor density, kg/m³.
    #[arg(long, global = true, value_parser = parse_positive)]
    pub density: Option<f64>,
    /// Reference nucleon mass, kg.
    #[arg(long, global = true, value_parser = parse_positive)]
    pub m0: Option<f64>,
    /// Seed for the simulator.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exclusion curves per experiment, their envelope and the figure.
    Bounds(BoundsArgs),
    /// LF against CD asymptotic temperatures and the T = T~ contour.
    Compare(CompareArgs),
    /// Analytic position noise spectrum and its linewidth.
    Spectrum(SpectrumArgs),
    /// Stochastic simulation checked against the analytic linewidth.
    Simulate(SimulateArgs),
    /// Is a parameter point excluded? Prints JSON; exit 10 when excluded.
    Verdict(VerdictArgs),
    /// Repeats the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::Compare(_) => "compare",
            Command::Spectrum(_) => "spectrum",
            Command::Simulate(_) => "simulate",
            Command::Verdict(_) => "verdict",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    Ddp,
    Dcsl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Dp,
    Csl,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub model: BoundKind,
    /// Abscissa grid lo:hi:n (R₀ or r_C, m).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    /// Grid density when --grid is absent.
    #[arg(long, default_value_t = collapse_core::bounds::DEFAULT_POINTS_PER_DECADE)]
    pub per_decade: usize,
    /// dCSL panel temperatures, K.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub tbeta: Option<Vec<f64>>,
    /// Constant λ floor of the full-plane search, s⁻¹.
    #[arg(long, value_parser = parse_positive, conflicts_with = "floor_file")]
    pub floor: Option<f64>,
    /// r_C-dependent floor as `r_C, lambda_min` CSV rows.
    #[arg(long)]
    pub floor_file: Option<PathBuf>,
    /// GRW overlay point `lambda,r_C`.
    #[arg(long, value_delimiter = ',', num_args = 2, value_parser = parse_positive)]
    pub grw: Option<Vec<f64>>,
    /// Adler overlay bar `r_C,lambda_lo,lambda_hi`.
    #[arg(long, value_delimiter = ',', num_args = 3, value_parser = parse_positive)]
    pub adler: Option<Vec<f64>>,
    /// Diósi overlay R₀, m.
    #[arg(long, value_parser = parse_positive, default_value_t = collapse_core::bounds::DIOSI_R0)]
    pub diosi: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub model: ModelArg,
    /// R₀ or r_C values, m.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, value_parser = parse_positive)]
    pub sigma: Vec<f64>,
    /// CSL rate, s⁻¹.
    #[arg(long, default_value_t = 1e-16, value_parser = parse_positive)]
    pub lambda: f64,
    /// Trap frequency, Hz (default: the experiment's, else 1e5).
    #[arg(long, value_parser = parse_positive)]
    pub omega0_hz: Option<f64>,
    /// Experiment whose sphere is used.
    #[arg(long, default_value = "dania")]
    pub experiment: String,
    /// T_β grid of panel (a), K.
    #[arg(long, value_parser = parse_grid, default_value = "1e-12:1e3:301")]
    pub tbeta_grid: GridSpec,
    /// T_χ grid of panels (a) and (b), K.
    #[arg(long, value_parser = parse_grid, default_value = "1e-15:1e3:361")]
    pub tchi_grid: GridSpec,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Experiment supplying mass, trap frequency and (as γ_m) the linewidth.
    #[arg(long, default_value = "dania")]
    pub experiment: String,
    /// Derive Γ and η from a collapse model instead of --gamma-collapse/--eta.
    #[arg(long, requires = "sigma")]
    pub model: Option<ModelArg>,
    /// R₀ or r_C, m.
    #[arg(long, value_parser = parse_positive)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1e-16, value_parser = parse_positive)]
    pub lambda: f64,
    /// Collapse noise temperature, K.
    #[arg(long, value_parser = parse_positive)]
    pub tbeta: Option<f64>,
    /// Collapse damping Γ, s⁻¹.
    #[arg(long, value_parser = parse_non_negative, conflicts_with = "model")]
    pub gamma_collapse: Option<f64>,
    /// Diffusion rate η, m⁻²s⁻¹.
    #[arg(long, value_parser = parse_non_negative, conflicts_with = "model")]
    pub eta: Option<f64>,
    /// Environmental damping, s⁻¹ (default: the experiment's γ_exp).
    #[arg(long, value_parser = parse_non_negative)]
    pub gamma_m: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub omega0_hz: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub t_env: Option<f64>,
    /// ω grid lo:hi:n in rad/s (default: dense around the resonance).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Γ/γ_m.
    #[arg(long, default_value_t = 1.0, value_parser = parse_non_negative)]
    pub gamma_ratio: f64,
    #[arg(long, default_value_t = 1.5e-3, value_parser = parse_positive)]
    pub gamma_m: f64,
    /// Trap frequency, rad/s.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub omega0: f64,
    #[arg(long, default_value_t = 1e-17, value_parser = parse_positive)]
    pub mass: f64,
    #[arg(long, default_value_t = 300.0, value_parser = parse_positive)]
    pub t_env: f64,
    /// Collapse noise temperature, K (default: T_env).
    #[arg(long, value_parser = parse_positive)]
    pub t_noise: Option<f64>,
    #[arg(long, default_value_t = 0.05, value_parser = parse_positive)]
    pub dt: f64,
    #[arg(long, default_value_t = 10)]
    pub decimation: usize,
    #[arg(long, default_value_t = 16)]
    pub segments: usize,
    /// log₂ of the recorded samples per segment.
    #[arg(long, default_value_t = 16)]
    pub segment_log2: u32,
    /// Drop the −ħαŵ_x term.
    #[arg(long)]
    pub no_position_noise: bool,
    /// Also write this many recorded samples of one trajectory.
    #[arg(long)]
    pub trajectory: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerdictArgs {
    pub model: BoundKind,
    /// R₀ (dDP) or r_C (dCSL), m.
    #[arg(long, alias = "r0", alias = "rc", value_parser = parse_positive)]
    pub sigma: f64,
    /// Collapse noise temperature, K; omitted means non-dissipative.
    #[arg(long, value_parser = parse_positive)]
    pub tbeta: Option<f64>,
    /// CSL rate, s⁻¹.
    #[arg(long, value_parser = parse_positive, required_if_eq("model", "dcsl"))]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}
