use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use pdm_core::{EssMode, OccupancyMode, SchemeKind, SynthKind};

#[derive(Debug, Parser)]
#[command(name = "pdmvr", version, about = "Volume ray casting with partitioned distance maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the partitioned distance maps and report cost and memory.
    Precompute(PrecomputeArgs),
    /// Render one frame.
    Render(RenderArgs),
    /// Run the update and orbit benchmarks.
    Bench(BenchArgs),
    /// Serve the HTTP and WebSocket API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").args(["volume", "synth"]).multiple(false)))]
pub struct Common {
    /// RAW volume file.
    #[arg(long)]
    pub volume: Option<PathBuf>,
    /// JSON sidecar for --volume; defaults to the same path with a .json extension.
    #[arg(long, requires = "volume")]
    pub meta: Option<PathBuf>,
    /// Synthetic volume kind.
    #[arg(long, value_parser = parse_synth)]
    pub synth: Option<SynthKind>,
    /// Synthetic volume dimensions.
    #[arg(long, default_value = "64x64x64", value_parser = parse_dims)]
    pub dims: [usize; 3],
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// TF1..TF6, `zero`, `band:LO-HI`, or a JSON file.
    #[arg(long)]
    pub tf: Option<String>,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub partitions: u32,
    #[arg(long, default_value = "uniform", value_parser = parse_scheme)]
    pub scheme: SchemeKind,
    #[arg(long, default_value = "range-apron", value_parser = parse_occupancy)]
    pub occupancy: OccupancyMode,
    #[arg(long, default_value_t = pdm_core::DEFAULT_BLOCK_SIZE, value_parser = parse_positive)]
    pub block_size: usize,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "PDM_THREADS", value_parser = parse_positive)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub report: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderOpts {
    #[arg(long, default_value = "none", value_parser = parse_ess)]
    pub ess: EssMode,
    /// Viewport as WxH.
    #[arg(long, default_value = "256x256", value_parser = parse_size)]
    pub size: (usize, usize),
    /// Ray step in voxels.
    #[arg(long, default_value_t = 0.5, value_parser = parse_step)]
    pub step: f64,
    #[arg(long, overrides_with = "no_ert")]
    pub ert: bool,
    /// Disable early ray termination.
    #[arg(long)]
    pub no_ert: bool,
    #[arg(long, default_value_t = 0.98)]
    pub ert_threshold: f64,
}

#[derive(Debug, Args)]
pub struct PrecomputeArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub render: RenderOpts,
    /// Orbit angle in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub angle: f64,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub elevation: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub render: RenderOpts,
    /// Partition counts to compare.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 8, value_parser = parse_positive)]
    pub frames: usize,
    #[arg(long, default_value_t = 5, value_parser = parse_positive)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "PDM_PORT", default_value_t = 8080)]
    pub port: u16,
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_step(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("step must be positive".into())
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w = parse_positive(w.trim()).map_err(|e| format!("width {e}"))?;
    let h = parse_positive(h.trim()).map_err(|e| format!("height {e}"))?;
    Ok((w, h))
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    match parts.as_slice() {
        [x, y, z] => Ok([parse_positive(x)?, parse_positive(y)?, parse_positive(z)?]),
        [n] => {
            let n = parse_positive(n)?;
            Ok([n; 3])
        }
        _ => Err("expected XxYxZ or a single edge length".into()),
    }
}

fn parse_synth(s: &str) -> Result<SynthKind, String> {
    s.parse().map_err(|e: pdm_core::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    match s.parse::<SchemeKind>() {
        Ok(SchemeKind::Custom) => Err("custom schemes cannot be requested here".into()),
        Ok(k) => Ok(k),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_occupancy(s: &str) -> Result<OccupancyMode, String> {
    s.parse().map_err(|e: pdm_core::Error| e.to_string())
}

fn parse_ess(s: &str) -> Result<EssMode, String> {
    s.parse().map_err(|e: pdm_core::Error| e.to_string())
}
