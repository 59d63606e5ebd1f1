use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pdm_bench::{fixture_tf, rotation_with, update_with, BenchReport, BenchScenario, NamedTf, RotationSpec, VolumeSpec};
use pdm_core::accel::dump::save_pdm_set;
use pdm_core::accel::{combine, distance_transform, occupancy_for_tf, pdm_memory_formula};
use pdm_core::render::{render, save_image};
use pdm_core::{
    build_pdm_set, build_scheme, load_raw, select_partitions, synth_volume, tf_archetype, tf_band, Accel,
    Archetype, BlockGrid, Camera, EssMode, PdmSet, RenderSettings, TransferFunction, Volume,
};
use serde_json::json;

use crate::args::{
    BenchArgs, Cli, Command, Common, PrecomputeArgs, RenderArgs, RenderOpts, ReportFormat, ServeArgs,
};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn invariant(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<pdm_core::Error> for CliError {
    fn from(e: pdm_core::Error) -> Self {
        use pdm_core::Error as E;
        let code = match &e {
            E::Io { .. } | E::Meta(_) | E::SizeMismatch { .. } | E::UnsupportedBitDepth(_) | E::MapFormat(_) | E::Image(_) => 2,
            E::AccelMismatch(_) => 3,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<pdm_bench::BenchError> for CliError {
    fn from(e: pdm_bench::BenchError) -> Self {
        match e {
            pdm_bench::BenchError::Core(e) => e.into(),
            pdm_bench::BenchError::Scenario(m) => Self::usage(m),
            pdm_bench::BenchError::Output(m) => Self::io(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Precompute(a) => &a.common,
        Command::Render(a) => &a.common,
        Command::Bench(a) => &a.common,
        Command::Serve(a) => &a.common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::invariant(e.to_string()))?;
    }
    match cli.command {
        Command::Precompute(a) => precompute(a),
        Command::Render(a) => render_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
    }
}

fn volume_spec(c: &Common) -> Result<VolumeSpec> {
    match (&c.volume, c.synth) {
        (Some(path), None) => Ok(VolumeSpec::File {
            data: path.clone(),
            meta: c.meta.clone().unwrap_or_else(|| path.with_extension("json")),
        }),
        (None, Some(kind)) => Ok(VolumeSpec::Synth { kind, dims: c.dims, seed: c.seed }),
        _ => Err(CliError::usage("give exactly one of --volume or --synth")),
    }
}

fn load(spec: &VolumeSpec) -> Result<Volume> {
    Ok(match spec {
        VolumeSpec::File { data, meta } => load_raw(data, meta)?,
        VolumeSpec::Synth { kind, dims, seed } => synth_volume(*kind, *dims, *seed)?,
    })
}

/// Resolves a `--tf` value against the volume's bit depth.
fn resolve_tf(name: &str, bits: u32) -> Result<TransferFunction> {
    if let Ok(a) = name.parse::<Archetype>() {
        return Ok(tf_archetype(a, bits)?);
    }
    if let Some(tf) = fixture_tf(name) {
        if bits != 8 {
            return Err(CliError::usage(format!("{name} is defined for 8-bit volumes only")));
        }
        return Ok(tf);
    }
    if name.eq_ignore_ascii_case("zero") {
        return Ok(TransferFunction::zero(bits)?);
    }
    if let Some(range) = name.strip_prefix("band:") {
        let (lo, hi) = range
            .split_once('-')
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| CliError::usage(format!("bad band '{range}', expected LO-HI")))?;
        return Ok(tf_band(bits, lo, hi, 0.2)?);
    }
    let tf = TransferFunction::load(name)?;
    if tf.bits() != bits {
        return Err(CliError::usage(format!(
            "transfer function is {}-bit, volume is {bits}-bit",
            tf.bits()
        )));
    }
    Ok(tf)
}

fn build_set(c: &Common, volume: &Volume, grid: &BlockGrid) -> Result<PdmSet> {
    let rho_min = u32::from(volume.intensity_range().0);
    let scheme = build_scheme(c.scheme, c.partitions as usize, volume.bits(), rho_min)?;
    Ok(build_pdm_set(volume, grid, &scheme, c.occupancy)?)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(e.to_string()))
        }
    }
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn precompute(a: PrecomputeArgs) -> Result<()> {
    let c = &a.common;
    let volume = load(&volume_spec(c)?)?;
    let grid = BlockGrid::for_volume(&volume, c.block_size)?;
    let set = build_set(c, &volume, &grid)?;
    let formula = pdm_memory_formula(set.len(), volume.len(), c.block_size);
    let divisible = volume.dims().iter().all(|d| d % c.block_size == 0);
    if divisible && set.memory_bytes() as f64 != formula {
        return Err(CliError::invariant(format!(
            "map storage {} bytes differs from n x volumesize / b^3 = {formula}",
            set.memory_bytes()
        )));
    }
    if let Some(path) = &c.out {
        save_pdm_set(&set, path)?;
    }
    let init_ms = set.init_time.as_secs_f64() * 1e3;
    let text = match c.report {
        ReportFormat::Json => {
            let report = json!({
                "dims": volume.dims(),
                "bits": volume.bits(),
                "block_size": c.block_size,
                "block_dims": grid.bdims,
                "n": set.len(),
                "scheme": set.scheme.kind(),
                "occupancy": c.occupancy,
                "init_ms": init_ms,
                "memory_bytes": set.memory_bytes(),
                "memory_formula_bytes": formula,
                "partitions": set.scheme.partitions().iter().map(|p| [p.lo, p.hi]).collect::<Vec<_>>(),
                "occupancy_fractions": set.occupancy_fractions(),
                "dump": c.out,
            });
            serde_json::to_string_pretty(&report).expect("json") + "\n"
        }
        ReportFormat::Csv => {
            let [x, y, z] = volume.dims();
            csv_line(&["dims", "n", "block_size", "scheme", "init_ms", "memory_bytes"].map(String::from))
                + &csv_line(&[
                    format!("{x}x{y}x{z}"),
                    set.len().to_string(),
                    c.block_size.to_string(),
                    set.scheme.kind().to_string(),
                    format!("{init_ms:.4}"),
                    set.memory_bytes().to_string(),
                ])
        }
    };
    write_output(None, &text)
}

fn settings(r: &RenderOpts) -> Result<RenderSettings> {
    let s = RenderSettings {
        width: r.size.0,
        height: r.size.1,
        step: r.step,
        ert_threshold: r.ert_threshold,
        ess_mode: r.ess,
        ert_enabled: !r.no_ert,
    };
    s.validate()?;
    Ok(s)
}

fn render_cmd(a: RenderArgs) -> Result<()> {
    let c = &a.common;
    let settings = settings(&a.render)?;
    let volume = load(&volume_spec(c)?)?;
    let tf = resolve_tf(c.tf.as_deref().unwrap_or("TF1"), volume.bits())?;
    let grid = BlockGrid::for_volume(&volume, c.block_size)?;
    let camera = Camera::framing(&volume, a.angle, a.elevation);

    let (fb, stats) = match settings.ess_mode {
        EssMode::None => render(&volume, &tf, &camera, &settings, Accel::None)?,
        EssMode::Block | EssMode::Distance => {
            let occ = occupancy_for_tf(&volume, &grid, &tf, c.occupancy);
            if settings.ess_mode == EssMode::Block {
                render(&volume, &tf, &camera, &settings, Accel::Block(&occ))?
            } else {
                let d = distance_transform(&occ);
                render(&volume, &tf, &camera, &settings, Accel::Distance(&d))?
            }
        }
        EssMode::Pdm => {
            let set = build_set(c, &volume, &grid)?;
            let dprime = combine(&set, &select_partitions(&tf, &set.scheme)?)?;
            render(&volume, &tf, &camera, &settings, Accel::Pdm(&dprime))?
        }
    };
    if stats.rays != (settings.width * settings.height) as u64 {
        return Err(CliError::invariant("ray count differs from pixel count"));
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("frame.png"));
    save_image(&fb, &out)?;

    let text = match c.report {
        ReportFormat::Json => {
            let report = json!({
                "out": out,
                "ess": settings.ess_mode,
                "width": fb.width,
                "height": fb.height,
                "checksum": fb.checksum(),
                "stats": stats,
            });
            serde_json::to_string_pretty(&report).expect("json") + "\n"
        }
        ReportFormat::Csv => {
            let header = [
                "ess", "width", "height", "checksum", "rays", "samples_evaluated", "samples_skipped",
                "samples_composited", "blocks_skipped", "ert_terminations", "wall_time",
            ];
            csv_line(&header.map(String::from))
                + &csv_line(&[
                    settings.ess_mode.to_string(),
                    fb.width.to_string(),
                    fb.height.to_string(),
                    fb.checksum().to_string(),
                    stats.rays.to_string(),
                    stats.samples_evaluated.to_string(),
                    stats.samples_skipped.to_string(),
                    stats.samples_composited.to_string(),
                    stats.blocks_skipped.to_string(),
                    stats.ert_terminations.to_string(),
                    format!("{:.6}", stats.wall_time),
                ])
        }
    };
    write_output(None, &text)
}

fn bench(a: BenchArgs) -> Result<()> {
    let c = &a.common;
    if a.counts.is_empty() || a.counts.contains(&0) {
        return Err(CliError::usage("--counts must list positive partition counts"));
    }
    let spec = volume_spec(c)?;
    let volume = load(&spec)?;
    let mut scenario = BenchScenario::desk(spec, volume.bits())?;
    if let Some(name) = &c.tf {
        scenario.tfs = vec![NamedTf::new(name.clone(), resolve_tf(name, volume.bits())?)];
    }
    scenario.partition_counts = a.counts.clone();
    scenario.scheme = c.scheme;
    scenario.block_size = c.block_size;
    scenario.occupancy = c.occupancy;
    scenario.render = settings(&a.render)?;
    scenario.rotation = RotationSpec { frames: a.frames, ..Default::default() };
    scenario.repetitions = a.reps;
    scenario.validate()?;

    let update = update_with(&scenario, &volume)?;
    let rotation = rotation_with(&scenario, &volume)?;
    let report = BenchReport::new(&scenario, &volume, update, rotation);
    for r in report.slower_rows() {
        eprintln!(
            "note: {} n={}: partitioned update slower than recompute (ratio {:.2})",
            r.tf, r.n, r.speedup_ratio
        );
    }
    let text = match c.report {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Csv => report.to_csv(),
    };
    write_output(c.out.as_deref(), &text)
}

fn serve(a: ServeArgs) -> Result<()> {
    let c = &a.common;
    let state = match (&c.volume, c.synth) {
        (None, None) => pdm_service::AppState::new(),
        _ => {
            let volume = load(&volume_spec(c)?)?;
            let config = pdm_service::SessionConfig {
                partitions: c.partitions as usize,
                scheme: c.scheme,
                block_size: c.block_size,
                occupancy: c.occupancy,
            };
            pdm_service::AppState::with_session(pdm_service::Session::new(volume, config)?)
        }
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::invariant(e.to_string()))?;
    runtime.block_on(async move {
        let addr = format!("{}:{}", a.host, a.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::io(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::io(e.to_string()))?;
        eprintln!("listening on http://{local}");
        pdm_service::serve(listener, state)
            .await
            .map_err(|e| CliError::io(e.to_string()))
    })
}
