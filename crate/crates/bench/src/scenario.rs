use std::path::PathBuf;

use pdm_core::{
    load_raw, synth_volume, tf_archetype, Archetype, OccupancyMode, RenderSettings, SchemeKind,
    SynthKind, TransferFunction, Volume, DEFAULT_BLOCK_SIZE,
};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const DEFAULT_PARTITION_COUNTS: [usize; 5] = [16, 32, 64, 128, 256];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum VolumeSpec {
    File { data: PathBuf, meta: PathBuf },
    Synth { kind: SynthKind, dims: [usize; 3], seed: u64 },
}

impl VolumeSpec {
    pub fn load(&self) -> Result<Volume> {
        Ok(match self {
            VolumeSpec::File { data, meta } => load_raw(data, meta)?,
            VolumeSpec::Synth { kind, dims, seed } => synth_volume(*kind, *dims, *seed)?,
        })
    }

    /// Short dataset label for report rows.
    pub fn label(&self) -> String {
        match self {
            VolumeSpec::File { data, .. } => data
                .file_stem()
                .map_or_else(|| "volume".into(), |s| s.to_string_lossy().into_owned()),
            VolumeSpec::Synth { kind, seed, .. } => format!("{kind}-s{seed}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedTf {
    pub name: String,
    pub tf: TransferFunction,
}

impl NamedTf {
    pub fn new(name: impl Into<String>, tf: TransferFunction) -> Self {
        Self { name: name.into(), tf }
    }
}

/// Fixture transfer functions shipped with the harness (8-bit).
pub fn fixture_tf(name: &str) -> Option<TransferFunction> {
    let text = match name.to_ascii_uppercase().as_str() {
        "TF5" => include_str!("../fixtures/tf5.json"),
        "TF6" => include_str!("../fixtures/tf6.json"),
        _ => return None,
    };
    Some(TransferFunction::from_json(text).expect("bundled fixture parses"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub revolutions: f64,
    pub frames: usize,
    /// Nominal wall time of the orbit; only used to report a frame budget.
    pub duration_s: f64,
}

impl Default for RotationSpec {
    fn default() -> Self {
        Self {
            revolutions: 2.0,
            frames: 8,
            duration_s: 10.0,
        }
    }
}

impl RotationSpec {
    pub fn angle(&self, frame: usize) -> f64 {
        std::f64::consts::TAU * self.revolutions * frame as f64 / self.frames as f64
    }
}

#[derive(Clone, Debug)]
pub struct BenchScenario {
    pub volume: VolumeSpec,
    pub tfs: Vec<NamedTf>,
    pub partition_counts: Vec<usize>,
    pub scheme: SchemeKind,
    pub block_size: usize,
    pub occupancy: OccupancyMode,
    pub render: RenderSettings,
    pub rotation: RotationSpec,
    /// Timed repetitions per measurement; one extra warmup run is discarded.
    pub repetitions: usize,
    /// Adds the 32-partition uniform versus min-special comparison to the
    /// rotation section.
    pub granularity_check: bool,
    pub elevation: f64,
}

impl BenchScenario {
    /// Desk-scale defaults: TF1 to TF4 at the volume's bit depth, TF5 and
    /// TF6 when it is 8-bit, 256² viewport.
    pub fn desk(volume: VolumeSpec, bits: u32) -> Result<Self> {
        let mut tfs: Vec<NamedTf> = Archetype::ALL
            .into_iter()
            .map(|a| Ok(NamedTf::new(a.name(), tf_archetype(a, bits)?)))
            .collect::<Result<_>>()?;
        if bits == 8 {
            for name in ["TF5", "TF6"] {
                tfs.push(NamedTf::new(name, fixture_tf(name).expect("fixture exists")));
            }
        }
        Ok(Self {
            volume,
            tfs,
            partition_counts: DEFAULT_PARTITION_COUNTS.to_vec(),
            scheme: SchemeKind::Uniform,
            block_size: DEFAULT_BLOCK_SIZE,
            occupancy: OccupancyMode::RangeApron,
            render: RenderSettings::default(),
            rotation: RotationSpec::default(),
            repetitions: 5,
            granularity_check: true,
            elevation: 0.3,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Scenario(m.into()));
        if self.partition_counts.is_empty() || self.partition_counts.contains(&0) {
            return bad("partition counts must be non-empty and positive");
        }
        if self.rotation.frames == 0 {
            return bad("at least one frame is required");
        }
        if self.repetitions == 0 {
            return bad("at least one repetition is required");
        }
        if self.tfs.is_empty() {
            return bad("no transfer functions");
        }
        if self.scheme == SchemeKind::Custom {
            return bad("custom schemes are not generated by the harness");
        }
        self.render.validate()?;
        Ok(())
    }
}
