use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock, RwLock};
use std::time::{Duration, Instant};

use pdm_core::accel::{combine, distance_transform, occupancy_for_tf, DistanceMap, OccupancyMap, PdmSet};
use pdm_core::partition::PartitionSelection;
use pdm_core::render::{render, Framebuffer};
use pdm_core::{
    build_pdm_set, build_scheme, select_partitions, tf_archetype, Accel, Archetype, BlockGrid, Camera,
    EssMode, OccupancyMode, RenderSettings, RenderStats, Result, SchemeKind, TransferFunction, Volume,
};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct UpdateTimings {
    pub select_ms: f64,
    pub combine_ms: f64,
}

/// Everything derived from one transfer function. Replaced as a whole, so
/// a frame never pairs a TF with a map built for another.
pub struct TfState {
    pub tf: TransferFunction,
    pub selection: PartitionSelection,
    pub dprime: DistanceMap,
    pub timings: UpdateTimings,
    /// Block occupancy and distance map for the baseline modes, built on
    /// first use.
    baseline: OnceLock<(OccupancyMap, DistanceMap)>,
}

impl TfState {
    /// Fraction of blocks that D′ marks occupied.
    pub fn dprime_occupied_fraction(&self) -> f64 {
        self.dprime.occupied_fraction()
    }
}

/// Volume-side configuration for a new session.
#[derive(Clone, Copy, Debug)]
pub struct SessionConfig {
    pub partitions: usize,
    pub scheme: SchemeKind,
    pub block_size: usize,
    pub occupancy: OccupancyMode,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            partitions: 64,
            scheme: SchemeKind::Uniform,
            block_size: pdm_core::DEFAULT_BLOCK_SIZE,
            occupancy: OccupancyMode::RangeApron,
        }
    }
}

pub struct Session {
    pub volume: Volume,
    pub grid: BlockGrid,
    pub pdms: PdmSet,
    pub config: SessionConfig,
    pub histogram: Vec<u64>,
    tf: RwLock<Arc<TfState>>,
    frames: AtomicU64,
}

/// Per-frame request parameters.
#[derive(Clone, Copy, Debug)]
pub struct FrameRequest {
    pub angle: f64,
    pub width: usize,
    pub height: usize,
    pub ess: EssMode,
    pub step: f64,
    pub elevation: f64,
}

pub struct FrameResult {
    pub frame_id: u64,
    pub image: Framebuffer,
    pub stats: RenderStats,
    pub timings: UpdateTimings,
}

impl Session {
    /// Builds the partitioned maps and starts with the TF1 archetype.
    pub fn new(volume: Volume, config: SessionConfig) -> Result<Self> {
        let grid = BlockGrid::for_volume(&volume, config.block_size)?;
        let rho_min = u32::from(volume.intensity_range().0);
        let scheme = build_scheme(config.scheme, config.partitions, volume.bits(), rho_min)?;
        let pdms = build_pdm_set(&volume, &grid, &scheme, config.occupancy)?;
        let histogram = volume.histogram(256);
        let tf = tf_archetype(Archetype::Tf1, volume.bits())?;
        let state = derive_state(&pdms, tf)?;
        Ok(Self {
            volume,
            grid,
            pdms,
            config,
            histogram,
            tf: RwLock::new(Arc::new(state)),
            frames: AtomicU64::new(0),
        })
    }

    pub fn current(&self) -> Arc<TfState> {
        Arc::clone(&self.tf.read().expect("tf lock poisoned"))
    }

    /// Recomputes selection and D′ for `tf` and swaps them in together.
    /// Callers serialize updates; readers keep whatever snapshot they hold.
    pub fn set_tf(&self, tf: TransferFunction) -> Result<Arc<TfState>> {
        let state = Arc::new(derive_state(&self.pdms, tf)?);
        *self.tf.write().expect("tf lock poisoned") = Arc::clone(&state);
        Ok(state)
    }

    pub fn frames_rendered(&self) -> u64 {
        self.frames.load(Ordering::Relaxed)
    }

    pub fn init_time(&self) -> Duration {
        self.pdms.init_time
    }

    pub fn render(&self, req: &FrameRequest) -> Result<FrameResult> {
        let state = self.current();
        let settings = RenderSettings {
            width: req.width,
            height: req.height,
            step: req.step,
            ess_mode: req.ess,
            ..Default::default()
        };
        let camera = Camera::framing(&self.volume, req.angle, req.elevation);
        let baseline = || {
            state.baseline.get_or_init(|| {
                let occ = occupancy_for_tf(&self.volume, &self.grid, &state.tf, self.config.occupancy);
                let dist = distance_transform(&occ);
                (occ, dist)
            })
        };
        let accel = match req.ess {
            EssMode::None => Accel::None,
            EssMode::Block => Accel::Block(&baseline().0),
            EssMode::Distance => Accel::Distance(&baseline().1),
            EssMode::Pdm => Accel::Pdm(&state.dprime),
        };
        let (image, stats) = render(&self.volume, &state.tf, &camera, &settings, accel)?;
        let frame_id = self.frames.fetch_add(1, Ordering::Relaxed);
        Ok(FrameResult {
            frame_id,
            image,
            stats,
            timings: state.timings,
        })
    }
}

fn derive_state(pdms: &PdmSet, tf: TransferFunction) -> Result<TfState> {
    let t = Instant::now();
    let selection = select_partitions(&tf, &pdms.scheme)?;
    let select = t.elapsed();
    let t = Instant::now();
    let dprime = combine(pdms, &selection)?;
    let combine_time = t.elapsed();
    Ok(TfState {
        tf,
        selection,
        dprime,
        timings: UpdateTimings {
            select_ms: select.as_secs_f64() * 1e3,
            combine_ms: combine_time.as_secs_f64() * 1e3,
        },
        baseline: OnceLock::new(),
    })
}
