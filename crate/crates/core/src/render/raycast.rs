//! Front-to-back ray casting over a fixed sample grid with pluggable empty
//! space skipping.
//!
//! Rays are marched in voxel-index space, where voxel `i` sits at coordinate
//! `i` and the volume box is `[0, n - 1]` per axis. Every ray has a fixed set
//! of sample positions `s_k = k * step` measured from its entry point; empty
//! space skipping only decides which `k` are visited, never where they lie.
//! A sample belongs to the block holding `floor(p)`, which is the lower
//! corner of its trilinear footprint.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::{DistanceMap, OccupancyMap};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::num::Real;
use crate::transfer::TransferFunction;
use crate::volume::{BlockGrid, Volume};

use super::camera::Camera;
use super::image::Framebuffer;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssMode {
    #[default]
    None,
    /// Skip single empty blocks (occupancy map).
    Block,
    /// Skip by the TF-derived distance map.
    Distance,
    /// Skip by the distance map combined from partitioned distance maps.
    Pdm,
}

impl EssMode {
    pub const ALL: [EssMode; 4] = [EssMode::None, EssMode::Block, EssMode::Distance, EssMode::Pdm];

    pub fn name(self) -> &'static str {
        match self {
            EssMode::None => "none",
            EssMode::Block => "block",
            EssMode::Distance => "distance",
            EssMode::Pdm => "pdm",
        }
    }
}

impl fmt::Display for EssMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EssMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EssMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSettings(format!("unknown ess mode '{s}'")))
    }
}

/// The acceleration structure handed to the renderer.
#[derive(Clone, Copy, Debug)]
pub enum Accel<'a> {
    None,
    Block(&'a OccupancyMap),
    Distance(&'a DistanceMap),
    Pdm(&'a DistanceMap),
}

impl Accel<'_> {
    pub fn mode(&self) -> EssMode {
        match self {
            Accel::None => EssMode::None,
            Accel::Block(_) => EssMode::Block,
            Accel::Distance(_) => EssMode::Distance,
            Accel::Pdm(_) => EssMode::Pdm,
        }
    }

    fn grid(&self) -> Option<&BlockGrid> {
        match self {
            Accel::None => None,
            Accel::Block(m) => Some(&m.grid),
            Accel::Distance(m) | Accel::Pdm(m) => Some(&m.grid),
        }
    }

    /// Inclusive block box around `block` that is guaranteed empty, or
    /// `None` if the block must be sampled.
    #[inline]
    fn empty_region(&self, block: [usize; 3]) -> Option<([usize; 3], [usize; 3])> {
        match self {
            Accel::None => None,
            Accel::Block(occ) => {
                (!occ.get(block[0], block[1], block[2])).then_some((block, block))
            }
            Accel::Distance(map) | Accel::Pdm(map) => {
                let d = map.get(block[0], block[1], block[2]) as usize;
                if d == 0 {
                    return None;
                }
                let r = d - 1;
                let lo = block.map(|b| b.saturating_sub(r));
                let hi = [0, 1, 2].map(|a| (block[a] + r).min(map.grid.bdims[a] - 1));
                Some((lo, hi))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSettings<T> {
    pub width: usize,
    pub height: usize,
    /// Distance between samples in voxel units.
    pub step: T,
    /// Accumulated alpha at which a ray stops.
    pub ert_threshold: T,
    pub ess_mode: EssMode,
    pub ert_enabled: bool,
}

impl<T: Real> Default for RenderSettings<T> {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            step: T::lit(0.5),
            ert_threshold: T::lit(0.98),
            ess_mode: EssMode::None,
            ert_enabled: true,
        }
    }
}

impl<T: Real> RenderSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSettings(format!(
                "viewport {}x{} is empty",
                self.width, self.height
            )));
        }
        if !(self.step > T::zero() && self.step.is_finite()) {
            return Err(Error::InvalidSettings("step must be positive".into()));
        }
        if !(self.ert_threshold > T::zero() && self.ert_threshold <= T::one()) {
            return Err(Error::InvalidSettings("ert threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Deterministic per-frame counters.
///
/// Every fixed-grid sample inside the volume is counted exactly once, either
/// as evaluated (visited by the marching loop) or as skipped (jumped over by
/// empty space skipping, or left over after early termination).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    pub rays: u64,
    /// Samples visited by the loop, including landing samples that trigger
    /// a skip.
    pub samples_evaluated: u64,
    pub samples_skipped: u64,
    /// Samples whose volume value was interpolated and classified.
    pub samples_composited: u64,
    /// Number of skip jumps taken.
    pub blocks_skipped: u64,
    pub ert_terminations: u64,
    pub wall_time: f64,
}

impl RenderStats {
    pub fn total_samples(&self) -> u64 {
        self.samples_evaluated + self.samples_skipped
    }

    fn merge(mut self, o: Self) -> Self {
        self.rays += o.rays;
        self.samples_evaluated += o.samples_evaluated;
        self.samples_skipped += o.samples_skipped;
        self.samples_composited += o.samples_composited;
        self.blocks_skipped += o.blocks_skipped;
        self.ert_terminations += o.ert_terminations;
        self
    }

    /// Counters only, with the wall time zeroed; for reproducibility checks.
    pub fn counters(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..*self
        }
    }
}

/// A ray segment through the volume box with its fixed sample grid.
#[derive(Clone, Copy, Debug)]
pub struct SampleRay<T> {
    /// Entry point into the volume box, voxel space.
    pub entry: Vec3<T>,
    /// Unit direction, voxel space.
    pub dir: Vec3<T>,
    pub step: T,
    /// Number of samples `k` with `k * step` inside the segment.
    pub samples: usize,
}

impl<T: Real> SampleRay<T> {
    /// Clips `origin + t * dir` against the volume box `[0, n - 1]³`.
    pub fn through_volume(origin: Vec3<T>, dir: Vec3<T>, dims: [usize; 3], step: T) -> Option<Self> {
        let dir = dir.normalized()?;
        let hi = Vec3::new(
            T::from_usize_lossy(dims[0] - 1),
            T::from_usize_lossy(dims[1] - 1),
            T::from_usize_lossy(dims[2] - 1),
        );
        let (t0, t1) = Aabb::new(Vec3::splat(T::zero()), hi).intersect(origin, dir)?;
        let t0 = t0.max(T::zero());
        if t1 < t0 {
            return None;
        }
        let samples = ((t1 - t0) / step).floor().to_usize()? + 1;
        Some(Self {
            entry: origin + dir * t0,
            dir,
            step,
            samples,
        })
    }

    /// Position of sample `k`. Every consumer uses this exact expression.
    #[inline]
    pub fn position(&self, k: usize) -> Vec3<T> {
        self.entry + self.dir * (T::from_usize_lossy(k) * self.step)
    }

    #[inline]
    fn axis_position(&self, k: usize, axis: usize) -> T {
        self.entry.axis(axis) + self.dir.axis(axis) * (T::from_usize_lossy(k) * self.step)
    }

    /// First sample index `> k` whose computed coordinate on `axis` leaves
    /// the voxel slab `[lo, hi)`; `self.samples` if none does.
    fn slab_exit(&self, k: usize, axis: usize, lo: T, hi: T) -> usize {
        let d = self.dir.axis(axis);
        let outside = |j: usize| {
            let p = self.axis_position(j, axis);
            if d > T::zero() {
                p >= hi
            } else {
                p < lo
            }
        };
        let bound = if d > T::zero() { hi } else { lo };
        let guess = ((bound - self.entry.axis(axis)) / (d * self.step)).ceil();
        let mut j = match guess.to_usize() {
            Some(g) => g.clamp(k + 1, self.samples),
            None if guess > T::zero() => self.samples,
            None => k + 1,
        };
        while j > k + 1 && outside(j - 1) {
            j -= 1;
        }
        while j < self.samples && !outside(j) {
            j += 1;
        }
        j
    }
}

/// Voxel index below `p` on each axis, clamped into the volume.
#[inline]
fn floor_voxel<T: Real>(p: Vec3<T>, dims: [usize; 3]) -> [usize; 3] {
    [0, 1, 2].map(|a| {
        let f = p.axis(a).floor();
        if f <= T::zero() {
            0
        } else {
            f.to_usize().unwrap_or(usize::MAX).min(dims[a] - 1)
        }
    })
}

#[inline]
fn block_of(voxel: [usize; 3], grid: &BlockGrid) -> [usize; 3] {
    [0, 1, 2].map(|a| (voxel[a] / grid.block_size).min(grid.bdims[a] - 1))
}

/// Next sample index to visit after landing on sample `k` in `block`.
///
/// If the acceleration structure certifies an empty block box around
/// `block`, returns the first sample whose block lies outside that box;
/// otherwise `k + 1`. The result is always greater than `k`.
pub fn ess_advance<T: Real>(accel: &Accel<'_>, block: [usize; 3], ray: &SampleRay<T>, k: usize) -> usize {
    match (accel.grid(), accel.empty_region(block)) {
        (Some(grid), Some(region)) => skip_region(grid, region, ray, k),
        _ => k + 1,
    }
}

fn skip_region<T: Real>(
    grid: &BlockGrid,
    (lo, hi): ([usize; 3], [usize; 3]),
    ray: &SampleRay<T>,
    k: usize,
) -> usize {
    let b = grid.block_size;
    let mut next = ray.samples;
    for axis in 0..3 {
        let d = ray.dir.axis(axis);
        if d == T::zero() {
            continue;
        }
        // Clamping maps positions beyond the outermost blocks back onto
        // them, so the box is unbounded on a side that touches the border.
        let lo_bound = if lo[axis] == 0 {
            T::neg_infinity()
        } else {
            T::from_usize_lossy(lo[axis] * b)
        };
        let hi_bound = if hi[axis] + 1 == grid.bdims[axis] {
            T::infinity()
        } else {
            T::from_usize_lossy((hi[axis] + 1) * b)
        };
        if (d > T::zero() && hi_bound.is_infinite()) || (d < T::zero() && lo_bound.is_infinite()) {
            continue;
        }
        next = next.min(ray.slab_exit(k, axis, lo_bound, hi_bound));
    }
    next.max(k + 1)
}

/// Trilinear interpolation at voxel-space position `p`.
#[inline]
fn trilinear<T: Real>(volume: &Volume, p: Vec3<T>) -> T {
    let dims = volume.dims();
    let i0 = floor_voxel(p, dims);
    let i1 = [0, 1, 2].map(|a| (i0[a] + 1).min(dims[a] - 1));
    let f = [0, 1, 2].map(|a| (p.axis(a) - T::from_usize_lossy(i0[a])).max(T::zero()).min(T::one()));
    let v = |x: usize, y: usize, z: usize| T::from_u16(volume.get(x, y, z)).unwrap_or_else(T::zero);
    let lerp = |a: T, b: T, t: T| a + (b - a) * t;
    let c00 = lerp(v(i0[0], i0[1], i0[2]), v(i1[0], i0[1], i0[2]), f[0]);
    let c10 = lerp(v(i0[0], i1[1], i0[2]), v(i1[0], i1[1], i0[2]), f[0]);
    let c01 = lerp(v(i0[0], i0[1], i1[2]), v(i1[0], i0[1], i1[2]), f[0]);
    let c11 = lerp(v(i0[0], i1[1], i1[2]), v(i1[0], i1[1], i1[2]), f[0]);
    lerp(lerp(c00, c10, f[1]), lerp(c01, c11, f[1]), f[2])
}

/// Result of marching one ray.
#[derive(Clone, Copy, Debug, Default)]
pub struct RayResult<T> {
    pub color: [T; 3],
    pub alpha: T,
    pub stats: RenderStats,
}

/// Marches one ray front to back.
pub fn march<T: Real>(
    volume: &Volume,
    tf: &TransferFunction<T>,
    settings: &RenderSettings<T>,
    accel: &Accel<'_>,
    grid: &BlockGrid,
    ray: &SampleRay<T>,
) -> RayResult<T> {
    let dims = volume.dims();
    let mut color = [T::zero(); 3];
    let mut alpha = T::zero();
    let mut stats = RenderStats::default();
    let mut k = 0;
    while k < ray.samples {
        let p = ray.position(k);
        let voxel = floor_voxel(p, dims);
        stats.samples_evaluated += 1;
        if let Some(region) = accel.empty_region(block_of(voxel, grid)) {
            let next = skip_region(grid, region, ray, k);
            stats.samples_skipped += (next - k - 1) as u64;
            stats.blocks_skipped += 1;
            k = next;
            continue;
        }
        stats.samples_composited += 1;
        let c = tf.lookup(trilinear(volume, p));
        if c.a > T::zero() {
            let w = (T::one() - alpha) * c.a;
            color[0] += w * c.r;
            color[1] += w * c.g;
            color[2] += w * c.b;
            alpha += w;
        }
        if settings.ert_enabled && alpha >= settings.ert_threshold {
            stats.ert_terminations += 1;
            stats.samples_skipped += (ray.samples - k - 1) as u64;
            break;
        }
        k += 1;
    }
    RayResult { color, alpha, stats }
}

#[inline]
fn to_u8<T: Real>(v: T) -> u8 {
    (v.max(T::zero()).min(T::one()) * T::lit(255.0))
        .round()
        .to_u8()
        .unwrap_or(0)
}

/// Renders one frame.
pub fn render<T: Real>(
    volume: &Volume,
    tf: &TransferFunction<T>,
    camera: &Camera<T>,
    settings: &RenderSettings<T>,
    accel: Accel<'_>,
) -> Result<(Framebuffer, RenderStats)> {
    settings.validate()?;
    if accel.mode() != settings.ess_mode {
        return Err(Error::AccelMismatch(settings.ess_mode.name()));
    }
    if tf.levels() != volume.levels() {
        return Err(Error::InvalidTransferFunction(format!(
            "transfer function has {} entries, volume needs {}",
            tf.levels(),
            volume.levels()
        )));
    }
    let grid = match accel.grid() {
        Some(g) if g.dims != volume.dims() => {
            return Err(Error::AccelMismatch(settings.ess_mode.name()));
        }
        Some(g) => *g,
        None => BlockGrid::new(volume.dims(), 1)?,
    };
    let frame = camera.frame()?;
    let start = Instant::now();

    let spacing = volume.spacing();
    let spacing = Vec3::new(T::lit(spacing[0]), T::lit(spacing[1]), T::lit(spacing[2]));
    let dims = volume.dims();
    let centre = Vec3::new(
        T::lit((dims[0] as f64 - 1.0) * 0.5),
        T::lit((dims[1] as f64 - 1.0) * 0.5),
        T::lit((dims[2] as f64 - 1.0) * 0.5),
    );
    let origin = frame.eye.component_div(spacing) + centre;

    let (width, height) = (settings.width, settings.height);
    let mut fb = Framebuffer::new(width, height);
    let stats = fb
        .pixels
        .par_chunks_mut(width * 4)
        .enumerate()
        .map(|(py, row)| {
            let mut stats = RenderStats::default();
            for px in 0..width {
                stats.rays += 1;
                let dir = frame.pixel_dir(px, py, width, height).component_div(spacing);
                let Some(ray) = SampleRay::through_volume(origin, dir, dims, settings.step) else {
                    continue;
                };
                let r = march(volume, tf, settings, &accel, &grid, &ray);
                stats = stats.merge(r.stats);
                let out = &mut row[px * 4..px * 4 + 4];
                out[0] = to_u8(r.color[0]);
                out[1] = to_u8(r.color[1]);
                out[2] = to_u8(r.color[2]);
                out[3] = to_u8(r.alpha);
            }
            stats
        })
        .reduce(RenderStats::default, RenderStats::merge);
    Ok((
        fb,
        RenderStats {
            wall_time: start.elapsed().as_secs_f64(),
            ..stats
        },
    ))
}
