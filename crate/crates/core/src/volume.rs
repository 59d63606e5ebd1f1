//! Scalar volumes, RAW + JSON sidecar I/O, and the block grid.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default block edge length in voxels.
pub const DEFAULT_BLOCK_SIZE: usize = 4;

/// A dense 3D grid of integer intensities, stored x-fastest.
///
/// In memory any depth from 1 to 16 bits is accepted; RAW files carry 8 or 16.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    bits: u32,
    voxels: Vec<u16>,
    range: (u16, u16),
    spacing: [f64; 3],
}

impl Volume {
    /// Builds a volume and computes its intensity range.
    pub fn new(dims: [usize; 3], bits: u32, voxels: Vec<u16>, spacing: [f64; 3]) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::UnsupportedBitDepth(bits));
        }
        let count = dims.iter().product::<usize>();
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidVolume(format!("zero extent in dims {dims:?}")));
        }
        if voxels.len() != count {
            return Err(Error::InvalidVolume(format!(
                "{} voxels for dims {dims:?}",
                voxels.len()
            )));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidVolume(format!("bad spacing {spacing:?}")));
        }
        let max_value = ((1u32 << bits) - 1) as u16;
        let (mut lo, mut hi) = (u16::MAX, 0u16);
        for &v in &voxels {
            if v > max_value {
                return Err(Error::InvalidVolume(format!(
                    "value {v} exceeds {bits}-bit range"
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(Self {
            dims,
            bits,
            voxels,
            range: (lo, hi),
            spacing,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of representable intensity values, `2^bits`.
    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    pub fn voxels(&self) -> &[u16] {
        &self.voxels
    }

    /// `(min, max)` intensity actually present.
    pub fn intensity_range(&self) -> (u16, u16) {
        self.range
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.voxels[self.index(x, y, z)]
    }

    /// Intensity histogram folded into `bins` equal-width bins over the
    /// representable range.
    pub fn histogram(&self, bins: usize) -> Vec<u64> {
        let bins = bins.max(1);
        let levels = self.levels();
        let mut hist = vec![0u64; bins];
        for &v in &self.voxels {
            hist[v as usize * bins / levels] += 1;
        }
        hist
    }
}

/// Sidecar metadata describing a RAW file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    pub bits: u32,
    #[serde(default)]
    pub endianness: Endianness,
    #[serde(default = "unit_spacing")]
    pub spacing: [f64; 3],
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endianness {
    #[default]
    #[serde(rename = "le")]
    Little,
    #[serde(rename = "be")]
    Big,
}

impl VolumeMeta {
    pub fn of(volume: &Volume) -> Self {
        Self {
            dims: volume.dims,
            bits: volume.bits,
            endianness: Endianness::Little,
            spacing: volume.spacing,
        }
    }
}

/// Loads a RAW volume with its JSON sidecar.
pub fn load_raw(path_data: impl AsRef<Path>, path_meta: impl AsRef<Path>) -> Result<Volume> {
    let path_meta = path_meta.as_ref();
    let meta_text = fs::read_to_string(path_meta).map_err(|e| Error::io(path_meta, e))?;
    let meta: VolumeMeta =
        serde_json::from_str(&meta_text).map_err(|e| Error::Meta(e.to_string()))?;
    let path_data = path_data.as_ref();
    let bytes = fs::read(path_data).map_err(|e| Error::io(path_data, e))?;
    decode_raw(&meta, &bytes)
}

/// Decodes RAW bytes according to `meta`.
pub fn decode_raw(meta: &VolumeMeta, bytes: &[u8]) -> Result<Volume> {
    let bytes_per_voxel = match meta.bits {
        8 => 1,
        16 => 2,
        other => return Err(Error::UnsupportedBitDepth(other)),
    };
    let count = meta.dims.iter().product::<usize>();
    let expected = (count * bytes_per_voxel) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len() as u64,
        });
    }
    let voxels = match (meta.bits, meta.endianness) {
        (8, _) => bytes.iter().map(|&b| b as u16).collect(),
        (_, Endianness::Little) => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
        (_, Endianness::Big) => bytes
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
    };
    Volume::new(meta.dims, meta.bits, voxels, meta.spacing)
}

/// Writes `volume` as little-endian RAW plus JSON sidecar. Only 8- and
/// 16-bit volumes have a RAW layout.
pub fn save_raw(
    volume: &Volume,
    path_data: impl AsRef<Path>,
    path_meta: impl AsRef<Path>,
) -> Result<()> {
    if volume.bits != 8 && volume.bits != 16 {
        return Err(Error::UnsupportedBitDepth(volume.bits));
    }
    let bytes: Vec<u8> = if volume.bits == 8 {
        volume.voxels.iter().map(|&v| v as u8).collect()
    } else {
        volume.voxels.iter().flat_map(|v| v.to_le_bytes()).collect()
    };
    let path_data = path_data.as_ref();
    fs::write(path_data, bytes).map_err(|e| Error::io(path_data, e))?;
    let meta = serde_json::to_string_pretty(&VolumeMeta::of(volume))
        .map_err(|e| Error::Meta(e.to_string()))?;
    let path_meta = path_meta.as_ref();
    fs::write(path_meta, meta).map_err(|e| Error::io(path_meta, e))
}

/// Partition of a volume into `b³` blocks; edge blocks may be partial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub dims: [usize; 3],
    pub block_size: usize,
    pub bdims: [usize; 3],
}

impl BlockGrid {
    pub fn new(dims: [usize; 3], block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidVolume("block size must be >= 1".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidVolume(format!("zero extent in dims {dims:?}")));
        }
        Ok(Self {
            dims,
            block_size,
            bdims: dims.map(|d| d.div_ceil(block_size)),
        })
    }

    pub fn for_volume(volume: &Volume, block_size: usize) -> Result<Self> {
        Self::new(volume.dims(), block_size)
    }

    pub fn block_count(&self) -> usize {
        self.bdims.iter().product()
    }

    #[inline]
    pub fn index(&self, bx: usize, by: usize, bz: usize) -> usize {
        bx + self.bdims[0] * (by + self.bdims[1] * bz)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let bx = index % self.bdims[0];
        let rest = index / self.bdims[0];
        [bx, rest % self.bdims[1], rest / self.bdims[1]]
    }

    /// Half-open voxel range `[start, end)` of block `b` along `axis`,
    /// clipped to the volume.
    #[inline]
    pub fn interior(&self, axis: usize, b: usize) -> (usize, usize) {
        let start = b * self.block_size;
        (start, (start + self.block_size).min(self.dims[axis]))
    }

    /// Interior range widened by one voxel on each side, clipped.
    #[inline]
    pub fn with_apron(&self, axis: usize, b: usize) -> (usize, usize) {
        let (s, e) = self.interior(axis, b);
        (s.saturating_sub(1), (e + 1).min(self.dims[axis]))
    }
}

/// Per-block apron-extended `(min, max)` intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRanges {
    pub grid: BlockGrid,
    pub min: Vec<u16>,
    pub max: Vec<u16>,
}

/// Min/max over every block plus a one-voxel apron on all sides.
///
/// Any trilinear sample taken at a position whose floor lies inside a block
/// interpolates only voxels from that block's apron-extended region, so its
/// value is bounded by the returned interval.
pub fn block_min_max(volume: &Volume, grid: &BlockGrid) -> BlockRanges {
    let [bx, by, bz] = grid.bdims;
    let per_slab: Vec<(Vec<u16>, Vec<u16>)> = (0..bz)
        .into_par_iter()
        .map(|kz| {
            let mut mins = vec![u16::MAX; bx * by];
            let mut maxs = vec![0u16; bx * by];
            let (z0, z1) = grid.with_apron(2, kz);
            for ky in 0..by {
                let (y0, y1) = grid.with_apron(1, ky);
                for kx in 0..bx {
                    let (x0, x1) = grid.with_apron(0, kx);
                    let (mut lo, mut hi) = (u16::MAX, 0u16);
                    for z in z0..z1 {
                        for y in y0..y1 {
                            let row = volume.index(0, y, z);
                            for &v in &volume.voxels[row + x0..row + x1] {
                                lo = lo.min(v);
                                hi = hi.max(v);
                            }
                        }
                    }
                    mins[kx + bx * ky] = lo;
                    maxs[kx + bx * ky] = hi;
                }
            }
            (mins, maxs)
        })
        .collect();
    let mut min = Vec::with_capacity(grid.block_count());
    let mut max = Vec::with_capacity(grid.block_count());
    for (lo, hi) in per_slab {
        min.extend(lo);
        max.extend(hi);
    }
    BlockRanges {
        grid: *grid,
        min,
        max,
    }
}
