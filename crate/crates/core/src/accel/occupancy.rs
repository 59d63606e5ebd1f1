use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::partition::Partition;
use crate::transfer::TransferFunction;
use crate::volume::{block_min_max, BlockGrid, BlockRanges, Volume};

/// How a block's occupancy is decided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyMode {
    /// Occupied iff a voxel inside the block qualifies.
    Voxel,
    /// Occupied iff the block's apron-extended `[min, max]` interval can
    /// produce a qualifying interpolated sample. Safe for trilinear sampling.
    #[default]
    RangeApron,
}

impl fmt::Display for OccupancyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OccupancyMode::Voxel => "voxel",
            OccupancyMode::RangeApron => "range_apron",
        })
    }
}

impl FromStr for OccupancyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "voxel" => Ok(OccupancyMode::Voxel),
            "range_apron" => Ok(OccupancyMode::RangeApron),
            other => Err(Error::InvalidSettings(format!("unknown occupancy mode '{other}'"))),
        }
    }
}

/// One flag per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyMap {
    pub grid: BlockGrid,
    pub occupied: Vec<bool>,
}

impl OccupancyMap {
    pub fn filled(grid: BlockGrid, value: bool) -> Self {
        Self {
            occupied: vec![value; grid.block_count()],
            grid,
        }
    }

    #[inline]
    pub fn get(&self, bx: usize, by: usize, bz: usize) -> bool {
        self.occupied[self.grid.index(bx, by, bz)]
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.occupied.len().max(1) as f64
    }
}

/// Evaluates `pred` over the interior voxels of every block, in parallel
/// over z-slabs of blocks. Each block stops at the first qualifying voxel.
fn scan_blocks(volume: &Volume, grid: &BlockGrid, pred: impl Fn(u16) -> bool + Sync) -> OccupancyMap {
    let [bx, by, bz] = grid.bdims;
    let slabs: Vec<Vec<bool>> = (0..bz)
        .into_par_iter()
        .map(|kz| {
            let (z0, z1) = grid.interior(2, kz);
            let mut out = vec![false; bx * by];
            for ky in 0..by {
                let (y0, y1) = grid.interior(1, ky);
                for kx in 0..bx {
                    let (x0, x1) = grid.interior(0, kx);
                    out[kx + bx * ky] = (z0..z1).any(|z| {
                        (y0..y1).any(|y| {
                            let row = volume.index(0, y, z);
                            volume.voxels()[row + x0..row + x1].iter().any(|&v| pred(v))
                        })
                    });
                }
            }
            out
        })
        .collect();
    OccupancyMap {
        grid: *grid,
        occupied: slabs.concat(),
    }
}

/// Occupancy of one intensity partition.
pub fn occupancy_for_partition(
    volume: &Volume,
    grid: &BlockGrid,
    partition: Partition,
    mode: OccupancyMode,
) -> OccupancyMap {
    match mode {
        OccupancyMode::Voxel => scan_blocks(volume, grid, |v| partition.contains(u32::from(v))),
        OccupancyMode::RangeApron => {
            partition_occupancy_from_ranges(&block_min_max(volume, grid), partition)
        }
    }
}

/// Range-apron partition occupancy from precomputed block ranges.
pub fn partition_occupancy_from_ranges(ranges: &BlockRanges, partition: Partition) -> OccupancyMap {
    OccupancyMap {
        grid: ranges.grid,
        occupied: ranges
            .min
            .iter()
            .zip(&ranges.max)
            .map(|(&lo, &hi)| partition.overlaps(u32::from(lo), u32::from(hi)))
            .collect(),
    }
}

/// Occupancy under a transfer function: a block is occupied if it can
/// produce a sample with non-zero alpha.
pub fn occupancy_for_tf<T: Real>(
    volume: &Volume,
    grid: &BlockGrid,
    tf: &TransferFunction<T>,
    mode: OccupancyMode,
) -> OccupancyMap {
    if let Some(map) = trivial_tf_occupancy(grid, tf) {
        return map;
    }
    match mode {
        OccupancyMode::Voxel => {
            let visible: Vec<bool> = (0..tf.levels()).map(|i| tf.is_visible(i)).collect();
            scan_blocks(volume, grid, |v| visible[v as usize])
        }
        OccupancyMode::RangeApron => tf_occupancy_from_ranges(&block_min_max(volume, grid), tf),
    }
}

/// Range-apron TF occupancy from precomputed block ranges, O(1) per block.
pub fn tf_occupancy_from_ranges<T: Real>(ranges: &BlockRanges, tf: &TransferFunction<T>) -> OccupancyMap {
    if let Some(map) = trivial_tf_occupancy(&ranges.grid, tf) {
        return map;
    }
    let support = tf.support();
    OccupancyMap {
        grid: ranges.grid,
        occupied: ranges
            .min
            .iter()
            .zip(&ranges.max)
            .map(|(&lo, &hi)| support.any_in(lo as usize, hi as usize))
            .collect(),
    }
}

/// Fully transparent or fully opaque-support TFs need no block scan.
fn trivial_tf_occupancy<T: Real>(grid: &BlockGrid, tf: &TransferFunction<T>) -> Option<OccupancyMap> {
    let visible = tf.lut().iter().filter(|c| c.a > T::zero()).count();
    if visible == 0 {
        Some(OccupancyMap::filled(*grid, false))
    } else if visible == tf.levels() {
        Some(OccupancyMap::filled(*grid, true))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{tf_archetype, tf_band, Archetype};

    fn constant(v: u16) -> Volume {
        Volume::new([8, 8, 8], 8, vec![v; 512], [1.0; 3]).unwrap()
    }

    #[test]
    fn constant_volume_partitions() {
        let vol = constant(5);
        let grid = BlockGrid::for_volume(&vol, 4).unwrap();
        for mode in [OccupancyMode::Voxel, OccupancyMode::RangeApron] {
            let hit = occupancy_for_partition(&vol, &grid, Partition { lo: 4, hi: 5 }, mode);
            assert_eq!(hit.count(), 8);
            let miss = occupancy_for_partition(&vol, &grid, Partition { lo: 0, hi: 1 }, mode);
            assert_eq!(miss.count(), 0);
        }
    }

    #[test]
    fn tf_extremes() {
        let vol = crate::synth::synth_volume(crate::synth::SynthKind::Noise, [16; 3], 3).unwrap();
        let grid = BlockGrid::for_volume(&vol, 4).unwrap();
        for mode in [OccupancyMode::Voxel, OccupancyMode::RangeApron] {
            let zero = TransferFunction::<f64>::zero(8).unwrap();
            assert_eq!(occupancy_for_tf(&vol, &grid, &zero, mode).count(), 0);
            let tf2: TransferFunction<f64> = tf_archetype(Archetype::Tf2, 8).unwrap();
            assert_eq!(occupancy_for_tf(&vol, &grid, &tf2, mode).count(), 64);
        }
    }

    #[test]
    fn single_bright_voxel() {
        let mut voxels = vec![0u16; 12 * 12 * 12];
        let vol0 = Volume::new([12; 3], 8, voxels.clone(), [1.0; 3]).unwrap();
        voxels[vol0.index(6, 9, 2)] = 200;
        let vol = Volume::new([12; 3], 8, voxels, [1.0; 3]).unwrap();
        let grid = BlockGrid::for_volume(&vol, 4).unwrap();
        let tf: TransferFunction<f64> = tf_band(8, 200, 200, 1.0).unwrap();
        let occ = occupancy_for_tf(&vol, &grid, &tf, OccupancyMode::Voxel);
        // brute force: the only occupied block contains the voxel
        for i in 0..grid.block_count() {
            let [bx, by, bz] = grid.coords(i);
            assert_eq!(occ.occupied[i], [bx, by, bz] == [1, 2, 0]);
        }
    }

    #[test]
    fn range_apron_contains_voxel_mode() {
        let vol = crate::synth::synth_volume(crate::synth::SynthKind::TwoSpheres, [20, 18, 17], 4)
            .unwrap();
        let grid = BlockGrid::for_volume(&vol, 4).unwrap();
        for (lo, hi) in [(0, 10), (80, 120), (200, 255), (13, 13)] {
            let p = Partition { lo, hi };
            let voxel = occupancy_for_partition(&vol, &grid, p, OccupancyMode::Voxel);
            let range = occupancy_for_partition(&vol, &grid, p, OccupancyMode::RangeApron);
            for (v, r) in voxel.occupied.iter().zip(&range.occupied) {
                assert!(!v || *r);
            }
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("range-apron".parse::<OccupancyMode>().unwrap(), OccupancyMode::RangeApron);
        assert_eq!("voxel".parse::<OccupancyMode>().unwrap(), OccupancyMode::Voxel);
        assert!("octree".parse::<OccupancyMode>().is_err());
    }
}
