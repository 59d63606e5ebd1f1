use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::partition::{PartitionScheme, PartitionSelection};
use crate::transfer::TransferFunction;
use crate::volume::{block_min_max, BlockGrid, Volume};

use super::distance::{distance_transform, DistanceMap, MAX_DISTANCE};
use super::occupancy::{occupancy_for_tf, partition_occupancy_from_ranges, OccupancyMap, OccupancyMode};

/// Maximum number of maps folded into the accumulator per pass in
/// [`CombineMode::Chunked`].
pub const MAPS_PER_PASS: usize = 6;

/// One distance map per intensity partition.
#[derive(Clone, Debug)]
pub struct PdmSet {
    pub scheme: PartitionScheme,
    pub grid: BlockGrid,
    pub mode: OccupancyMode,
    pub pdms: Vec<DistanceMap>,
    /// Wall time spent building the set.
    pub init_time: Duration,
}

impl PdmSet {
    pub fn len(&self) -> usize {
        self.pdms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pdms.is_empty()
    }

    /// PDM of 1-based partition `p`.
    pub fn get(&self, p: usize) -> Option<&DistanceMap> {
        p.checked_sub(1).and_then(|i| self.pdms.get(i))
    }

    /// Bytes held by the PDMs: one byte per block per partition.
    pub fn memory_bytes(&self) -> usize {
        self.pdms.len() * self.grid.block_count()
    }

    /// Fraction of occupied blocks for each partition, in partition order.
    pub fn occupancy_fractions(&self) -> Vec<f64> {
        self.pdms.iter().map(DistanceMap::occupied_fraction).collect()
    }
}

/// Extra storage predicted for `n` partitions: `n * volumesize / b³`.
pub fn pdm_memory_formula(n: usize, voxel_count: usize, block_size: usize) -> f64 {
    n as f64 * voxel_count as f64 / (block_size as f64).powi(3)
}

/// Builds the occupancy map and distance map of every partition.
///
/// Partitions are processed in parallel; each partition's occupancy map is
/// dropped as soon as its distance map exists.
pub fn build_pdm_set(
    volume: &Volume,
    grid: &BlockGrid,
    scheme: &PartitionScheme,
    mode: OccupancyMode,
) -> Result<PdmSet> {
    if scheme.levels() != volume.levels() {
        return Err(Error::InvalidScheme(format!(
            "scheme covers {} levels, volume has {}",
            scheme.levels(),
            volume.levels()
        )));
    }
    if grid.dims != volume.dims() {
        return Err(Error::InvalidVolume("block grid does not match volume".into()));
    }
    let start = Instant::now();
    let pdms = match mode {
        OccupancyMode::RangeApron => {
            let ranges = block_min_max(volume, grid);
            scheme
                .partitions()
                .par_iter()
                .map(|&p| distance_transform(&partition_occupancy_from_ranges(&ranges, p)))
                .collect()
        }
        OccupancyMode::Voxel => {
            let present = partitions_per_block(volume, grid, scheme);
            (0..scheme.len())
                .into_par_iter()
                .map(|p| {
                    let occ = OccupancyMap {
                        grid: *grid,
                        occupied: present.iter().map(|list| list.binary_search(&(p as u16)).is_ok()).collect(),
                    };
                    distance_transform(&occ)
                })
                .collect()
        }
    };
    Ok(PdmSet {
        scheme: scheme.clone(),
        grid: *grid,
        mode,
        pdms,
        init_time: start.elapsed(),
    })
}

/// Sorted 0-based indices of the partitions present inside each block.
fn partitions_per_block(volume: &Volume, grid: &BlockGrid, scheme: &PartitionScheme) -> Vec<Vec<u16>> {
    let table = scheme.index_table();
    let [bx, by, bz] = grid.bdims;
    let slabs: Vec<Vec<Vec<u16>>> = (0..bz)
        .into_par_iter()
        .map(|kz| {
            let (z0, z1) = grid.interior(2, kz);
            let mut out = Vec::with_capacity(bx * by);
            for ky in 0..by {
                let (y0, y1) = grid.interior(1, ky);
                for kx in 0..bx {
                    let (x0, x1) = grid.interior(0, kx);
                    let mut list = Vec::new();
                    for z in z0..z1 {
                        for y in y0..y1 {
                            let row = volume.index(0, y, z);
                            list.extend(volume.voxels()[row + x0..row + x1].iter().map(|&v| table[v as usize]));
                        }
                    }
                    list.sort_unstable();
                    list.dedup();
                    out.push(list);
                }
            }
            out
        })
        .collect();
    slabs.concat()
}

/// How [`combine_with`] folds the selected maps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CombineMode {
    /// One pass over all selected maps.
    #[default]
    Direct,
    /// Passes of at most this many maps each, min-ed into an accumulator.
    Chunked(usize),
}

/// Element-wise minimum over the selected PDMs. An empty selection yields a
/// map of `MAX_DISTANCE`.
pub fn combine(set: &PdmSet, selection: &PartitionSelection) -> Result<DistanceMap> {
    combine_with(set, selection, CombineMode::Direct)
}

pub fn combine_with(set: &PdmSet, selection: &PartitionSelection, mode: CombineMode) -> Result<DistanceMap> {
    let maps = selection
        .iter()
        .map(|p| {
            set.get(p).map(|m| m.dist.as_slice()).ok_or(Error::PartitionIndex {
                index: p,
                n: set.len(),
            })
        })
        .collect::<Result<Vec<&[u8]>>>()?;
    let mut out = vec![MAX_DISTANCE; set.grid.block_count()];
    match mode {
        CombineMode::Direct => min_into(&mut out, &maps),
        CombineMode::Chunked(per_pass) => {
            let mut scratch = vec![MAX_DISTANCE; out.len()];
            for group in maps.chunks(per_pass.max(1)) {
                // flip-flop: read the previous pass from `out`, write `scratch`
                scratch.copy_from_slice(&out);
                min_into(&mut scratch, group);
                std::mem::swap(&mut out, &mut scratch);
            }
        }
    }
    Ok(DistanceMap {
        grid: set.grid,
        dist: out,
    })
}

const COMBINE_CHUNK: usize = 1 << 14;

fn min_into(out: &mut [u8], maps: &[&[u8]]) {
    if maps.is_empty() {
        return;
    }
    let fold = |offset: usize, chunk: &mut [u8]| {
        let len = chunk.len();
        for map in maps {
            for (o, &d) in chunk.iter_mut().zip(&map[offset..offset + len]) {
                *o = (*o).min(d);
            }
        }
    };
    if out.len() <= COMBINE_CHUNK {
        fold(0, out);
    } else {
        out.par_chunks_mut(COMBINE_CHUNK)
            .enumerate()
            .for_each(|(i, chunk)| fold(i * COMBINE_CHUNK, chunk));
    }
}

/// The conventional TF-derived distance map, recomputed from scratch.
pub fn standard_distance_map<T: Real>(
    volume: &Volume,
    grid: &BlockGrid,
    tf: &TransferFunction<T>,
    mode: OccupancyMode,
) -> DistanceMap {
    distance_transform(&occupancy_for_tf(volume, grid, tf, mode))
}
