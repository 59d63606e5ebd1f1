use std::time::Instant;

use pdm_core::accel::{
    combine, distance_transform, occupancy_for_tf, tf_occupancy_from_ranges, PdmSet,
};
use pdm_core::{
    block_min_max, build_pdm_set, build_scheme, select_partitions, BlockGrid, OccupancyMode,
    SchemeKind, Volume,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::BenchScenario;

/// One-time precomputation for one partition count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub one_time_init_ms: f64,
    pub memory_bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateRow {
    pub tf: String,
    pub scheme: SchemeKind,
    pub n: usize,
    pub selected: usize,
    /// Occupancy plus distance transform from scratch.
    pub update_ms_baseline: f64,
    /// Partition selection plus combine.
    pub update_ms_pdm: f64,
    pub select_ms: f64,
    pub combine_ms: f64,
    pub speedup_ratio: f64,
    /// Set when the partitioned update was slower than the baseline.
    pub pdm_slower: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateSection {
    pub init: Vec<InitRow>,
    pub rows: Vec<UpdateRow>,
}

/// Lower bound for reported timings so ratios stay finite.
const MIN_MS: f64 = 1e-6;

/// Median wall time in milliseconds over `reps` runs after one warmup.
pub(crate) fn median_ms<R>(reps: usize, mut f: impl FnMut() -> R) -> f64 {
    std::hint::black_box(f());
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let m = times.len() / 2;
    let median = if times.len() % 2 == 0 {
        0.5 * (times[m - 1] + times[m])
    } else {
        times[m]
    };
    median.max(MIN_MS)
}

pub(crate) fn build_sets(scenario: &BenchScenario, volume: &Volume, grid: &BlockGrid) -> Result<Vec<PdmSet>> {
    let rho_min = u32::from(volume.intensity_range().0);
    scenario
        .partition_counts
        .iter()
        .map(|&n| {
            let scheme = build_scheme(scenario.scheme, n, volume.bits(), rho_min)?;
            Ok(build_pdm_set(volume, grid, &scheme, scenario.occupancy)?)
        })
        .collect()
}

/// Times TF updates for every (n, TF) pair of the scenario.
pub fn run_update_bench(scenario: &BenchScenario) -> Result<UpdateSection> {
    scenario.validate()?;
    update_with(scenario, &scenario.volume.load()?)
}

pub fn update_with(scenario: &BenchScenario, volume: &Volume) -> Result<UpdateSection> {
    let grid = BlockGrid::for_volume(volume, scenario.block_size)?;
    let sets = build_sets(scenario, volume, &grid)?;
    let reps = scenario.repetitions;

    // Block ranges do not depend on the TF, so the baseline keeps them
    // cached and only redoes the per-block test and the transform.
    let ranges = (scenario.occupancy == OccupancyMode::RangeApron).then(|| block_min_max(volume, &grid));
    let baseline: Vec<f64> = scenario
        .tfs
        .iter()
        .map(|t| {
            median_ms(reps, || {
                let occ = match &ranges {
                    Some(r) => tf_occupancy_from_ranges(r, &t.tf),
                    None => occupancy_for_tf(volume, &grid, &t.tf, scenario.occupancy),
                };
                distance_transform(&occ)
            })
        })
        .collect();

    let mut section = UpdateSection::default();
    for set in &sets {
        let n = set.len();
        section.init.push(InitRow {
            scheme: set.scheme.kind(),
            n,
            one_time_init_ms: (set.init_time.as_secs_f64() * 1e3).max(MIN_MS),
            memory_bytes: set.memory_bytes(),
        });
        for (t, &base) in scenario.tfs.iter().zip(&baseline) {
            let selection = select_partitions(&t.tf, &set.scheme)?;
            let select_ms = median_ms(reps, || select_partitions(&t.tf, &set.scheme));
            let combine_ms = median_ms(reps, || combine(set, &selection));
            let update_ms_pdm = median_ms(reps, || {
                let s = select_partitions(&t.tf, &set.scheme).expect("levels checked above");
                combine(set, &s)
            });
            let speedup_ratio = base / update_ms_pdm;
            section.rows.push(UpdateRow {
                tf: t.name.clone(),
                scheme: set.scheme.kind(),
                n,
                selected: selection.len(),
                update_ms_baseline: base,
                update_ms_pdm,
                select_ms,
                combine_ms,
                speedup_ratio,
                pdm_slower: speedup_ratio < 1.0,
            });
        }
    }
    Ok(section)
}
