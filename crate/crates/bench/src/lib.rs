//! Benchmark harness: TF-update timings for the standard distance map versus
//! partitioned distance maps, and orbit renders with per-frame counters.
//!
//! Wall-clock numbers are medians over repeated runs after a discarded
//! warmup. Sample counters are deterministic and are the reproducible part
//! of every report.

mod error;
mod report;
mod rotation;
mod scenario;
mod update;

pub use error::{BenchError, Result};
pub use report::{BenchReport, Environment, CSV_FIXED_COLUMNS};
pub use rotation::{run_rotation_bench, rotation_with, FrameRecord, RotationRow};
pub use scenario::{
    fixture_tf, BenchScenario, NamedTf, RotationSpec, VolumeSpec, DEFAULT_PARTITION_COUNTS,
};
pub use update::{run_update_bench, update_with, InitRow, UpdateRow, UpdateSection};

/// Loads the scenario volume once and runs both benchmark sections.
pub fn run_bench(scenario: &BenchScenario) -> Result<BenchReport> {
    scenario.validate()?;
    let volume = scenario.volume.load()?;
    let update = update_with(scenario, &volume)?;
    let rotation = rotation_with(scenario, &volume)?;
    Ok(BenchReport::new(scenario, &volume, update, rotation))
}
