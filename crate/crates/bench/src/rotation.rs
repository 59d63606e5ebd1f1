use pdm_core::accel::{combine, distance_transform, occupancy_for_tf, DistanceMap, PdmSet};
use pdm_core::render::render;
use pdm_core::{
    build_pdm_set, build_scheme, select_partitions, Accel, BlockGrid, Camera, EssMode,
    RenderSettings, RenderStats, SchemeKind, Volume,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::BenchScenario;
use crate::update::build_sets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub angle: f64,
    pub stats: RenderStats,
}

/// Orbit results for one TF and one skipping configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationRow {
    pub tf: String,
    pub ess_mode: EssMode,
    /// Partition scheme and count, for `pdm` rows.
    pub scheme: Option<SchemeKind>,
    pub n: Option<usize>,
    pub frames: Vec<FrameRecord>,
    pub mean_samples_evaluated: f64,
    pub mean_frame_ms: f64,
    /// Per-frame budget implied by the nominal orbit duration.
    pub frame_budget_ms: f64,
}

impl RotationRow {
    pub fn total_samples_evaluated(&self) -> u64 {
        self.frames.iter().map(|f| f.stats.samples_evaluated).sum()
    }
}

/// Renders the orbit for every TF and skipping configuration.
pub fn run_rotation_bench(scenario: &BenchScenario) -> Result<Vec<RotationRow>> {
    scenario.validate()?;
    rotation_with(scenario, &scenario.volume.load()?)
}

pub fn rotation_with(scenario: &BenchScenario, volume: &Volume) -> Result<Vec<RotationRow>> {
    let grid = BlockGrid::for_volume(volume, scenario.block_size)?;
    let mut sets = build_sets(scenario, volume, &grid)?;
    if scenario.granularity_check {
        let rho_min = u32::from(volume.intensity_range().0);
        for kind in [SchemeKind::Uniform, SchemeKind::MinSpecial] {
            if !sets.iter().any(|s| s.len() == 32 && s.scheme.kind() == kind) {
                let scheme = build_scheme(kind, 32, volume.bits(), rho_min)?;
                sets.push(build_pdm_set(volume, &grid, &scheme, scenario.occupancy)?);
            }
        }
    }
    let camera = Camera::framing(volume, 0.0, scenario.elevation);

    let mut rows = Vec::new();
    for t in &scenario.tfs {
        let occ = occupancy_for_tf(volume, &grid, &t.tf, scenario.occupancy);
        let dist = distance_transform(&occ);
        let dprimes: Vec<(&PdmSet, DistanceMap)> = sets
            .iter()
            .map(|s| Ok((s, combine(s, &select_partitions(&t.tf, &s.scheme)?)?)))
            .collect::<Result<_>>()?;

        let mut configs: Vec<(Accel, Option<&PdmSet>)> =
            vec![(Accel::None, None), (Accel::Block(&occ), None), (Accel::Distance(&dist), None)];
        configs.extend(dprimes.iter().map(|(s, d)| (Accel::Pdm(d), Some(*s))));

        for (accel, set) in configs {
            let settings = RenderSettings {
                ess_mode: accel.mode(),
                ..scenario.render
            };
            let frames = (0..scenario.rotation.frames)
                .map(|i| {
                    let angle = scenario.rotation.angle(i);
                    let (_, stats) = render(volume, &t.tf, &camera.with_angle(angle), &settings, accel)?;
                    Ok(FrameRecord { frame: i, angle, stats })
                })
                .collect::<Result<Vec<_>>>()?;
            let count = frames.len() as f64;
            rows.push(RotationRow {
                tf: t.name.clone(),
                ess_mode: accel.mode(),
                scheme: set.map(|s| s.scheme.kind()),
                n: set.map(PdmSet::len),
                mean_samples_evaluated: frames.iter().map(|f| f.stats.samples_evaluated as f64).sum::<f64>()
                    / count,
                mean_frame_ms: frames.iter().map(|f| f.stats.wall_time * 1e3).sum::<f64>() / count,
                frame_budget_ms: scenario.rotation.duration_s * 1e3 / count,
                frames,
            });
        }
    }
    Ok(rows)
}
