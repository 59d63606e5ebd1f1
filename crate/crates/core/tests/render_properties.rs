use std::path::PathBuf;

use pdm_core::accel::{combine, distance_transform, occupancy_for_tf, OccupancyMap};
use pdm_core::render::{decode_png, encode_png, ess_advance, march, render, SampleRay};
use pdm_core::{
    build_pdm_set, scheme_uniform, scheme_with_min_special, select_partitions, PartitionScheme, synth_volume, tf_archetype, tf_band, Accel,
    Archetype, BlockGrid, Camera, OccupancyMode, RenderSettings, SynthKind, TransferFunction,
    Vec3, Volume,
};
use proptest::prelude::*;

fn block_of(p: Vec3, grid: &BlockGrid) -> [usize; 3] {
    let p = p.to_array();
    [0, 1, 2].map(|a| {
        let v = p[a].floor().max(0.0) as usize;
        (v.min(grid.dims[a] - 1) / grid.block_size).min(grid.bdims[a] - 1)
    })
}

fn random_occupancy() -> impl Strategy<Value = OccupancyMap> {
    (2usize..=12, 2usize..=12, 2usize..=12, 0.0f64..0.15).prop_flat_map(|(x, y, z, p)| {
        let grid = BlockGrid::new([4 * x - 1, 4 * y, 4 * z - 2], 4).unwrap();
        let n = grid.block_count();
        proptest::collection::vec(proptest::bool::weighted(p), n)
            .prop_map(move |occupied| OccupancyMap { grid, occupied })
    })
}

fn unit_dir() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0usize..4).prop_filter_map(
        "degenerate direction",
        |(x, y, z, zero_axis)| {
            // exercise axis-parallel rays as well
            let mut d = [x, y, z];
            if zero_axis < 3 {
                d[zero_axis] = 0.0;
            }
            let v = Vec3::new(d[0], d[1], d[2]);
            (v.length() > 1e-3).then_some(v)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    /// Every sample jumped over lies in an empty block, and progress is strict.
    #[test]
    fn skips_only_cross_empty_blocks(
        occ in random_occupancy(), dir in unit_dir(), o in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        step in prop::sample::select(vec![0.5f64, 0.37, 1.0])
    ) {
        let grid = occ.grid;
        let dm = distance_transform(&occ);
        let dims = grid.dims;
        let target = Vec3::new(o.0 * (dims[0] - 1) as f64, o.1 * (dims[1] - 1) as f64, o.2 * (dims[2] - 1) as f64);
        let origin = target - dir * 200.0;
        let Some(ray) = SampleRay::through_volume(origin, dir, dims, step) else {
            return Ok(());
        };
        for accel in [Accel::Block(&occ), Accel::Distance(&dm)] {
            let mut k = 0;
            while k < ray.samples {
                let next = ess_advance(&accel, block_of(ray.position(k), &grid), &ray, k);
                prop_assert!(next > k && next <= ray.samples);
                for j in k..next {
                    if j > k || next > k + 1 {
                        let [x, y, z] = block_of(ray.position(j), &grid);
                        prop_assert!(!occ.get(x, y, z), "skipped occupied sample {} of {}", j, ray.samples);
                    }
                }
                k = next;
            }
        }
    }
}

struct Scene {
    volume: Volume,
    tf: TransferFunction,
}

fn render_all(scene: &Scene, camera: &Camera, scheme: &PartitionScheme, size: usize) -> Vec<(Vec<u8>, pdm_core::RenderStats)> {
    let v = &scene.volume;
    let grid = BlockGrid::for_volume(v, 4).unwrap();
    let occ = occupancy_for_tf(v, &grid, &scene.tf, OccupancyMode::RangeApron);
    let d = distance_transform(&occ);
    let set = build_pdm_set(v, &grid, scheme, OccupancyMode::RangeApron).unwrap();
    let dprime = combine(&set, &select_partitions(&scene.tf, scheme).unwrap()).unwrap();
    [Accel::None, Accel::Block(&occ), Accel::Distance(&d), Accel::Pdm(&dprime)]
        .into_iter()
        .map(|accel| {
            let settings = RenderSettings {
                width: size,
                height: size,
                ess_mode: accel.mode(),
                ..Default::default()
            };
            let (fb, stats) = render(v, &scene.tf, camera, &settings, accel).unwrap();
            (fb.pixels, stats)
        })
        .collect()
}

#[test]
fn all_skipping_modes_render_identical_pixels() {
    // a dedicated partition for the background value keeps TF1-like
    // functions from selecting the background
    let special = scheme_with_min_special(64, 8, 0).unwrap();
    let mut cases = 0;
    for (i, kind) in SynthKind::ALL.into_iter().enumerate() {
        let volume = synth_volume(kind, [40, 44, 36], 11 + i as u64).unwrap();
        for tf in [
            tf_archetype(Archetype::Tf1, 8).unwrap(),
            tf_archetype(Archetype::Tf4, 8).unwrap(),
            tf_band(8, 140, 170, 0.3).unwrap(),
        ] {
            let scene = Scene { volume: volume.clone(), tf };
            for angle in [0.4, 2.9] {
                let cam = Camera::framing(&scene.volume, angle, 0.3);
                let out = render_all(&scene, &cam, &special, 48);
                for (pixels, stats) in &out[1..] {
                    assert_eq!(pixels, &out[0].0, "{kind} angle {angle}");
                    assert_eq!(stats.total_samples(), out[0].1.total_samples());
                    assert_eq!(stats.rays, 48 * 48);
                }
                let [none, block, dist, pdm] = [0, 1, 2, 3].map(|m| out[m].1.samples_evaluated);
                assert!(block <= none && dist <= none && pdm <= none);
                // On noise nearly every block is occupied and the coarser
                // partition occupancy can cost a few samples over block ESS.
                if kind != SynthKind::Noise {
                    assert!(dist <= pdm && pdm <= block, "{kind}: {dist} {pdm} {block} {none}");
                }
                cases += 1;
            }
        }
    }
    assert_eq!(cases, 24);
}

#[test]
fn single_precision_renders_are_also_lossless() {
    let volume = synth_volume(SynthKind::TwoSpheres, [33, 40, 29], 4).unwrap();
    let tf: pdm_core::TransferFunctionF32 = tf_archetype(Archetype::Tf3, 8).unwrap();
    let grid = BlockGrid::for_volume(&volume, 4).unwrap();
    let scheme = scheme_uniform(32, 8).unwrap();
    let set = build_pdm_set(&volume, &grid, &scheme, OccupancyMode::RangeApron).unwrap();
    let dprime = combine(&set, &select_partitions(&tf, &scheme).unwrap()).unwrap();
    let cam = pdm_core::CameraF32::framing(&volume, 1.1, -0.2);
    let mut settings = pdm_core::RenderSettingsF32 { width: 40, height: 32, ..Default::default() };
    let (plain, _) = render(&volume, &tf, &cam, &settings, Accel::None).unwrap();
    settings.ess_mode = pdm_core::EssMode::Pdm;
    let (fast, stats) = render(&volume, &tf, &cam, &settings, Accel::Pdm(&dprime)).unwrap();
    assert_eq!(plain, fast);
    assert!(stats.samples_skipped > 0);
}

#[test]
fn accumulated_alpha_stays_in_unit_interval() {
    let volume = synth_volume(SynthKind::Noise, [24; 3], 8).unwrap();
    let grid = BlockGrid::for_volume(&volume, 4).unwrap();
    let tf: TransferFunction = tf_archetype(Archetype::Tf2, 8).unwrap();
    for ert_enabled in [true, false] {
        let settings = RenderSettings { ert_enabled, ..Default::default() };
        for i in 0..50 {
            let t = i as f64 * 0.37;
            let dir = Vec3::new(t.cos(), 0.3 * t.sin(), t.sin());
            let Some(ray) = SampleRay::through_volume(Vec3::splat(11.5) - dir * 50.0, dir, [24; 3], 0.5) else {
                continue;
            };
            let r = march(&volume, &tf, &settings, &Accel::None, &grid, &ray);
            assert!((0.0..=1.0).contains(&r.alpha));
            assert_eq!(r.stats.total_samples(), ray.samples as u64);
            if ert_enabled && r.stats.ert_terminations == 1 {
                assert!(r.alpha >= 0.98);
            }
        }
    }
}

#[test]
fn aligned_function_makes_pdm_and_distance_counters_equal() {
    let volume = synth_volume(SynthKind::SphereShell, [48; 3], 2).unwrap();
    // 64 uniform partitions of width 4: [128, 191] is exactly partitions 33..=48
    let tf: TransferFunction = tf_band(8, 128, 191, 0.2).unwrap();
    let scene = Scene { volume, tf };
    let cam = Camera::framing(&scene.volume, 0.8, 0.2);
    let out = render_all(&scene, &cam, &scheme_uniform(64, 8).unwrap(), 48);
    assert_eq!(out[2].1.counters(), out[3].1.counters());
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden_two_spheres.png")
}

fn golden_scene() -> (Scene, Camera) {
    let volume = synth_volume(SynthKind::TwoSpheres, [48, 40, 44], 7).unwrap();
    let tf = tf_archetype(Archetype::Tf3, 8).unwrap();
    let cam = Camera::framing(&volume, 0.6, 0.25);
    (Scene { volume, tf }, cam)
}

/// Regenerate with `UPDATE_GOLDEN=1 cargo test -p pdm-core --test render_properties`.
#[test]
fn renders_match_committed_golden_image() {
    let (scene, cam) = golden_scene();
    let out = render_all(&scene, &cam, &scheme_uniform(32, 8).unwrap(), 96);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let fb = pdm_core::Framebuffer { width: 96, height: 96, pixels: out[0].0.clone() };
        std::fs::write(golden_path(), encode_png(&fb).unwrap()).unwrap();
    }
    let golden = decode_png(&std::fs::read(golden_path()).expect("golden image present")).unwrap();
    assert_eq!((golden.width, golden.height), (96, 96));
    assert!(!golden.is_black());
    for (pixels, _) in &out {
        assert!(pixels == &golden.pixels);
    }
}
