use pdm_bench::{
    fixture_tf, run_bench, run_rotation_bench, run_update_bench, BenchScenario, NamedTf, RotationSpec,
    VolumeSpec, CSV_FIXED_COLUMNS,
};
use pdm_core::{tf_archetype, tf_band, Archetype, EssMode, RenderSettings, SchemeKind, SynthKind};

fn small(kind: SynthKind, tfs: Vec<NamedTf>) -> BenchScenario {
    let mut s = BenchScenario::desk(VolumeSpec::Synth { kind, dims: [40, 36, 32], seed: 3 }, 8).unwrap();
    s.tfs = tfs;
    s.partition_counts = vec![16, 64];
    s.repetitions = 3;
    s.render = RenderSettings { width: 40, height: 40, ..Default::default() };
    s.rotation = RotationSpec { frames: 2, ..Default::default() };
    s
}

fn archetype(a: Archetype) -> NamedTf {
    NamedTf::new(a.name(), tf_archetype(a, 8).unwrap())
}

#[test]
fn desk_scenario_lists_six_functions() {
    let s = BenchScenario::desk(VolumeSpec::Synth { kind: SynthKind::Noise, dims: [16; 3], seed: 1 }, 8).unwrap();
    let names: Vec<_> = s.tfs.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["TF1", "TF2", "TF3", "TF4", "TF5", "TF6"]);
    assert_eq!(s.partition_counts, [16, 32, 64, 128, 256]);
    assert!(fixture_tf("tf6").unwrap().alpha(0) == 0.0 && fixture_tf("tf6").unwrap().alpha(3) > 0.0);
    assert!(fixture_tf("TF7").is_none());
}

#[test]
fn invalid_scenarios_are_rejected() {
    let mut s = small(SynthKind::Noise, vec![archetype(Archetype::Tf1)]);
    s.partition_counts.clear();
    assert!(run_update_bench(&s).is_err());
    let mut s = small(SynthKind::Noise, vec![archetype(Archetype::Tf1)]);
    s.rotation.frames = 0;
    assert!(run_rotation_bench(&s).is_err());
}

#[test]
fn update_rows_are_consistent() {
    let s = small(
        SynthKind::BackgroundDominant,
        vec![archetype(Archetype::Tf2), archetype(Archetype::Tf3), NamedTf::new("zero", pdm_core::TransferFunction::zero(8).unwrap())],
    );
    let u = run_update_bench(&s).unwrap();
    assert_eq!(u.init.len(), 2);
    assert_eq!(u.init[0].memory_bytes, 16 * 10 * 9 * 8);
    assert_eq!(u.rows.len(), 6);
    for r in &u.rows {
        assert!(r.update_ms_baseline > 0.0 && r.update_ms_pdm > 0.0 && r.select_ms > 0.0 && r.combine_ms > 0.0);
        assert_eq!(r.speedup_ratio, r.update_ms_baseline / r.update_ms_pdm);
        assert_eq!(r.pdm_slower, r.speedup_ratio < 1.0);
        match r.tf.as_str() {
            "TF2" => assert_eq!(r.selected, r.n),
            "zero" => assert_eq!(r.selected, 0),
            _ => {}
        }
    }
}

#[test]
fn one_frame_gives_one_entry_per_configuration() {
    let mut s = small(SynthKind::SphereShell, vec![archetype(Archetype::Tf3)]);
    s.rotation.frames = 1;
    s.granularity_check = false;
    let rows = run_rotation_bench(&s).unwrap();
    // none, block, distance, pdm for n = 16 and 64
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.frames.len() == 1));
    assert_eq!(rows.iter().filter(|r| r.ess_mode == EssMode::Pdm).count(), 2);
}

#[test]
fn counters_are_reproducible_and_ordered() {
    let s = small(SynthKind::SphereShell, vec![archetype(Archetype::Tf3), archetype(Archetype::Tf4)]);
    let a = run_bench(&s).unwrap();
    let b = run_bench(&s).unwrap();
    assert_eq!(a.rotation.len(), b.rotation.len());
    for (x, y) in a.rotation.iter().zip(&b.rotation) {
        for (fx, fy) in x.frames.iter().zip(&y.frames) {
            assert_eq!(fx.stats.counters(), fy.stats.counters());
        }
    }
    for tf in ["TF3", "TF4"] {
        let rows: Vec<_> = a.rotation.iter().filter(|r| r.tf == tf).collect();
        let get = |m: EssMode| rows.iter().find(|r| r.ess_mode == m).unwrap().total_samples_evaluated();
        let block = get(EssMode::Block);
        let dist = get(EssMode::Distance);
        assert!(block <= get(EssMode::None));
        for r in rows.iter().filter(|r| r.ess_mode == EssMode::Pdm) {
            let pdm = r.total_samples_evaluated();
            assert!(dist <= pdm && pdm <= block, "{tf} n={:?}: {dist} {pdm} {block}", r.n);
        }
    }
}

#[test]
fn upper_half_function_skips_on_sphere_shell() {
    let upper = NamedTf::new("upper", tf_band(8, 128, 255, 0.2).unwrap());
    let s = small(SynthKind::SphereShell, vec![upper]);
    let rows = run_rotation_bench(&s).unwrap();
    let none = rows.iter().find(|r| r.ess_mode == EssMode::None).unwrap();
    let pdm = rows
        .iter()
        .find(|r| r.ess_mode == EssMode::Pdm && r.n == Some(64) && r.scheme == Some(SchemeKind::Uniform))
        .unwrap();
    assert!(pdm.mean_samples_evaluated < none.mean_samples_evaluated);
}

#[test]
fn background_partition_rescues_thirty_two_partitions() {
    let s = small(SynthKind::BackgroundDominant, vec![archetype(Archetype::Tf1)]);
    let rows = run_rotation_bench(&s).unwrap();
    let at32 = |k: SchemeKind| {
        rows.iter()
            .find(|r| r.n == Some(32) && r.scheme == Some(k))
            .unwrap()
            .mean_samples_evaluated
    };
    assert!(at32(SchemeKind::MinSpecial) <= at32(SchemeKind::Uniform));
}

#[test]
fn csv_header_and_rows() {
    let s = small(SynthKind::TwoSpheres, vec![archetype(Archetype::Tf3), archetype(Archetype::Tf4)]);
    let report = run_bench(&s).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    let expected: Vec<String> = CSV_FIXED_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain(["pdm_16".to_string(), "pdm_64".to_string()])
        .collect();
    assert_eq!(header, expected.join(","));
    let kinds: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(
        kinds,
        ["one_time_init_ms", "update_ms", "update_ms", "samples_evaluated_mean", "samples_evaluated_mean"]
    );
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(json["environment"]["threads"].as_u64().unwrap() >= 1);
    assert_eq!(json["size"], serde_json::json!([40, 36, 32]));
}

#[test]
fn fully_visible_function_hits_baseline_fast_path() {
    let mut s = small(SynthKind::BackgroundDominant, vec![archetype(Archetype::Tf2), archetype(Archetype::Tf3)]);
    s.volume = VolumeSpec::Synth { kind: SynthKind::BackgroundDominant, dims: [96; 3], seed: 5 };
    s.partition_counts = vec![64];
    s.repetitions = 7;
    let u = run_update_bench(&s).unwrap();
    let base = |tf: &str| u.rows.iter().find(|r| r.tf == tf).unwrap().update_ms_baseline;
    assert!(base("TF2") <= base("TF3"), "{} vs {}", base("TF2"), base("TF3"));
}
