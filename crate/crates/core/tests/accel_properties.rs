use pdm_core::accel::{
    combine, combine_with, distance_transform, occupancy_for_tf, standard_distance_map,
    CombineMode, DistanceMap, OccupancyMap,
};
use pdm_core::{
    build_pdm_set, scheme_uniform, scheme_with_min_special, select_partitions, BlockGrid,
    OccupancyMode, PartitionScheme, PartitionSelection, Rgba, TransferFunction, Volume,
};
use proptest::prelude::*;

fn brute_distance(occ: &OccupancyMap) -> Vec<u8> {
    let g = occ.grid;
    let filled: Vec<[usize; 3]> = (0..g.block_count())
        .filter(|&i| occ.occupied[i])
        .map(|i| g.coords(i))
        .collect();
    (0..g.block_count())
        .map(|i| {
            let c = g.coords(i);
            filled
                .iter()
                .map(|f| (0..3).map(|a| c[a].abs_diff(f[a])).max().unwrap())
                .min()
                .map_or(255, |d| d.min(255) as u8)
        })
        .collect()
}

fn occupancy() -> impl Strategy<Value = OccupancyMap> {
    (1usize..=10, 1usize..=10, 1usize..=10, 0.0f64..0.3).prop_flat_map(|(x, y, z, p)| {
        let grid = BlockGrid::new([x, y, z], 1).unwrap();
        proptest::collection::vec(proptest::bool::weighted(p), x * y * z)
            .prop_map(move |occupied| OccupancyMap { grid, occupied })
    })
}

/// Mostly-zero 8-bit volumes with a sprinkling of arbitrary values.
fn volume() -> impl Strategy<Value = Volume> {
    (4usize..=20, 4usize..=20, 4usize..=20).prop_flat_map(|(x, y, z)| {
        proptest::collection::vec(prop_oneof![4 => Just(0u16), 1 => 0u16..256], x * y * z)
            .prop_map(move |v| Volume::new([x, y, z], 8, v, [1.0; 3]).unwrap())
    })
}

/// Transfer function visible on up to three random bands.
fn transfer_function() -> impl Strategy<Value = TransferFunction> {
    proptest::collection::vec((0usize..256, 0usize..64), 0..=3).prop_map(|bands| {
        let lut = (0..256)
            .map(|i| {
                let on = bands.iter().any(|&(lo, w)| i >= lo && i <= lo + w);
                Rgba::new(0.5, 0.5, 0.5, if on { 0.25 } else { 0.0 })
            })
            .collect();
        TransferFunction::from_lut(8, lut).unwrap()
    })
}

fn scheme() -> impl Strategy<Value = PartitionScheme> {
    (prop::sample::select(vec![4usize, 16, 64]), any::<bool>()).prop_map(|(n, special)| {
        if special {
            scheme_with_min_special(n, 8, 0).unwrap()
        } else {
            scheme_uniform(n, 8).unwrap()
        }
    })
}

fn mode() -> impl Strategy<Value = OccupancyMode> {
    prop_oneof![Just(OccupancyMode::Voxel), Just(OccupancyMode::RangeApron)]
}

fn block_size() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![1usize, 2, 4])
}

fn le(a: &DistanceMap, b: &DistanceMap) -> bool {
    a.dist.iter().zip(&b.dist).all(|(x, y)| x <= y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chamfer_equals_brute_force(occ in occupancy()) {
        prop_assert_eq!(distance_transform(&occ).dist, brute_distance(&occ));
    }

    #[test]
    fn distance_is_one_lipschitz(occ in occupancy()) {
        let d = distance_transform(&occ);
        let g = d.grid;
        for i in 0..g.block_count() {
            let [x, y, z] = g.coords(i);
            for (dx, dy, dz) in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)] {
                let (nx, ny, nz) = (x + dx, y + dy, z + dz);
                if nx < g.bdims[0] && ny < g.bdims[1] && nz < g.bdims[2] {
                    let (a, b) = (d.get(x, y, z), d.get(nx, ny, nz));
                    prop_assert!(a == 255 || b == 255 || a.abs_diff(b) <= 1);
                }
            }
            prop_assert_eq!(d.dist[i] == 0, occ.occupied[i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn combined_map_never_exceeds_true_map(
        v in volume(), tf in transfer_function(), s in scheme(), m in mode(), b in block_size()
    ) {
        let grid = BlockGrid::for_volume(&v, b).unwrap();
        let set = build_pdm_set(&v, &grid, &s, m).unwrap();
        let dprime = combine(&set, &select_partitions(&tf, &s).unwrap()).unwrap();
        let d = standard_distance_map(&v, &grid, &tf, m);
        prop_assert!(le(&dprime, &d));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn aligned_support_is_exact(
        v in volume(), s in scheme(), picks in proptest::collection::vec(any::<bool>(), 64),
        m in mode(), b in block_size()
    ) {
        let chosen = PartitionSelection::new((1..=s.len()).filter(|&p| picks[p - 1]));
        let lut = (0..256u32)
            .map(|i| {
                let p = s.partition_of(i).unwrap();
                Rgba::new(1.0, 1.0, 1.0, if chosen.contains(p) { 0.5 } else { 0.0 })
            })
            .collect();
        let tf = TransferFunction::from_lut(8, lut).unwrap();
        prop_assert_eq!(&select_partitions(&tf, &s).unwrap(), &chosen);
        let grid = BlockGrid::for_volume(&v, b).unwrap();
        let set = build_pdm_set(&v, &grid, &s, m).unwrap();
        let dprime = combine(&set, &chosen).unwrap();
        prop_assert_eq!(dprime, standard_distance_map(&v, &grid, &tf, m));
    }

    #[test]
    fn combine_is_antitone_in_selection(
        v in volume(), picks in proptest::collection::vec(0usize..3, 16), k in 1usize..=8
    ) {
        let s = scheme_uniform(16, 8).unwrap();
        let grid = BlockGrid::for_volume(&v, 4).unwrap();
        let set = build_pdm_set(&v, &grid, &s, OccupancyMode::RangeApron).unwrap();
        let small = PartitionSelection::new((1..=16).filter(|&p| picks[p - 1] == 2));
        let big = PartitionSelection::new((1..=16).filter(|&p| picks[p - 1] >= 1));
        prop_assert!(small.is_subset(&big));
        let (ds, db) = (combine(&set, &small).unwrap(), combine(&set, &big).unwrap());
        prop_assert!(le(&db, &ds));
        prop_assert_eq!(combine_with(&set, &big, CombineMode::Chunked(k)).unwrap(), db);
        if small.is_empty() {
            prop_assert!(ds.dist.iter().all(|&d| d == 255));
        }
    }

    #[test]
    fn finer_schemes_give_larger_maps(v in volume(), tf in transfer_function(), m in mode()) {
        // uniform power-of-two schemes are nested, so refining can only
        // drop intensities from the selected union
        let grid = BlockGrid::for_volume(&v, 2).unwrap();
        let mut prev: Option<DistanceMap> = None;
        for n in [4, 16, 64, 256] {
            let s = scheme_uniform(n, 8).unwrap();
            let set = build_pdm_set(&v, &grid, &s, m).unwrap();
            let d = combine(&set, &select_partitions(&tf, &s).unwrap()).unwrap();
            if let Some(p) = &prev {
                prop_assert!(le(p, &d));
            }
            prev = Some(d);
        }
        let exact = distance_transform(&occupancy_for_tf(&v, &grid, &tf, m));
        prop_assert!(le(prev.as_ref().unwrap(), &exact));
    }
}
