//! Occupancy maps, the Chebyshev distance transform, and partitioned
//! distance maps.

pub mod distance;
pub mod dump;
pub mod occupancy;
pub mod pdm;

pub use distance::{distance_transform, DistanceMap, MAX_DISTANCE};
pub use occupancy::{
    occupancy_for_partition, occupancy_for_tf, partition_occupancy_from_ranges,
    tf_occupancy_from_ranges, OccupancyMap, OccupancyMode,
};
pub use pdm::{
    build_pdm_set, combine, combine_with, pdm_memory_formula, standard_distance_map, CombineMode,
    PdmSet, MAPS_PER_PASS,
};
