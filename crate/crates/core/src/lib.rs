//! Software volume ray casting with empty space skipping driven by
//! intensity-partitioned distance maps.
//!
//! The intensity range is split into partitions, and a Chebyshev distance
//! map over a block grid is precomputed for each one. When the transfer
//! function changes, the maps of the partitions it touches are folded with
//! an element-wise minimum, which yields a conservative distance map in
//! time linear in the block count instead of a fresh distance transform.
//!
//! Rendering code is generic over the scalar type via [`Real`]; the aliases
//! below pick `f64` unless the name says `F32`.

pub mod accel;
pub mod error;
pub mod geom;
pub mod num;
pub mod partition;
pub mod render;
pub mod synth;
pub mod transfer;
pub mod volume;

pub use accel::{
    build_pdm_set, combine, combine_with, distance_transform, occupancy_for_tf,
    standard_distance_map, CombineMode, DistanceMap, OccupancyMap, OccupancyMode, PdmSet,
};
pub use error::{Error, Result};
pub use num::Real;
pub use partition::{
    build_scheme, scheme_uniform, scheme_with_min_special, select_partitions, Partition,
    PartitionScheme, PartitionSelection, SchemeKind,
};
pub use render::{Accel, EssMode, Framebuffer, RenderStats};
pub use synth::{synth_volume, SynthKind};
pub use transfer::{bake_lut, tf_archetype, tf_band, Archetype};
pub use volume::{block_min_max, load_raw, BlockGrid, Volume, VolumeMeta, DEFAULT_BLOCK_SIZE};

pub type Vec3 = geom::Vec3<f64>;
pub type Vec3F32 = geom::Vec3<f32>;
pub type Camera = render::Camera<f64>;
pub type CameraF32 = render::Camera<f32>;
pub type RenderSettings = render::RenderSettings<f64>;
pub type RenderSettingsF32 = render::RenderSettings<f32>;
pub type TransferFunction = transfer::TransferFunction<f64>;
pub type TransferFunctionF32 = transfer::TransferFunction<f32>;
pub type Rgba = transfer::Rgba<f64>;
pub type ControlPoint = transfer::ControlPoint<f64>;
