//! Deterministic synthetic 8-bit volumes used by tests and benchmarks.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume;

/// Smallest extent accepted on any axis.
pub const MIN_SYNTH_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Dim core inside a bright, angularly modulated shell; empty outside.
    SphereShell,
    /// Two soft spheres of different intensity over a faint noisy floor.
    TwoSpheres,
    /// Smooth value noise spanning the full 8-bit range.
    Noise,
    /// A few blobs in a background of exactly the minimum intensity.
    BackgroundDominant,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [
        SynthKind::SphereShell,
        SynthKind::TwoSpheres,
        SynthKind::Noise,
        SynthKind::BackgroundDominant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::SphereShell => "sphere_shell",
            SynthKind::TwoSpheres => "two_spheres",
            SynthKind::Noise => "noise",
            SynthKind::BackgroundDominant => "background_dominant",
        }
    }

    fn salt(self) -> u64 {
        match self {
            SynthKind::SphereShell => 0x5348_454c,
            SynthKind::TwoSpheres => 0x5457_4f53,
            SynthKind::Noise => 0x4e4f_4953,
            SynthKind::BackgroundDominant => 0x4247_444d,
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidVolume(format!("unknown synthetic kind '{s}'")))
    }
}

/// Generates a synthetic volume. Identical `(kind, dims, seed)` give
/// bit-identical output.
pub fn synth_volume(kind: SynthKind, dims: [usize; 3], seed: u64) -> Result<Volume> {
    if dims.iter().any(|&d| d < MIN_SYNTH_DIM) {
        return Err(Error::InvalidVolume(format!(
            "synthetic dims {dims:?} below minimum {MIN_SYNTH_DIM}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind.salt());
    let voxels = match kind {
        SynthKind::SphereShell => sphere_shell(dims, &mut rng),
        SynthKind::TwoSpheres => two_spheres(dims, &mut rng),
        SynthKind::Noise => value_noise(dims, &mut rng),
        SynthKind::BackgroundDominant => background_dominant(dims, &mut rng),
    };
    Volume::new(dims, 8, voxels, [1.0; 3])
}

fn center(dims: [usize; 3]) -> [f64; 3] {
    dims.map(|d| (d as f64 - 1.0) * 0.5)
}

fn for_each_voxel(dims: [usize; 3], mut f: impl FnMut([f64; 3]) -> u16) -> Vec<u16> {
    let mut out = Vec::with_capacity(dims.iter().product());
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                out.push(f([x as f64, y as f64, z as f64]));
            }
        }
    }
    out
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn sphere_shell(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Vec<u16> {
    let c = center(dims);
    let radius = 0.46 * dims.iter().copied().min().unwrap_or(0) as f64;
    let lobes = rng.random_range(2..=5) as f64;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    for_each_voxel(dims, |p| {
        let r = dist(p, c) / radius;
        let jitter = rng.random_range(-4i32..=4);
        let base = if r > 0.9 {
            0
        } else if r >= 0.62 {
            let theta = (p[1] - c[1]).atan2(p[0] - c[0]);
            let phi = (p[2] - c[2]) / (radius * r).max(1e-9);
            let m = 0.5 + 0.25 * (lobes * theta + phase).sin() + 0.25 * phi.clamp(-1.0, 1.0);
            150 + (95.0 * m) as i32
        } else {
            36
        };
        if base == 0 {
            0
        } else {
            (base + jitter).clamp(1, 255) as u16
        }
    })
}

fn two_spheres(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Vec<u16> {
    let m = dims.iter().copied().min().unwrap_or(0) as f64;
    let mut spheres = Vec::new();
    for level in [92.0, 208.0] {
        let r = rng.random_range(0.16..0.24) * m;
        let c = [0, 1, 2].map(|a| rng.random_range(r..dims[a] as f64 - 1.0 - r));
        spheres.push((c, r, level));
    }
    for_each_voxel(dims, |p| {
        let mut v = rng.random_range(0.0..12.0);
        for &(c, r, level) in &spheres {
            let t = 1.0 - dist(p, c) / r;
            if t > 0.0 {
                v = f64::max(v, level * (0.55 + 0.45 * t));
            }
        }
        v.round().clamp(0.0, 255.0) as u16
    })
}

fn value_noise(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Vec<u16> {
    const CELL: f64 = 8.0;
    let lattice = dims.map(|d| (d as f64 / CELL).ceil() as usize + 2);
    let values: Vec<f64> = (0..lattice.iter().product::<usize>())
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    let at = |i: usize, j: usize, k: usize| values[i + lattice[0] * (j + lattice[1] * k)];
    let raw = {
        let mut raw = Vec::with_capacity(dims.iter().product());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let q = [x as f64 / CELL, y as f64 / CELL, z as f64 / CELL];
                    let i = q.map(|v| v.floor() as usize);
                    let f = [0, 1, 2].map(|a| {
                        let t = q[a] - i[a] as f64;
                        t * t * (3.0 - 2.0 * t)
                    });
                    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
                    let c00 = lerp(at(i[0], i[1], i[2]), at(i[0] + 1, i[1], i[2]), f[0]);
                    let c10 = lerp(at(i[0], i[1] + 1, i[2]), at(i[0] + 1, i[1] + 1, i[2]), f[0]);
                    let c01 = lerp(at(i[0], i[1], i[2] + 1), at(i[0] + 1, i[1], i[2] + 1), f[0]);
                    let c11 = lerp(
                        at(i[0], i[1] + 1, i[2] + 1),
                        at(i[0] + 1, i[1] + 1, i[2] + 1),
                        f[0],
                    );
                    raw.push(lerp(lerp(c00, c10, f[1]), lerp(c01, c11, f[1]), f[2]));
                }
            }
        }
        raw
    };
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    raw.into_iter()
        .map(|v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u16)
        .collect()
}

fn background_dominant(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Vec<u16> {
    let m = dims.iter().copied().min().unwrap_or(0) as f64;
    let count = rng.random_range(4..=7);
    let blobs: Vec<([f64; 3], f64, f64)> = (0..count)
        .map(|_| {
            let r = rng.random_range(0.08..0.16) * m;
            let c = [0, 1, 2].map(|a| rng.random_range(0.0..dims[a] as f64));
            let peak = rng.random_range(120.0..255.0);
            (c, r, peak)
        })
        .collect();
    for_each_voxel(dims, |p| {
        let mut v: f64 = 0.0;
        for &(c, r, peak) in &blobs {
            let t = 1.0 - dist(p, c) / r;
            if t > 0.0 {
                v = v.max(1.0 + (peak - 1.0) * t);
            }
        }
        v.round().clamp(0.0, 255.0) as u16
    })
}
