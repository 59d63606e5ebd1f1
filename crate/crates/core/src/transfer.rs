//! 1D transfer functions baked into per-intensity RGBA lookup tables.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rgba<T> {
    pub r: T,
    pub g: T,
    pub b: T,
    pub a: T,
}

impl<T: Real> Rgba<T> {
    pub fn new(r: T, g: T, b: T, a: T) -> Self {
        Self { r, g, b, a }
    }

    pub fn transparent() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    fn in_unit_range(&self) -> bool {
        [self.r, self.g, self.b, self.a]
            .iter()
            .all(|&c| c >= T::zero() && c <= T::one())
    }

    fn to_f64(self) -> [f64; 4] {
        [self.r, self.g, self.b, self.a].map(Real::to_f64_lossy)
    }

    fn from_f64(c: [f64; 4]) -> Self {
        Self::new(T::lit(c[0]), T::lit(c[1]), T::lit(c[2]), T::lit(c[3]))
    }
}

/// A control point of a piecewise-linear transfer function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlPoint<T> {
    pub intensity: u32,
    pub color: Rgba<T>,
}

impl<T: Real> ControlPoint<T> {
    pub fn new(intensity: u32, r: T, g: T, b: T, a: T) -> Self {
        Self {
            intensity,
            color: Rgba::new(r, g, b, a),
        }
    }
}

/// Intensity to RGBA mapping with one LUT entry per representable intensity.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction<T> {
    bits: u32,
    lut: Vec<Rgba<T>>,
    control_points: Option<Vec<ControlPoint<T>>>,
}

impl<T: Real> TransferFunction<T> {
    /// Wraps an explicit LUT. Its length must be `2^bits` and every channel
    /// must lie in `[0, 1]`.
    pub fn from_lut(bits: u32, lut: Vec<Rgba<T>>) -> Result<Self> {
        check_bits(bits)?;
        if lut.len() != 1usize << bits {
            return Err(Error::InvalidTransferFunction(format!(
                "lut has {} entries, expected {}",
                lut.len(),
                1usize << bits
            )));
        }
        if let Some(i) = lut.iter().position(|c| !c.in_unit_range()) {
            return Err(Error::InvalidTransferFunction(format!(
                "lut entry {i} has a channel outside [0, 1]"
            )));
        }
        Ok(Self {
            bits,
            lut,
            control_points: None,
        })
    }

    /// Fully transparent transfer function.
    pub fn zero(bits: u32) -> Result<Self> {
        check_bits(bits)?;
        Self::from_lut(bits, vec![Rgba::transparent(); 1usize << bits])
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> usize {
        self.lut.len()
    }

    pub fn lut(&self) -> &[Rgba<T>] {
        &self.lut
    }

    pub fn control_points(&self) -> Option<&[ControlPoint<T>]> {
        self.control_points.as_deref()
    }

    #[inline]
    pub fn alpha(&self, intensity: usize) -> T {
        self.lut[intensity].a
    }

    #[inline]
    pub fn is_visible(&self, intensity: usize) -> bool {
        self.lut[intensity].a > T::zero()
    }

    /// Nearest-entry lookup for an interpolated intensity.
    #[inline]
    pub fn lookup(&self, value: T) -> Rgba<T> {
        let max = self.lut.len() - 1;
        let idx = value.round().max(T::zero()).to_usize().unwrap_or(0).min(max);
        self.lut[idx]
    }

    /// Prefix counts over the non-zero-alpha indicator.
    pub fn support(&self) -> AlphaSupport {
        let mut prefix = Vec::with_capacity(self.lut.len() + 1);
        let mut acc = 0u32;
        prefix.push(0);
        for c in &self.lut {
            acc += u32::from(c.a > T::zero());
            prefix.push(acc);
        }
        AlphaSupport { prefix }
    }

    /// Converts the LUT to another scalar type.
    pub fn cast<U: Real>(&self) -> TransferFunction<U> {
        TransferFunction {
            bits: self.bits,
            lut: self.lut.iter().map(|c| Rgba::from_f64(c.to_f64())).collect(),
            control_points: self.control_points.as_ref().map(|cps| {
                cps.iter()
                    .map(|cp| ControlPoint {
                        intensity: cp.intensity,
                        color: Rgba::from_f64(cp.color.to_f64()),
                    })
                    .collect()
            }),
        }
    }

    /// Parses the JSON exchange format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TfFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidTransferFunction(e.to_string()))?;
        file.into_tf()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Serializes to JSON; control points are written when present, the
    /// full LUT otherwise.
    pub fn to_json(&self) -> String {
        let file = match &self.control_points {
            Some(cps) => TfFile::Points {
                bits: self.bits,
                control_points: cps
                    .iter()
                    .map(|cp| {
                        let [r, g, b, a] = cp.color.to_f64();
                        PointJson {
                            i: cp.intensity,
                            r,
                            g,
                            b,
                            a,
                        }
                    })
                    .collect(),
            },
            None => TfFile::Lut {
                bits: self.bits,
                lut: self.lut.iter().map(|c| c.to_f64()).collect(),
            },
        };
        serde_json::to_string(&file).expect("transfer function serializes")
    }
}

/// O(1) "any visible intensity in `[lo, hi]`" queries.
#[derive(Clone, Debug)]
pub struct AlphaSupport {
    prefix: Vec<u32>,
}

impl AlphaSupport {
    #[inline]
    pub fn any_in(&self, lo: usize, hi: usize) -> bool {
        self.prefix[hi + 1] > self.prefix[lo]
    }

    pub fn count(&self) -> usize {
        *self.prefix.last().unwrap_or(&0) as usize
    }

    pub fn levels(&self) -> usize {
        self.prefix.len() - 1
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if (1..=16).contains(&bits) {
        Ok(())
    } else {
        Err(Error::UnsupportedBitDepth(bits))
    }
}

/// Bakes piecewise-linear control points into a LUT.
///
/// Points must be strictly increasing in intensity and pin both ends of the
/// range `[0, 2^bits - 1]`.
pub fn bake_lut<T: Real>(control_points: &[ControlPoint<T>], bits: u32) -> Result<TransferFunction<T>> {
    check_bits(bits)?;
    let last = (1u32 << bits) - 1;
    if control_points.len() < 2 {
        return Err(Error::InvalidTransferFunction(
            "at least two control points required".into(),
        ));
    }
    if control_points.windows(2).any(|w| w[0].intensity >= w[1].intensity) {
        return Err(Error::InvalidTransferFunction(
            "control points must be strictly increasing".into(),
        ));
    }
    if control_points[0].intensity != 0 || control_points[control_points.len() - 1].intensity != last
    {
        return Err(Error::InvalidTransferFunction(format!(
            "control points must start at 0 and end at {last}"
        )));
    }
    if control_points.iter().any(|cp| !cp.color.in_unit_range()) {
        return Err(Error::InvalidTransferFunction(
            "control point channel outside [0, 1]".into(),
        ));
    }
    let mut lut = Vec::with_capacity(last as usize + 1);
    for w in control_points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = T::lit(f64::from(b.intensity - a.intensity));
        for i in a.intensity..b.intensity {
            let t = T::lit(f64::from(i - a.intensity)) / span;
            let mix = |x: T, y: T| x + (y - x) * t;
            lut.push(Rgba::new(
                mix(a.color.r, b.color.r),
                mix(a.color.g, b.color.g),
                mix(a.color.b, b.color.b),
                mix(a.color.a, b.color.a),
            ));
        }
    }
    lut.push(control_points[control_points.len() - 1].color);
    let mut tf = TransferFunction::from_lut(bits, lut)?;
    tf.control_points = Some(control_points.to_vec());
    Ok(tf)
}

/// The synthetic transfer-function families used by the benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Archetype {
    /// Everything but intensity 0 visible.
    Tf1,
    /// Everything visible.
    Tf2,
    /// Upper half of the range visible.
    Tf3,
    /// Second and fourth quarter visible.
    Tf4,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [Archetype::Tf1, Archetype::Tf2, Archetype::Tf3, Archetype::Tf4];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Tf1 => "TF1",
            Archetype::Tf2 => "TF2",
            Archetype::Tf3 => "TF3",
            Archetype::Tf4 => "TF4",
        }
    }

    fn visible(self, i: usize, levels: usize) -> bool {
        let q = levels / 4;
        match self {
            Archetype::Tf1 => i != 0,
            Archetype::Tf2 => true,
            Archetype::Tf3 => i >= levels / 2,
            Archetype::Tf4 => (q..2 * q).contains(&i) || i >= 3 * q,
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidTransferFunction(format!("unknown archetype '{s}'")))
    }
}

/// Builds one of the archetype transfer functions.
pub fn tf_archetype<T: Real>(kind: Archetype, bits: u32) -> Result<TransferFunction<T>> {
    check_bits(bits)?;
    let levels = 1usize << bits;
    let lut = (0..levels)
        .map(|i| {
            if !kind.visible(i, levels) {
                return Rgba::transparent();
            }
            let t = i as f64 / (levels - 1) as f64;
            Rgba::from_f64(ramp_color(t, 0.03 + 0.3 * t))
        })
        .collect();
    TransferFunction::from_lut(bits, lut)
}

/// Warm-to-white color ramp.
fn ramp_color(t: f64, alpha: f64) -> [f64; 4] {
    [
        (0.25 + 0.75 * t).min(1.0),
        (0.1 + 0.8 * t * t).min(1.0),
        (0.45 - 0.35 * t + 0.5 * t * t * t).clamp(0.0, 1.0),
        alpha,
    ]
}

/// A transfer function visible exactly on `[lo, hi]`.
pub fn tf_band<T: Real>(bits: u32, lo: usize, hi: usize, alpha: f64) -> Result<TransferFunction<T>> {
    check_bits(bits)?;
    let levels = 1usize << bits;
    if lo > hi || hi >= levels || !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidTransferFunction(format!(
            "bad band [{lo}, {hi}] alpha {alpha}"
        )));
    }
    let lut = (0..levels)
        .map(|i| {
            if (lo..=hi).contains(&i) {
                Rgba::from_f64(ramp_color(i as f64 / (levels - 1) as f64, alpha))
            } else {
                Rgba::transparent()
            }
        })
        .collect();
    TransferFunction::from_lut(bits, lut)
}

#[derive(Serialize, Deserialize)]
struct PointJson {
    i: u32,
    r: f64,
    g: f64,
    b: f64,
    a: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TfFile {
    Points {
        bits: u32,
        control_points: Vec<PointJson>,
    },
    Lut {
        bits: u32,
        lut: Vec<[f64; 4]>,
    },
}

impl TfFile {
    fn into_tf<T: Real>(self) -> Result<TransferFunction<T>> {
        match self {
            TfFile::Points {
                bits,
                control_points,
            } => {
                let cps: Vec<ControlPoint<T>> = control_points
                    .into_iter()
                    .map(|p| ControlPoint {
                        intensity: p.i,
                        color: Rgba::from_f64([p.r, p.g, p.b, p.a]),
                    })
                    .collect();
                bake_lut(&cps, bits)
            }
            TfFile::Lut { bits, lut } => {
                TransferFunction::from_lut(bits, lut.into_iter().map(Rgba::from_f64).collect())
            }
        }
    }
}
