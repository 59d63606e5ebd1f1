//! Intensity partition schemes and TF-driven partition selection.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::transfer::TransferFunction;

/// Inclusive intensity subrange `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub lo: u32,
    pub hi: u32,
}

impl Partition {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidScheme(format!("empty partition [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        self.lo <= v && v <= self.hi
    }

    #[inline]
    pub fn overlaps(&self, lo: u32, hi: u32) -> bool {
        self.lo <= hi && lo <= self.hi
    }

    pub fn width(&self) -> u32 {
        self.hi - self.lo + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Uniform,
    MinSpecial,
    Custom,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Uniform => "uniform",
            SchemeKind::MinSpecial => "min_special",
            SchemeKind::Custom => "custom",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "uniform" => Ok(SchemeKind::Uniform),
            "min_special" => Ok(SchemeKind::MinSpecial),
            other => Err(Error::InvalidScheme(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Contiguous, non-overlapping partitions covering `[0, 2^bits - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionScheme {
    kind: SchemeKind,
    bits: u32,
    partitions: Vec<Partition>,
}

impl PartitionScheme {
    /// Validates an explicit list of partitions.
    pub fn from_partitions(bits: u32, partitions: Vec<Partition>) -> Result<Self> {
        check_bits(bits)?;
        let last = (1u32 << bits) - 1;
        if partitions.is_empty() {
            return Err(Error::InvalidScheme("no partitions".into()));
        }
        if partitions[0].lo != 0 || partitions[partitions.len() - 1].hi != last {
            return Err(Error::InvalidScheme(format!("partitions must cover [0, {last}]")));
        }
        for (i, p) in partitions.iter().enumerate() {
            if p.lo > p.hi {
                return Err(Error::InvalidScheme(format!("partition {} is empty", i + 1)));
            }
        }
        if partitions.windows(2).any(|w| w[1].lo != w[0].hi + 1) {
            return Err(Error::InvalidScheme("partitions are not contiguous".into()));
        }
        Ok(Self {
            kind: SchemeKind::Custom,
            bits,
            partitions,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Partition by 1-based index.
    pub fn get(&self, index: usize) -> Option<&Partition> {
        index.checked_sub(1).and_then(|i| self.partitions.get(i))
    }

    /// 1-based index of the partition holding intensity `v`.
    pub fn partition_of(&self, v: u32) -> Option<usize> {
        let i = self.partitions.partition_point(|p| p.hi < v);
        (i < self.partitions.len() && self.partitions[i].contains(v)).then_some(i + 1)
    }

    /// Per-intensity 0-based partition lookup table.
    pub fn index_table(&self) -> Vec<u16> {
        let mut table = vec![0u16; self.levels()];
        for (i, p) in self.partitions.iter().enumerate() {
            for slot in &mut table[p.lo as usize..=p.hi as usize] {
                *slot = i as u16;
            }
        }
        table
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if (1..=16).contains(&bits) {
        Ok(())
    } else {
        Err(Error::UnsupportedBitDepth(bits))
    }
}

/// Splits `[start, start + count)` into `n` runs whose lengths differ by at
/// most one.
fn split_even(start: u32, count: u32, n: u32) -> Vec<Partition> {
    (0..n)
        .map(|p| {
            let lo = start + (u64::from(p) * u64::from(count) / u64::from(n)) as u32;
            let hi = start + (u64::from(p + 1) * u64::from(count) / u64::from(n)) as u32 - 1;
            Partition { lo, hi }
        })
        .collect()
}

/// `n` near-equal partitions over the full `bits`-wide range.
pub fn scheme_uniform(n: usize, bits: u32) -> Result<PartitionScheme> {
    check_bits(bits)?;
    let levels = 1usize << bits;
    if n == 0 || n > levels {
        return Err(Error::InvalidScheme(format!(
            "partition count {n} outside 1..={levels}"
        )));
    }
    Ok(PartitionScheme {
        kind: SchemeKind::Uniform,
        bits,
        partitions: split_even(0, levels as u32, n as u32),
    })
}

/// A dedicated first partition `[0, rho_min]` followed by `n - 1` near-equal
/// partitions over the rest of the range.
pub fn scheme_with_min_special(n: usize, bits: u32, rho_min: u32) -> Result<PartitionScheme> {
    check_bits(bits)?;
    let levels = 1u32 << bits;
    if n < 2 {
        return Err(Error::InvalidScheme(format!(
            "min-special scheme needs n >= 2, got {n}"
        )));
    }
    let rest = u64::from(levels) - u64::from(rho_min) - 1;
    if u64::from(rho_min) >= u64::from(levels) || rest < (n - 1) as u64 {
        return Err(Error::InvalidScheme(format!(
            "no room for {} partitions above rho_min {rho_min}",
            n - 1
        )));
    }
    let mut partitions = vec![Partition { lo: 0, hi: rho_min }];
    partitions.extend(split_even(rho_min + 1, rest as u32, (n - 1) as u32));
    Ok(PartitionScheme {
        kind: SchemeKind::MinSpecial,
        bits,
        partitions,
    })
}

/// Builds a scheme of the given kind; `rho_min` is only used by
/// [`SchemeKind::MinSpecial`].
pub fn build_scheme(kind: SchemeKind, n: usize, bits: u32, rho_min: u32) -> Result<PartitionScheme> {
    match kind {
        SchemeKind::Uniform => scheme_uniform(n, bits),
        SchemeKind::MinSpecial => scheme_with_min_special(n, bits, rho_min),
        SchemeKind::Custom => Err(Error::InvalidScheme(
            "custom schemes are built from explicit partitions".into(),
        )),
    }
}

/// Set of selected partitions, 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSelection {
    selected: BTreeSet<usize>,
}

impl PartitionSelection {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        Self {
            selected: indices.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn all(n: usize) -> Self {
        Self::new(1..=n)
    }

    pub fn contains(&self, p: usize) -> bool {
        self.selected.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Ascending 1-based indices.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.selected.is_subset(&other.selected)
    }
}

/// Selects every partition holding at least one intensity with alpha > 0.
pub fn select_partitions<T: Real>(
    tf: &TransferFunction<T>,
    scheme: &PartitionScheme,
) -> Result<PartitionSelection> {
    if tf.levels() != scheme.levels() {
        return Err(Error::InvalidTransferFunction(format!(
            "transfer function has {} entries, scheme covers {}",
            tf.levels(),
            scheme.levels()
        )));
    }
    let support = tf.support();
    Ok(PartitionSelection::new(
        scheme
            .partitions()
            .iter()
            .enumerate()
            .filter(|(_, p)| support.any_in(p.lo as usize, p.hi as usize))
            .map(|(i, _)| i + 1),
    ))
}
