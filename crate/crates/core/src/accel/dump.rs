//! Binary dumps of distance maps and PDM sets.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! magic[4] ("DMAP" or "PDMS")
//! dims[3] block_size bdims[3] n bits
//! n × (lo, hi)               -- PDMS only
//! n × bx·by·bz distance bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Duration;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionScheme};
use crate::volume::BlockGrid;

use super::distance::DistanceMap;
use super::occupancy::OccupancyMode;
use super::pdm::PdmSet;

const MAGIC_MAP: &[u8; 4] = b"DMAP";
const MAGIC_SET: &[u8; 4] = b"PDMS";

fn write_header(w: &mut impl Write, magic: &[u8; 4], grid: &BlockGrid, n: usize, bits: u32) -> std::io::Result<()> {
    w.write_all(magic)?;
    for d in grid.dims {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    w.write_u32::<LittleEndian>(grid.block_size as u32)?;
    for d in grid.bdims {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    w.write_u32::<LittleEndian>(n as u32)?;
    w.write_u32::<LittleEndian>(bits)
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<(BlockGrid, usize, u32)> {
    let fmt = |e: std::io::Error| Error::MapFormat(e.to_string());
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(fmt)?;
    if &m != magic {
        return Err(Error::MapFormat(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut u = || r.read_u32::<LittleEndian>().map(|v| v as usize).map_err(fmt);
    let dims = [u()?, u()?, u()?];
    let block_size = u()?;
    let bdims = [u()?, u()?, u()?];
    let n = u()?;
    let bits = u()? as u32;
    let grid = BlockGrid::new(dims, block_size)?;
    if grid.bdims != bdims {
        return Err(Error::MapFormat(format!(
            "block dims {bdims:?} inconsistent with dims {dims:?} / b={block_size}"
        )));
    }
    Ok((grid, n, bits))
}

pub fn write_distance_map(map: &DistanceMap, w: &mut impl Write) -> Result<()> {
    let io = |e| Error::MapFormat(format!("write failed: {e}"));
    write_header(w, MAGIC_MAP, &map.grid, 1, 0).map_err(io)?;
    w.write_all(&map.dist).map_err(io)
}

pub fn read_distance_map(r: &mut impl Read) -> Result<DistanceMap> {
    let (grid, n, _) = read_header(r, MAGIC_MAP)?;
    if n != 1 {
        return Err(Error::MapFormat(format!("distance map dump holds {n} maps")));
    }
    let mut dist = vec![0u8; grid.block_count()];
    r.read_exact(&mut dist).map_err(|e| Error::MapFormat(e.to_string()))?;
    Ok(DistanceMap { grid, dist })
}

pub fn write_pdm_set(set: &PdmSet, w: &mut impl Write) -> Result<()> {
    let io = |e| Error::MapFormat(format!("write failed: {e}"));
    write_header(w, MAGIC_SET, &set.grid, set.len(), set.scheme.bits()).map_err(io)?;
    w.write_u32::<LittleEndian>(match set.mode {
        OccupancyMode::Voxel => 0,
        OccupancyMode::RangeApron => 1,
    })
    .map_err(io)?;
    for p in set.scheme.partitions() {
        w.write_u32::<LittleEndian>(p.lo).map_err(io)?;
        w.write_u32::<LittleEndian>(p.hi).map_err(io)?;
    }
    for m in &set.pdms {
        w.write_all(&m.dist).map_err(io)?;
    }
    Ok(())
}

pub fn read_pdm_set(r: &mut impl Read) -> Result<PdmSet> {
    let fmt = |e: std::io::Error| Error::MapFormat(e.to_string());
    let (grid, n, bits) = read_header(r, MAGIC_SET)?;
    let mode = match r.read_u32::<LittleEndian>().map_err(fmt)? {
        0 => OccupancyMode::Voxel,
        1 => OccupancyMode::RangeApron,
        other => return Err(Error::MapFormat(format!("unknown occupancy mode tag {other}"))),
    };
    let mut partitions = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = r.read_u32::<LittleEndian>().map_err(fmt)?;
        let hi = r.read_u32::<LittleEndian>().map_err(fmt)?;
        partitions.push(Partition::new(lo, hi)?);
    }
    let scheme = PartitionScheme::from_partitions(bits, partitions)?;
    let mut pdms = Vec::with_capacity(n);
    for _ in 0..n {
        let mut dist = vec![0u8; grid.block_count()];
        r.read_exact(&mut dist).map_err(fmt)?;
        pdms.push(DistanceMap { grid, dist });
    }
    Ok(PdmSet {
        scheme,
        grid,
        mode,
        pdms,
        init_time: Duration::ZERO,
    })
}

pub fn save_pdm_set(set: &PdmSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_pdm_set(set, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_pdm_set(path: impl AsRef<Path>) -> Result<PdmSet> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_pdm_set(&mut r)
}

pub fn save_distance_map(map: &DistanceMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_distance_map(map, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_distance_map(path: impl AsRef<Path>) -> Result<DistanceMap> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_distance_map(&mut r)
}
