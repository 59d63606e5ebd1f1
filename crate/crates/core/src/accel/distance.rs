use crate::volume::BlockGrid;

use super::occupancy::OccupancyMap;

/// Distance value used for "no occupied block within reach".
pub const MAX_DISTANCE: u8 = u8::MAX;

/// Clamped Chebyshev distance, in blocks, to the nearest occupied block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    pub grid: BlockGrid,
    pub dist: Vec<u8>,
}

impl DistanceMap {
    pub fn filled(grid: BlockGrid, value: u8) -> Self {
        Self {
            dist: vec![value; grid.block_count()],
            grid,
        }
    }

    #[inline]
    pub fn get(&self, bx: usize, by: usize, bz: usize) -> u8 {
        self.dist[self.grid.index(bx, by, bz)]
    }

    /// Fraction of blocks with distance 0, i.e. marked as non-empty.
    pub fn occupied_fraction(&self) -> f64 {
        self.dist.iter().filter(|&&d| d == 0).count() as f64 / self.dist.len().max(1) as f64
    }

    /// FNV-1a over grid shape and distances.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |b: u8| {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for d in self.grid.bdims {
            for b in (d as u64).to_le_bytes() {
                feed(b);
            }
        }
        for &d in &self.dist {
            feed(d);
        }
        h
    }
}

/// Exact clamped L∞ distance transform.
///
/// Two raster passes over a grid padded with one layer of `MAX_DISTANCE`,
/// each relaxing against the 13 already-visited neighbours of the
/// 26-neighbourhood with unit weight. Saturating arithmetic performs the
/// clamp to 255.
pub fn distance_transform(occ: &OccupancyMap) -> DistanceMap {
    let grid = occ.grid;
    let occupied = occ.occupied.iter().filter(|&&o| o).count();
    if occupied == occ.occupied.len() {
        return DistanceMap::filled(grid, 0);
    }
    if occupied == 0 {
        return DistanceMap::filled(grid, MAX_DISTANCE);
    }

    let [bx, by, bz] = grid.bdims;
    let (px, py, pz) = (bx + 2, by + 2, bz + 2);
    let sx = 1isize;
    let sy = px as isize;
    let sz = (px * py) as isize;
    let mut buf = vec![MAX_DISTANCE; px * py * pz];
    for z in 0..bz {
        for y in 0..by {
            let src = grid.index(0, y, z);
            let dst = 1 + px * (y + 1 + py * (z + 1));
            for x in 0..bx {
                if occ.occupied[src + x] {
                    buf[dst + x] = 0;
                }
            }
        }
    }

    // Neighbours preceding a cell in x-fastest raster order.
    let mut causal = Vec::with_capacity(13);
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if (dz, dy, dx) < (0, 0, 0) {
                    causal.push(dz * sz + dy * sy + dx * sx);
                }
            }
        }
    }
    let causal: [isize; 13] = causal.try_into().expect("13 causal neighbours");

    let relax = |buf: &mut [u8], i: usize, offsets: &[isize; 13], sign: isize| {
        let mut best = buf[i];
        if best == 0 {
            return;
        }
        for &o in offsets {
            let j = (i as isize + sign * o) as usize;
            best = best.min(buf[j].saturating_add(1));
        }
        buf[i] = best;
    };

    for z in 1..=bz {
        for y in 1..=by {
            let row = px * (y + py * z);
            for x in 1..=bx {
                relax(&mut buf, row + x, &causal, 1);
            }
        }
    }
    for z in (1..=bz).rev() {
        for y in (1..=by).rev() {
            let row = px * (y + py * z);
            for x in (1..=bx).rev() {
                relax(&mut buf, row + x, &causal, -1);
            }
        }
    }

    let mut dist = Vec::with_capacity(grid.block_count());
    for z in 0..bz {
        for y in 0..by {
            let row = 1 + px * (y + 1 + py * (z + 1));
            dist.extend_from_slice(&buf[row..row + bx]);
        }
    }
    DistanceMap { grid, dist }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dims: [usize; 3]) -> BlockGrid {
        BlockGrid::new(dims, 1).unwrap()
    }

    #[test]
    fn full_and_empty() {
        let g = grid([3, 4, 5]);
        assert!(distance_transform(&OccupancyMap::filled(g, true)).dist.iter().all(|&d| d == 0));
        assert!(distance_transform(&OccupancyMap::filled(g, false))
            .dist
            .iter()
            .all(|&d| d == 255));
    }

    #[test]
    fn single_center() {
        let g = grid([5, 5, 5]);
        let mut occ = OccupancyMap::filled(g, false);
        occ.occupied[g.index(2, 2, 2)] = true;
        let dm = distance_transform(&occ);
        for i in 0..g.block_count() {
            let [x, y, z] = g.coords(i);
            let expect = x.abs_diff(2).max(y.abs_diff(2)).max(z.abs_diff(2));
            assert_eq!(dm.dist[i] as usize, expect);
        }
    }

    #[test]
    fn clamps_long_distances() {
        let g = grid([300, 1, 1]);
        let mut occ = OccupancyMap::filled(g, false);
        occ.occupied[0] = true;
        let dm = distance_transform(&occ);
        assert_eq!(dm.dist[254], 254);
        assert_eq!(dm.dist[255], 255);
        assert_eq!(dm.dist[299], 255);
    }

    #[test]
    fn checksum_tracks_content() {
        let g = grid([4, 4, 4]);
        let a = DistanceMap::filled(g, 3);
        let mut b = a.clone();
        assert_eq!(a.checksum(), b.checksum());
        b.dist[5] = 2;
        assert_ne!(a.checksum(), b.checksum());
    }
}
