//! Uniform spatial hash grid over a point set.

use std::collections::HashMap;

use crate::geom::MAX_DIM;

/// Integer cell coordinates, zero-padded beyond the ambient dimension.
pub type CellKey = [i32; MAX_DIM];

#[derive(Debug, Clone)]
pub struct SpatialGrid {
    dim: usize,
    cell: f64,
    buckets: HashMap<CellKey, Vec<u32>>,
}

#[inline]
fn cell_index(v: f64, cell: f64) -> i32 {
    let c = (v / cell).floor();
    c.clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

impl SpatialGrid {
    /// Builds the grid with the given cell edge length.
    pub fn build<'a>(points: impl Iterator<Item = &'a [f64]>, dim: usize, cell: f64) -> Self {
        debug_assert!(cell > 0.0 && cell.is_finite());
        let mut buckets: HashMap<CellKey, Vec<u32>> = HashMap::new();
        for (i, p) in points.enumerate() {
            let mut key = [0i32; MAX_DIM];
            for k in 0..dim {
                key[k] = cell_index(p[k], cell);
            }
            buckets.entry(key).or_default().push(i as u32);
        }
        SpatialGrid { dim, cell, buckets }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn key_of(&self, p: &[f64]) -> CellKey {
        let mut key = [0i32; MAX_DIM];
        for k in 0..self.dim {
            key[k] = cell_index(p[k], self.cell);
        }
        key
    }

    #[inline]
    pub fn bucket(&self, key: &CellKey) -> &[u32] {
        self.buckets.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Iterates cell keys covering [lo, hi], padded by one cell on every
    /// side so boundary rounding can never exclude an occupied cell.
    pub fn covering_keys(&self, lo: &[f64], hi: &[f64]) -> CellBoxIter {
        let mut lo_k = [0i32; MAX_DIM];
        let mut hi_k = [0i32; MAX_DIM];
        for k in 0..self.dim {
            lo_k[k] = cell_index(lo[k], self.cell).saturating_sub(1);
            hi_k[k] = cell_index(hi[k], self.cell).saturating_add(1);
        }
        CellBoxIter::new(lo_k, hi_k, self.dim)
    }

    /// The 3^dim cells around `key`.
    pub fn neighborhood_keys(&self, key: &CellKey) -> CellBoxIter {
        let mut lo = *key;
        let mut hi = *key;
        for k in 0..self.dim {
            lo[k] = lo[k].saturating_sub(1);
            hi[k] = hi[k].saturating_add(1);
        }
        CellBoxIter::new(lo, hi, self.dim)
    }
}

pub struct CellBoxIter {
    lo: CellKey,
    hi: CellKey,
    cur: CellKey,
    dim: usize,
    done: bool,
}

impl CellBoxIter {
    fn new(lo: CellKey, hi: CellKey, dim: usize) -> Self {
        CellBoxIter {
            lo,
            hi,
            cur: lo,
            dim,
            done: false,
        }
    }
}

impl Iterator for CellBoxIter {
    type Item = CellKey;

    fn next(&mut self) -> Option<CellKey> {
        if self.done {
            return None;
        }
        let out = self.cur;
        // Odometer increment, last axis fastest.
        let mut k = self.dim;
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            if self.cur[k] < self.hi[k] {
                self.cur[k] += 1;
                for kk in (k + 1)..self.dim {
                    self.cur[kk] = self.lo[kk];
                }
                break;
            }
        }
        Some(out)
    }
}
