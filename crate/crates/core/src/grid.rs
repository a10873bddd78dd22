//! Regular multi-dimensional tables with per-cell channel vectors.
//!
//! Axis values are addressed in fractional index space: coordinate `i + t`
//! lies between nodes `i` and `i + 1`. Each model owns the mapping from its
//! physical parameters to those coordinates.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<const D: usize> {
    counts: [usize; D],
    channels: usize,
    data: Vec<f64>,
}

pub type Grid2D = Grid<2>;
pub type Grid3D = Grid<3>;
pub type Grid4D = Grid<4>;

impl<const D: usize> Grid<D> {
    pub fn new(counts: [usize; D], channels: usize) -> Result<Self> {
        let len = Self::checked_len(counts, channels)?;
        Ok(Grid { counts, channels, data: alloc::vec![0.0; len] })
    }

    pub fn from_data(counts: [usize; D], channels: usize, data: Vec<f64>) -> Result<Self> {
        let len = Self::checked_len(counts, channels)?;
        if data.len() != len {
            return Err(invalid!("grid data has {} values, expected {len}", data.len()));
        }
        Ok(Grid { counts, channels, data })
    }

    fn checked_len(counts: [usize; D], channels: usize) -> Result<usize> {
        if counts.iter().any(|&c| c < 2) {
            return Err(invalid!("every grid axis needs at least 2 samples, got {counts:?}"));
        }
        if channels == 0 {
            return Err(invalid!("grid needs at least one channel"));
        }
        Ok(counts.iter().product::<usize>() * channels)
    }

    pub fn counts(&self) -> [usize; D] {
        self.counts
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cells(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Row-major flat cell number (last axis fastest).
    #[inline]
    pub fn flat(&self, idx: [usize; D]) -> usize {
        let mut f = 0;
        for a in 0..D {
            f = f * self.counts[a] + idx[a];
        }
        f
    }

    /// Inverse of [`flat`](Self::flat).
    pub fn unflat(&self, mut f: usize) -> [usize; D] {
        let mut idx = [0; D];
        for a in (0..D).rev() {
            idx[a] = f % self.counts[a];
            f /= self.counts[a];
        }
        idx
    }

    #[inline]
    pub fn cell(&self, idx: [usize; D]) -> &[f64] {
        let o = self.flat(idx) * self.channels;
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn cell_mut(&mut self, idx: [usize; D]) -> &mut [f64] {
        let o = self.flat(idx) * self.channels;
        &mut self.data[o..o + self.channels]
    }

    /// Multilinear interpolation at fractional indices, clamped to the
    /// domain; adds `scale` times the interpolated channels to `out`.
    pub fn lookup_add(&self, coords: [f64; D], scale: f64, out: &mut [f64]) {
        let mut base = [0usize; D];
        let mut frac = [0.0f64; D];
        for a in 0..D {
            let max = (self.counts[a] - 1) as f64;
            let c = if coords[a].is_nan() { 0.0 } else { coords[a].clamp(0.0, max) };
            let i = (c as usize).min(self.counts[a] - 2);
            base[a] = i;
            frac[a] = c - i as f64;
        }
        for corner in 0..(1usize << D) {
            let mut w = scale;
            let mut idx = base;
            for a in 0..D {
                if corner & (1 << a) != 0 {
                    w *= frac[a];
                    idx[a] += 1;
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let cell = self.cell(idx);
            for (o, v) in out.iter_mut().zip(cell) {
                *o += w * v;
            }
        }
    }

    /// Multilinear interpolation into `out` (overwritten).
    pub fn lookup(&self, coords: [f64; D], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.lookup_add(coords, 1.0, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_multilinear_functions_and_clamps() {
        let mut g = Grid3D::new([3, 4, 2], 2).unwrap();
        for f in 0..g.cells() {
            let [i, j, k] = g.unflat(f);
            let c = g.cell_mut([i, j, k]);
            c[0] = 1.0 + 2.0 * i as f64 - j as f64 + 0.5 * k as f64;
            c[1] = (i * j) as f64;
        }
        let mut out = [0.0; 2];
        g.lookup([1.25, 2.5, 0.5], &mut out);
        assert!((out[0] - (1.0 + 2.5 - 2.5 + 0.25)).abs() < 1e-12);
        assert!((out[1] - 1.25 * 2.5).abs() < 1e-12);
        g.lookup([-3.0, 10.0, 0.0], &mut out);
        assert!((out[0] - (1.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(Grid2D::new([1, 5], 1).is_err());
        assert!(Grid2D::from_data([2, 2], 1, alloc::vec![0.0; 3]).is_err());
    }
}
