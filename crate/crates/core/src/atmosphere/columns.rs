use alloc::vec::Vec;

use crate::grid::Grid2D;
use crate::math::{exp, sqrt};

use super::geometry::{distance_to_ground, distance_to_top, hits_ground, mu_at, radius_at};
use super::{AtmosphereParams, Coefficients};

/// Precomputed relative density columns `[D_R, D_M]` (km) from any point
/// to the top of the atmosphere, for rays that do not hit the ground.
///
/// The table is wavelength independent: the transmittance at wavelength
/// `i` is `exp(-(β_R[i] D_R + β_M,ext[i] D_M))`. The (r, mu) axes use a
/// horizon-aware mapping that spends samples where columns vary fastest.
#[derive(Debug, Clone)]
pub struct ColumnTable {
    grid: Grid2D,
    r_ground: f64,
    r_top: f64,
    h_rayleigh: f64,
    h_mie: f64,
}

impl ColumnTable {
    pub const DEFAULT_SIZE: (usize, usize) = (64, 256);
    const SAMPLES: usize = 256;

    /// `n_r` altitude by `n_mu` direction samples.
    pub fn new(params: &AtmosphereParams, n_r: usize, n_mu: usize) -> Self {
        let mut table = ColumnTable {
            grid: Grid2D::new([n_r.max(2), n_mu.max(2)], 2).expect("valid sizes"),
            r_ground: params.r_ground(),
            r_top: params.r_top(),
            h_rayleigh: params.rayleigh_scale_height_km,
            h_mie: params.aerosol_scale_height_km,
        };
        let [nr, nm] = table.grid.counts();
        for i in 0..nr {
            for j in 0..nm {
                let (r, mu) = table.from_unit(i as f64 / (nr - 1) as f64, j as f64 / (nm - 1) as f64);
                let d = distance_to_top(r, mu, table.r_top);
                let col = table.integrate(r, mu, d, Self::SAMPLES);
                table.grid.cell_mut([i, j]).copy_from_slice(&col);
            }
        }
        table
    }

    pub fn with_default_size(params: &AtmosphereParams) -> Self {
        Self::new(params, Self::DEFAULT_SIZE.0, Self::DEFAULT_SIZE.1)
    }

    fn horizon(&self) -> f64 {
        sqrt(self.r_top * self.r_top - self.r_ground * self.r_ground)
    }

    /// Unit-square coordinates `(x_r, x_mu)` to `(r, mu)`.
    fn from_unit(&self, x_r: f64, x_mu: f64) -> (f64, f64) {
        let big_h = self.horizon();
        let rho = big_h * x_r;
        let r = sqrt(rho * rho + self.r_ground * self.r_ground);
        let d_min = self.r_top - r;
        let d_max = rho + big_h;
        let d = d_min + x_mu * (d_max - d_min);
        let mu = if d == 0.0 { 1.0 } else { ((big_h * big_h - rho * rho - d * d) / (2.0 * r * d)).clamp(-1.0, 1.0) };
        (r, mu)
    }

    fn to_unit(&self, r: f64, mu: f64) -> (f64, f64) {
        let big_h = self.horizon();
        let r = r.clamp(self.r_ground, self.r_top);
        let rho = sqrt((r * r - self.r_ground * self.r_ground).max(0.0));
        let d = distance_to_top(r, mu, self.r_top);
        let d_min = self.r_top - r;
        let d_max = rho + big_h;
        let x_mu = if d_max > d_min { (d - d_min) / (d_max - d_min) } else { 0.0 };
        (rho / big_h, x_mu)
    }

    /// Relative density columns along `d` km of the ray, by `n` samples.
    pub fn integrate(&self, r: f64, mu: f64, d: f64, n: usize) -> [f64; 2] {
        if d <= 0.0 {
            return [0.0, 0.0];
        }
        let ds = d / (n - 1) as f64;
        let height = |i: usize| (radius_at(r, mu, i as f64 * ds) - self.r_ground).max(0.0);
        let hs = [self.h_rayleigh, self.h_mie];
        let mut ha = height(0);
        let mut a = hs.map(|s| exp(-ha / s));
        let mut out = [0.0; 2];
        for i in 1..n {
            let hb = height(i);
            let b = hs.map(|s| exp(-hb / s));
            for k in 0..2 {
                // the log of the density ratio is (hb - ha) / H
                let l = (hb - ha) / hs[k];
                out[k] += if l.abs() < 1e-6 { 0.5 * (a[k] + b[k]) } else { (a[k] - b[k]) / l };
            }
            ha = hb;
            a = b;
        }
        [out[0] * ds, out[1] * ds]
    }

    /// Columns from `(r, mu)` to the top boundary. Meaningless for rays that
    /// hit the ground (they are clamped to the horizon).
    pub fn to_top(&self, r: f64, mu: f64) -> [f64; 2] {
        let (x_r, x_mu) = self.to_unit(r, mu);
        let [nr, nm] = self.grid.counts();
        let mut out = [0.0; 2];
        self.grid.lookup([x_r * (nr - 1) as f64, x_mu * (nm - 1) as f64], &mut out);
        out
    }

    /// Columns over the first `d` km of the ray `(r, mu)`; `ground` tells
    /// whether the infinite ray hits the ground.
    pub fn between(&self, r: f64, mu: f64, d: f64, ground: bool) -> [f64; 2] {
        let r_d = radius_at(r, mu, d).clamp(self.r_ground, self.r_top);
        let mu_d = mu_at(r, mu, d, r_d);
        let (a, b) = if ground {
            (self.to_top(r_d, -mu_d), self.to_top(r, -mu))
        } else {
            (self.to_top(r, mu), self.to_top(r_d, mu_d))
        };
        [(a[0] - b[0]).max(0.0), (a[1] - b[1]).max(0.0)]
    }

    /// Columns towards a light source in direction `mu_s`, or `None` when
    /// the planet blocks it.
    #[inline]
    pub fn to_sun(&self, r: f64, mu_s: f64) -> Option<[f64; 2]> {
        if hits_ground(r, mu_s, self.r_ground) {
            None
        } else {
            Some(self.to_top(r, mu_s))
        }
    }

    /// Columns from `(r, mu)` to wherever the ray leaves the atmosphere or
    /// meets the ground, and whether it met the ground.
    pub fn to_boundary(&self, r: f64, mu: f64) -> ([f64; 2], bool) {
        match distance_to_ground(r, mu, self.r_ground) {
            Some(d) => (self.between(r, mu, d, true), true),
            None => (self.to_top(r, mu), false),
        }
    }

    /// Per-wavelength transmittance to the top on the same nodes.
    pub fn transmittance_table(&self, coef: &Coefficients) -> TransmittanceTable {
        let [nr, nm] = self.grid.counts();
        let nl = coef.len();
        let mut grid = Grid2D::new([nr, nm], nl).expect("valid sizes");
        for i in 0..nr {
            for j in 0..nm {
                let col = [self.grid.cell([i, j])[0], self.grid.cell([i, j])[1]];
                coef.transmittance_into(col, grid.cell_mut([i, j]));
            }
        }
        TransmittanceTable { columns: self.clone(), grid }
    }

    pub fn raw(&self) -> &Grid2D {
        &self.grid
    }

    pub fn counts(&self) -> [usize; 2] {
        self.grid.counts()
    }

    /// Rebuilds a table from stored data.
    pub fn from_raw(params: &AtmosphereParams, counts: [usize; 2], data: Vec<f64>) -> crate::Result<Self> {
        Ok(ColumnTable {
            grid: Grid2D::from_data(counts, 2, data)?,
            r_ground: params.r_ground(),
            r_top: params.r_top(),
            h_rayleigh: params.rayleigh_scale_height_km,
            h_mie: params.aerosol_scale_height_km,
        })
    }
}

/// Tabulated transmittance to the top of the atmosphere, interpolated
/// directly instead of through the columns.
#[derive(Debug, Clone)]
pub struct TransmittanceTable {
    columns: ColumnTable,
    grid: Grid2D,
}

impl TransmittanceTable {
    /// Transmittance towards `mu_s` written to `out`; false (and zeros)
    /// when the planet blocks the light.
    #[inline]
    pub fn to_sun_into(&self, r: f64, mu_s: f64, out: &mut [f64]) -> bool {
        if hits_ground(r, mu_s, self.columns.r_ground) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return false;
        }
        let (x_r, x_mu) = self.columns.to_unit(r, mu_s);
        let [nr, nm] = self.grid.counts();
        self.grid.lookup([x_r * (nr - 1) as f64, x_mu * (nm - 1) as f64], out);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::{cos, to_radians};

    #[test]
    fn table_matches_direct_integration() {
        let p = default_params();
        let t = ColumnTable::with_default_size(&p);
        for &h in &[0.0, 0.5, 3.0, 20.0] {
            for &z in &[0.0, 45.0, 70.0, 85.0, 89.0] {
                let r = p.r_ground() + h;
                let mu = cos(to_radians(z));
                let direct = t.integrate(r, mu, distance_to_top(r, mu, p.r_top()), 4000);
                let table = t.to_top(r, mu);
                for k in 0..2 {
                    assert!((table[k] - direct[k]).abs() < 5e-3 * direct[k] + 1e-4, "h {h} z {z} k {k}: {} vs {}", table[k], direct[k]);
                }
            }
        }
    }

    #[test]
    fn split_columns_add_up() {
        let p = default_params();
        let t = ColumnTable::with_default_size(&p);
        let r = p.r_ground() + 0.2;
        let mu = 0.3;
        let whole = t.to_top(r, mu);
        let d = 7.0;
        let part = t.between(r, mu, d, false);
        let r_d = radius_at(r, mu, d);
        let rest = t.to_top(r_d, mu_at(r, mu, d, r_d));
        assert!((part[0] + rest[0] - whole[0]).abs() < 1e-9);
    }
}
