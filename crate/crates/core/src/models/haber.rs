//! Successive scattering orders on a grid of cells centred on the viewer:
//! layers of constant Rayleigh optical depth crossed with viewing zenith
//! and azimuth bins. Single scattering uses the exact phase functions;
//! higher orders treat both constituents as isotropic scatterers and the
//! ground as black.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::atmosphere::geometry::{distance_to_ground, distance_to_top};
use crate::atmosphere::{AtmosphereParams, Coefficients};
use crate::error::invalid;
use crate::grid::Grid3D;
use crate::math::{acos, atan2, exp, sin, sqrt, Vec3, PI};
use crate::spectrum::WavelengthGrid;
use crate::{Error, Result};

use super::common::{check_directions_from, check_finite, check_out, constant_depth_radii, integrate_view, ViewRay, ViewSample};
use super::nishita93::{build_nishita93, Nishita93Config, Nishita93Model};
use super::{ModelKind, SkyModel, SkySource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaberConfig {
    /// Spheres bounding the layers; `spheres - 1` layers of cells.
    pub spheres: usize,
    /// Viewing zenith bins from the zenith to the nadir, both included.
    pub n_theta: usize,
    /// Azimuth bins around the viewer, even; half of them are stored
    /// thanks to the mirror symmetry through the sun plane.
    pub n_phi: usize,
    /// Scattering orders, single scattering included.
    pub orders: usize,
    /// Direction quadrature used to gather the light arriving at a cell.
    pub gather_theta: usize,
    pub gather_phi: usize,
    /// Spheres whose crossings sample the gathering rays.
    pub gather_spheres: usize,
    pub observer_altitude_km: f64,
}

impl Default for HaberConfig {
    fn default() -> Self {
        HaberConfig {
            spheres: 50,
            n_theta: 37,
            n_phi: 72,
            orders: 4,
            gather_theta: 8,
            gather_phi: 16,
            gather_spheres: 17,
            observer_altitude_km: 0.0,
        }
    }
}

impl HaberConfig {
    /// Number of stored cells.
    pub fn cells(&self) -> usize {
        (self.spheres - 1) * self.n_theta * (self.n_phi / 2)
    }

    fn validate(&self) -> Result<()> {
        if self.spheres < 3 || self.n_theta < 3 || self.n_phi < 4 || self.n_phi % 2 != 0 {
            return Err(invalid!("haber needs at least 3 spheres, 3 zenith bins and an even number of at least 4 azimuth bins"));
        }
        if self.orders < 1 || self.gather_theta < 2 || self.gather_phi < 2 || self.gather_spheres < 2 {
            return Err(invalid!("haber needs at least 1 order and a gathering quadrature of at least 2x2 directions"));
        }
        if !(self.observer_altitude_km >= 0.0 && self.observer_altitude_km.is_finite()) {
            return Err(invalid!("observer altitude must be a nonnegative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HaberModel {
    params: AtmosphereParams,
    coef: Coefficients,
    config: HaberConfig,
    sun: Vec3,
    /// Rotation that brings the sun to azimuth 0.
    sun_azimuth: f64,
    single: Nishita93Model,
    cells: Cells,
    /// Incident fluence of each order from 2 on, per cell.
    fluence: Vec<Grid3D>,
    /// Sum of `fluence`.
    total: Grid3D,
}

/// Cell layout in the sun-aligned frame, observer at the origin above the
/// ground point, planet centre on the -z axis.
#[derive(Debug, Clone)]
struct Cells {
    radii: Vec<f64>,
    n_theta: usize,
    n_phi_half: usize,
    r_ground: f64,
    h_rayleigh: f64,
    top_km: f64,
    observer: Vec3,
    center: Vec3,
    /// Cell centres, `None` where the viewer ray misses the layer.
    centers: Vec<Option<Vec3>>,
}

impl Cells {
    fn new(params: &AtmosphereParams, config: &HaberConfig) -> Self {
        let radii = constant_depth_radii(params, config.spheres);
        let observer = Vec3::new(0.0, 0.0, config.observer_altitude_km);
        let center = Vec3::new(0.0, 0.0, -params.r_ground());
        let mut cells = Cells {
            radii,
            n_theta: config.n_theta,
            n_phi_half: config.n_phi / 2,
            r_ground: params.r_ground(),
            h_rayleigh: params.rayleigh_scale_height_km,
            top_km: params.top_altitude_km,
            observer,
            center,
            centers: Vec::new(),
        };
        let n_layers = cells.radii.len() - 1;
        let mut centers = alloc::vec![None; n_layers * cells.n_theta * cells.n_phi_half];
        for t in 0..cells.n_theta {
            for p in 0..cells.n_phi_half {
                let w = Vec3::from_angles(cells.theta(t), cells.phi(p));
                for (l, d) in cells.layer_midpoints(w).into_iter().enumerate() {
                    if let Some(d) = d {
                        centers[cells.flat(l, t, p)] = Some(observer + w * d);
                    }
                }
            }
        }
        cells.centers = centers;
        cells
    }

    fn n_layers(&self) -> usize {
        self.radii.len() - 1
    }

    fn theta(&self, t: usize) -> f64 {
        PI * t as f64 / (self.n_theta - 1) as f64
    }

    fn phi(&self, p: usize) -> f64 {
        PI * (p as f64 + 0.5) / self.n_phi_half as f64
    }

    fn flat(&self, l: usize, t: usize, p: usize) -> usize {
        (l * self.n_theta + t) * self.n_phi_half + p
    }

    /// Distance to the middle of the first stretch of the viewer ray `w`
    /// inside each layer.
    fn layer_midpoints(&self, w: Vec3) -> Vec<Option<f64>> {
        let q = self.observer - self.center;
        let r0 = q.length();
        let mu = q.dot(w) / r0;
        let end = match distance_to_ground(r0, mu, self.r_ground) {
            Some(d) => d,
            None => distance_to_top(r0, mu, *self.radii.last().expect("spheres")),
        };
        let mut ds: Vec<f64> = alloc::vec![0.0, end];
        for &rk in &self.radii {
            let disc = r0 * r0 * (mu * mu - 1.0) + rk * rk;
            if disc < 0.0 {
                continue;
            }
            let s = sqrt(disc);
            for d in [-r0 * mu - s, -r0 * mu + s] {
                if d > 1e-9 && d < end - 1e-9 {
                    ds.push(d);
                }
            }
        }
        ds.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let mut out = alloc::vec![None; self.n_layers()];
        for k in 1..ds.len() {
            let mid = 0.5 * (ds[k - 1] + ds[k]);
            if ds[k] - ds[k - 1] < 1e-9 {
                continue;
            }
            let r = sqrt(r0 * r0 + 2.0 * r0 * mu * mid + mid * mid);
            let l = self.radii.partition_point(|&x| x <= r).clamp(1, self.n_layers()) - 1;
            if out[l].is_none() {
                out[l] = Some(mid);
            }
        }
        out
    }

    /// Continuous layer coordinate: sphere `k` sits at `k`.
    fn sphere_coord(&self, r: f64) -> f64 {
        let h = (r - self.r_ground).max(0.0);
        let span = 1.0 - exp(-self.top_km / self.h_rayleigh);
        (1.0 - exp(-h / self.h_rayleigh)) / span * self.n_layers() as f64
    }

    /// Fractional cell coordinates of a point given in the sun frame.
    fn coords(&self, y: Vec3) -> [f64; 3] {
        let q = y - self.observer;
        let d = q.length();
        let (theta, phi) = if d > 1e-9 {
            let theta = acos((q.z / d).clamp(-1.0, 1.0));
            let phi = atan2(q.y, q.x).abs();
            (theta, phi)
        } else {
            (0.0, 0.0)
        };
        let r = (y - self.center).length();
        let fl = self.sphere_coord(r) - 0.5;
        let ft = theta / PI * (self.n_theta - 1) as f64;
        let fp = phi / PI * self.n_phi_half as f64 - 0.5;
        [fl, ft, fp]
    }
}

pub fn build_haber(params: &AtmosphereParams, sun: Vec3, config: HaberConfig) -> Result<HaberModel> {
    config.validate()?;
    if config.observer_altitude_km >= params.top_altitude_km {
        return Err(Error::Unsupported("haber needs the viewer inside the atmosphere".to_string()));
    }
    let ls = sun.length();
    if !(ls > 0.0 && ls.is_finite()) {
        return Err(invalid!("sun direction must be finite and nonzero"));
    }
    let sun = sun * (1.0 / ls);
    let sun_azimuth = if sun.x.abs() < 1e-12 && sun.y.abs() < 1e-12 { 0.0 } else { atan2(sun.y, sun.x) };
    let single = build_nishita93(
        params,
        Nishita93Config { spheres: config.spheres, cylinders: 64, observer_altitude_km: config.observer_altitude_km },
    )?;
    let coef = params.coefficients()?;
    let cells = Cells::new(params, &config);
    let nl = coef.len();
    let counts = [cells.n_layers(), cells.n_theta, cells.n_phi_half];
    let local_sun = sun.rotate_z(-sun_azimuth);
    let gatherer = Gatherer {
        params,
        coef: &coef,
        single: &single,
        cells: &cells,
        sun: local_sun,
        radii: constant_depth_radii(params, config.gather_spheres),
        config: &config,
    };
    let mut fluence = Vec::new();
    let mut total = Grid3D::new(counts, nl)?;
    for _ in 2..=config.orders {
        let next = gatherer.next_order(fluence.last())?;
        for (t, v) in total.data_mut().iter_mut().zip(next.data()) {
            *t += v;
        }
        fluence.push(next);
    }
    Ok(HaberModel { params: params.clone(), coef, config, sun, sun_azimuth, single, cells, fluence, total })
}

struct Gatherer<'a> {
    params: &'a AtmosphereParams,
    coef: &'a Coefficients,
    single: &'a Nishita93Model,
    cells: &'a Cells,
    sun: Vec3,
    radii: Vec<f64>,
    config: &'a HaberConfig,
}

impl Gatherer<'_> {
    /// Fluence of the next order at every cell, from the previous order's
    /// fluence table (`None`: the direct sunlight).
    fn next_order(&self, previous: Option<&Grid3D>) -> Result<Grid3D> {
        let cells = self.cells;
        let nl = self.coef.len();
        let mut out = Grid3D::new([cells.n_layers(), cells.n_theta, cells.n_phi_half], nl)?;
        let (gt, gp) = (self.config.gather_theta, self.config.gather_phi);
        let dt = PI / gt as f64;
        let dp = 2.0 * PI / gp as f64;
        let mut acc = alloc::vec![0.0; nl];
        let mut f = alloc::vec![0.0; nl];
        let mut ts = alloc::vec![0.0; nl];
        for p in 0..cells.n_phi_half {
            // the gathering directions turn with the cell azimuth so that a
            // vertical sun gives identical azimuth columns
            let rot = cells.phi(p);
            let dirs: Vec<(Vec3, f64)> = (0..gt * gp)
                .map(|q| {
                    let th = (((q / gp) as f64) + 0.5) * dt;
                    let ph = (((q % gp) as f64) + 0.5) * dp + rot;
                    (Vec3::from_angles(th, ph), sin(th) * dt * dp)
                })
                .collect();
            for l in 0..cells.n_layers() {
                for t in 0..cells.n_theta {
                    let Some(x) = cells.centers[cells.flat(l, t, p)] else { continue };
                    let q = x - cells.center;
                    let r0 = q.length();
                    let up = q * (1.0 / r0);
                    let cell = out.cell_mut([l, t, p]);
                    for &(w, dw) in &dirs {
                        let ray = ViewRay::from_radius(self.params, r0, w.dot(up), self.sun.dot(up), w.dot(self.sun));
                        let samples = ray.layer_samples(self.params, &self.radii);
                        acc.iter_mut().for_each(|v| *v = 0.0);
                        integrate_view(
                            self.coef,
                            &samples,
                            |k, gr, gm| {
                                let s: &ViewSample = &samples[k];
                                match previous {
                                    None => {
                                        self.direct(s, &mut ts);
                                        f.copy_from_slice(&ts);
                                    }
                                    Some(table) => table.lookup(cells.coords(x + w * s.d), &mut f),
                                }
                                for i in 0..nl {
                                    let v = f[i] / (4.0 * PI);
                                    gr[i] = self.coef.rayleigh[i] * v;
                                    gm[i] = self.coef.mie_scattering[i] * v;
                                }
                            },
                            &mut acc,
                        );
                        for i in 0..nl {
                            cell[i] += dw * acc[i];
                        }
                    }
                }
            }
        }
        fill_empty(cells, &mut out);
        Ok(out)
    }

    /// Direct solar fluence at a sample.
    fn direct(&self, s: &ViewSample, out: &mut [f64]) {
        match self.single.sun_columns(s.r, s.mu_s) {
            Some(col) => {
                self.coef.transmittance_into(col, out);
                for (o, e) in out.iter_mut().zip(&self.coef.solar) {
                    *o *= e;
                }
            }
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }
}

/// Copies the nearest filled zenith bin into cells the viewer rays never
/// reach, so that interpolation near the ground does not blend in zeros.
fn fill_empty(cells: &Cells, grid: &mut Grid3D) {
    for l in 0..cells.n_layers() {
        for p in 0..cells.n_phi_half {
            let filled: Vec<usize> = (0..cells.n_theta).filter(|&t| cells.centers[cells.flat(l, t, p)].is_some()).collect();
            if filled.is_empty() {
                continue;
            }
            for t in 0..cells.n_theta {
                if cells.centers[cells.flat(l, t, p)].is_some() {
                    continue;
                }
                let src = *filled.iter().min_by_key(|&&u| u.abs_diff(t)).expect("nonempty");
                let v = grid.cell([l, src, p]).to_vec();
                grid.cell_mut([l, t, p]).copy_from_slice(&v);
            }
        }
    }
}

impl HaberModel {
    pub fn config(&self) -> HaberConfig {
        self.config
    }

    pub fn sun(&self) -> Vec3 {
        self.sun
    }

    fn prepare(&self, view: Vec3, sun: Vec3) -> Result<Vec3> {
        let (view, sun) = check_directions_from(view, sun, false)?;
        if (sun - self.sun).length() > 1e-9 {
            return Err(Error::InvalidUse("haber cells were built for another sun direction".to_string()));
        }
        Ok(view)
    }

    /// Radiance of scattering order `order` (1 is single scattering) added
    /// to `out`.
    pub fn order_radiance(&self, view: Vec3, sun: Vec3, order: usize, out: &mut [f64]) -> Result<()> {
        check_out(&self.coef.grid, out)?;
        let view = self.prepare(view, sun)?;
        match order {
            1 => {
                let mut s = alloc::vec![0.0; out.len()];
                self.single.radiance_into(view, self.sun, &mut s)?;
                out.iter_mut().zip(&s).for_each(|(o, v)| *o += v);
            }
            k if k >= 2 && k <= self.config.orders => self.gathered(view, &self.fluence[k - 2], out),
            _ => return Err(invalid!("order {order} outside 1..={}", self.config.orders)),
        }
        check_finite(out)
    }

    /// Isotropically scattered light of a fluence table along the view ray.
    fn gathered(&self, view: Vec3, table: &Grid3D, out: &mut [f64]) {
        let Some(ray) = ViewRay::new(&self.params, self.config.observer_altitude_km, view, self.sun) else {
            return;
        };
        let samples = ray.layer_samples(&self.params, self.single.layer_radii());
        let local = view.rotate_z(-self.sun_azimuth);
        let nl = self.coef.len();
        let mut f = alloc::vec![0.0; nl];
        integrate_view(
            &self.coef,
            &samples,
            |k, gr, gm| {
                table.lookup(self.cells.coords(self.cells.observer + local * samples[k].d), &mut f);
                for i in 0..nl {
                    let v = f[i] / (4.0 * PI);
                    gr[i] = self.coef.rayleigh[i] * v;
                    gm[i] = self.coef.mie_scattering[i] * v;
                }
            },
            out,
        );
    }
}

impl SkySource for HaberModel {
    fn grid(&self) -> &WavelengthGrid {
        &self.coef.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        check_out(&self.coef.grid, out)?;
        let view = self.prepare(view, sun)?;
        self.single.radiance_into(view, self.sun, out)?;
        if self.config.orders >= 2 {
            self.gathered(view, &self.total, out);
        }
        for v in out.iter_mut() {
            *v = v.max(0.0);
        }
        check_finite(out)
    }
}

impl SkyModel for HaberModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Haber
    }
}

/// Seconds-scale configuration for tests and quick previews.
impl HaberConfig {
    pub fn coarse() -> Self {
        HaberConfig { spheres: 12, n_theta: 19, n_phi: 24, gather_theta: 6, gather_phi: 12, gather_spheres: 9, ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::{cos, to_radians};

    #[test]
    fn default_grid_has_the_published_cell_count() {
        assert_eq!(HaberConfig::default().cells(), 65268);
    }

    #[test]
    fn cell_coordinates_return_the_cell_indices() {
        let p = default_params();
        let c = Cells::new(&p, &HaberConfig::coarse());
        for (l, t, ph) in [(0, 3, 2), (5, 9, 7), (10, 1, 11), (4, 8, 0)] {
            let x = c.centers[c.flat(l, t, ph)].unwrap();
            let [fl, ft, fp] = c.coords(x);
            assert!((ft - t as f64).abs() < 1e-9 && (fp - ph as f64).abs() < 1e-9, "{l} {t} {ph}: {ft} {fp}");
            assert!((fl - l as f64).abs() < 0.5, "{l}: {fl}");
        }
        // a ground viewer sees nothing below its horizon
        assert!(c.centers[c.flat(0, 15, 0)].is_none());
    }

    #[test]
    fn orders_lose_energy_and_add_up() {
        let p = default_params();
        let sun = Vec3::from_angles(to_radians(40.0), 0.5);
        let m = build_haber(&p, sun, HaberConfig::coarse()).unwrap();
        let nl = p.grid().len();
        // cosine weighted hemisphere sums per order
        let mut e = [0.0; 4];
        for zi in 0..6 {
            for ai in 0..12 {
                let th = (zi as f64 + 0.5) * PI / 12.0;
                let v = Vec3::from_angles(th, ai as f64 * PI / 6.0 + 0.1);
                for k in 1..=4 {
                    let mut l = alloc::vec![0.0; nl];
                    m.order_radiance(v, sun, k, &mut l).unwrap();
                    e[k - 1] += l.iter().sum::<f64>() * cos(th) * sin(th);
                }
            }
        }
        for k in 0..3 {
            assert!(e[k + 1] < e[k] && e[k + 1] > 0.0, "{e:?}");
        }
        let v = Vec3::from_angles(1.1, 2.0);
        let mut parts = alloc::vec![0.0; nl];
        for k in 1..=4 {
            m.order_radiance(v, sun, k, &mut parts).unwrap();
        }
        let total = m.radiance(v, sun).unwrap();
        for i in 0..nl {
            assert!((parts[i] / total.values()[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zenith_sun_is_azimuthally_symmetric() {
        let p = default_params();
        let m = build_haber(&p, Vec3::ZENITH, HaberConfig { orders: 2, ..HaberConfig::coarse() }).unwrap();
        let a = m.radiance(Vec3::from_angles(to_radians(60.0), 0.3), Vec3::ZENITH).unwrap();
        let b = m.radiance(Vec3::from_angles(to_radians(60.0), 2.1), Vec3::ZENITH).unwrap();
        for i in 0..a.len() {
            let rel = (a.values()[i] - b.values()[i]).abs() / a.values()[i];
            assert!(rel < 1e-6, "{i}: {rel}");
        }
    }

    #[test]
    fn viewer_above_the_atmosphere_is_unsupported() {
        let p = default_params();
        let err = build_haber(&p, Vec3::ZENITH, HaberConfig { observer_altitude_km: 80.0, ..HaberConfig::coarse() }).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
