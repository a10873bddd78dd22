//! Single scattering with a precomputed sun transmittance table sampled at
//! the intersections of constant optical depth spheres with cylinders
//! oriented towards the sun.

use alloc::vec::Vec;

use crate::atmosphere::geometry::{distance_to_top, hits_ground, radius_at};
use crate::atmosphere::{chapman_column, cornette_shanks, log_mean, rayleigh_phase_value, AtmosphereParams, Coefficients};
use crate::error::invalid;
use crate::math::{exp, sqrt, Vec3};
use crate::spectrum::WavelengthGrid;
use crate::Result;

use super::common::{check_directions_from, check_finite, check_out, constant_depth_radii, integrate_view, ViewRay};
use super::{ModelKind, SkyModel, SkySource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nishita93Config {
    pub spheres: usize,
    pub cylinders: usize,
    pub observer_altitude_km: f64,
}

impl Default for Nishita93Config {
    fn default() -> Self {
        Nishita93Config { spheres: 64, cylinders: 64, observer_altitude_km: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Nishita93Model {
    params: AtmosphereParams,
    coef: Coefficients,
    config: Nishita93Config,
    spheres: Vec<f64>,
    cylinders: Vec<f64>,
    /// `[D_R, D_M]` per (sphere, cylinder) on the sunward side, divided by
    /// the closed-form columns at the same point.
    front: Vec<[f64; 2]>,
    /// Same on the far side of the planet's meridian plane.
    back: Vec<[f64; 2]>,
}

pub fn build_nishita93(params: &AtmosphereParams, config: Nishita93Config) -> Result<Nishita93Model> {
    let coef = params.coefficients()?;
    if config.spheres < 2 || config.cylinders < 4 {
        return Err(invalid!("nishita93 needs at least 2 spheres and 4 cylinders"));
    }
    if !(config.observer_altitude_km >= 0.0 && config.observer_altitude_km.is_finite()) {
        return Err(invalid!("observer altitude must be a nonnegative number"));
    }
    let spheres = constant_depth_radii(params, config.spheres);
    let cylinders = cylinder_radii(params, config.cylinders);
    let rg = params.r_ground();
    let (ns, nc) = (spheres.len(), cylinders.len());
    let mut front = Vec::with_capacity(ns * nc);
    let mut back = Vec::with_capacity(ns * nc);
    for &r in &spheres {
        for &c in &cylinders {
            // Entries outside the sphere or inside the planet's shadow hold
            // the nearest valid value so that interpolation stays smooth.
            let cf = c.min(r);
            let mu = sqrt((1.0 - (cf / r) * (cf / r)).max(0.0));
            front.push(ratio(sun_ray_column(params, &spheres, r, mu), reference_columns(params, r, mu)));
            let cb = c.clamp(rg.min(r), r);
            let mu = -sqrt((1.0 - (cb / r) * (cb / r)).max(0.0));
            back.push(ratio(sun_ray_column(params, &spheres, r, mu), reference_columns(params, r, mu)));
        }
    }
    Ok(Nishita93Model { params: params.clone(), coef, config, spheres, cylinders, front, back })
}

fn cylinder_radii(params: &AtmosphereParams, n: usize) -> Vec<f64> {
    (0..n).map(|j| params.r_top() * j as f64 / (n - 1) as f64).collect()
}

/// Closed-form columns used to normalize the table entries: the stored
/// ratios vary far more slowly across the cylinders than the columns do.
fn reference_columns(params: &AtmosphereParams, r: f64, mu: f64) -> [f64; 2] {
    let rg = params.r_ground();
    [
        chapman_column(r, mu, params.rayleigh_scale_height_km, rg),
        chapman_column(r, mu, params.aerosol_scale_height_km, rg),
    ]
}

fn ratio(col: [f64; 2], reference: [f64; 2]) -> [f64; 2] {
    [col[0] / reference[0], col[1] / reference[1]]
}

/// Relative density columns along a sun ray from `(r, mu)` to the top,
/// integrated between its crossings with the layer spheres.
fn sun_ray_column(params: &AtmosphereParams, spheres: &[f64], r: f64, mu: f64) -> [f64; 2] {
    let rg = params.r_ground();
    let d_top = distance_to_top(r, mu, params.r_top());
    let mut ds: Vec<f64> = Vec::with_capacity(2 * spheres.len() + 3);
    ds.push(0.0);
    ds.push(d_top);
    if mu < 0.0 {
        ds.push(-r * mu);
    }
    for &rk in spheres {
        let disc = r * r * (mu * mu - 1.0) + rk * rk;
        if disc < 0.0 {
            continue;
        }
        let s = sqrt(disc);
        for d in [-r * mu - s, -r * mu + s] {
            if d > 1e-9 && d < d_top - 1e-9 {
                ds.push(d);
            }
        }
    }
    ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dens = |d: f64| {
        let h = (radius_at(r, mu, d) - rg).max(0.0);
        [params.rayleigh_density(h), params.aerosol_density(h)]
    };
    let mut out = [0.0; 2];
    let mut a = dens(ds[0]);
    for k in 1..ds.len() {
        let step = ds[k] - ds[k - 1];
        // each layer interval is split once more to follow the curvature of
        // the density along slanted rays
        let mid = dens(ds[k - 1] + 0.5 * step);
        let b = dens(ds[k]);
        for c in 0..2 {
            out[c] += 0.5 * step * (log_mean(a[c], mid[c]) + log_mean(mid[c], b[c]));
        }
        a = b;
    }
    out
}

impl Nishita93Model {
    pub fn config(&self) -> Nishita93Config {
        self.config
    }

    /// Radii of the constant optical depth spheres, ground first.
    pub(crate) fn layer_radii(&self) -> &[f64] {
        &self.spheres
    }

    fn sphere_index(&self, r: f64) -> f64 {
        let h = (r - self.params.r_ground()).max(0.0);
        let hr = self.params.rayleigh_scale_height_km;
        let span = 1.0 - exp(-self.params.top_altitude_km / hr);
        let f = (1.0 - exp(-h / hr)) / span;
        (f * (self.spheres.len() - 1) as f64).clamp(0.0, (self.spheres.len() - 1) as f64)
    }

    fn cylinder_index(&self, c: f64) -> f64 {
        let cs = &self.cylinders;
        let n = cs.len();
        if c <= cs[0] {
            return 0.0;
        }
        if c >= cs[n - 1] {
            return (n - 1) as f64;
        }
        let j = cs.partition_point(|&x| x <= c) - 1;
        j as f64 + (c - cs[j]) / (cs[j + 1] - cs[j])
    }

    /// Sun columns at radius `r` and sun zenith cosine `mu_s`, or `None`
    /// in the planet's shadow.
    pub(crate) fn sun_columns(&self, r: f64, mu_s: f64) -> Option<[f64; 2]> {
        if hits_ground(r, mu_s, self.params.r_ground()) {
            return None;
        }
        let table = if mu_s >= 0.0 { &self.front } else { &self.back };
        let c = r * sqrt((1.0 - mu_s * mu_s).max(0.0));
        let fi = self.sphere_index(r);
        let fj = self.cylinder_index(c);
        let nc = self.cylinders.len();
        let i = (fi as usize).min(self.spheres.len() - 2);
        let j = (fj as usize).min(nc - 2);
        let (ti, tj) = (fi - i as f64, fj - j as f64);
        let mut out = [0.0; 2];
        for (di, wi) in [(0, 1.0 - ti), (1, ti)] {
            for (dj, wj) in [(0, 1.0 - tj), (1, tj)] {
                let v = table[(i + di) * nc + j + dj];
                out[0] += wi * wj * v[0];
                out[1] += wi * wj * v[1];
            }
        }
        let reference = reference_columns(&self.params, r, mu_s);
        Some([out[0] * reference[0], out[1] * reference[1]])
    }
}

impl SkySource for Nishita93Model {
    fn grid(&self) -> &WavelengthGrid {
        &self.coef.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        let (view, sun) = check_directions_from(view, sun, self.config.observer_altitude_km > 0.0)?;
        check_out(&self.coef.grid, out)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let Some(ray) = ViewRay::new(&self.params, self.config.observer_altitude_km, view, sun) else {
            return Ok(());
        };
        let samples = ray.layer_samples(&self.params, &self.spheres);
        let c = &self.coef;
        let pr = rayleigh_phase_value(ray.nu);
        let pm = cornette_shanks(self.params.mie_asymmetry_g, ray.nu);
        let mut ts = alloc::vec![0.0; c.len()];
        integrate_view(
            c,
            &samples,
            |k, gr, gm| match self.sun_columns(samples[k].r, samples[k].mu_s) {
                None => {
                    gr.iter_mut().for_each(|v| *v = 0.0);
                    gm.iter_mut().for_each(|v| *v = 0.0);
                }
                Some(col) => {
                    c.transmittance_into(col, &mut ts);
                    for i in 0..ts.len() {
                        let e = c.solar[i] * ts[i];
                        gr[i] = e * c.rayleigh[i] * pr;
                        gm[i] = e * c.mie_scattering[i] * pm;
                    }
                }
            },
            out,
        );
        check_finite(out)
    }
}

impl SkyModel for Nishita93Model {
    fn kind(&self) -> ModelKind {
        ModelKind::Nishita93
    }
}

/// Natural logarithm of the optical depth ratio between two layers; used by
/// tests to check the constant depth spacing.
#[cfg(test)]
fn layer_depth(params: &AtmosphereParams, a: f64, b: f64) -> f64 {
    let h = params.rayleigh_scale_height_km;
    let rg = params.r_ground();
    h * (exp(-(a - rg) / h) - exp(-(b - rg) / h))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::{to_radians, PI};

    /// Brute-force single scattering: uniform view samples, each with its
    /// own dense sun-ray quadrature, no tables.
    pub(crate) fn single_scattering_oracle(p: &AtmosphereParams, view: Vec3, sun: Vec3, n: usize) -> Vec<f64> {
        let c = p.coefficients().unwrap();
        let rg = p.r_ground();
        let column = |r: f64, mu: f64, d: f64, m: usize| {
            let ds = d / m as f64;
            let mut col = [0.0; 2];
            for k in 0..m {
                let h = radius_at(r, mu, (k as f64 + 0.5) * ds) - rg;
                col[0] += p.rayleigh_density(h) * ds;
                col[1] += p.aerosol_density(h) * ds;
            }
            col
        };
        let d_view = distance_to_top(rg, view.z, p.r_top());
        let ds = d_view / n as f64;
        let nu = view.dot(sun);
        let pr = rayleigh_phase_value(nu);
        let pm = cornette_shanks(p.mie_asymmetry_g, nu);
        let mut out = alloc::vec![0.0; c.len()];
        let mut tv = alloc::vec![0.0; c.len()];
        let mut tsun = alloc::vec![0.0; c.len()];
        for k in 0..n {
            let d = (k as f64 + 0.5) * ds;
            let r = radius_at(rg, view.z, d);
            let mu_s = (rg * sun.z + d * nu) / r;
            if hits_ground(r, mu_s, rg) {
                continue;
            }
            let h = r - rg;
            c.transmittance_into(column(rg, view.z, d, 400), &mut tv);
            c.transmittance_into(column(r, mu_s, distance_to_top(r, mu_s, p.r_top()), 400), &mut tsun);
            for i in 0..c.len() {
                out[i] += ds
                    * tv[i]
                    * tsun[i]
                    * c.solar[i]
                    * (c.rayleigh[i] * p.rayleigh_density(h) * pr + c.mie_scattering[i] * p.aerosol_density(h) * pm);
            }
        }
        out
    }

    #[test]
    fn layers_have_equal_rayleigh_depth() {
        let p = default_params();
        let s = constant_depth_radii(&p, 64);
        let first = layer_depth(&p, s[0], s[1]);
        for w in s.windows(2) {
            assert!((layer_depth(&p, w[0], w[1]) / first - 1.0).abs() < 1e-9);
        }
        assert!((s[63] - p.r_top()).abs() < 1e-9 && s[0] == p.r_ground());
        let ratio = crate::math::ln(s[1] - s[0]) - crate::math::ln(s[63] - s[62]);
        assert!(ratio < 0.0);
    }

    #[test]
    fn matches_brute_force_oracle() {
        let p = default_params();
        let m = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let sun = Vec3::from_angles(to_radians(40.0), 0.0);
        for &(vz, va) in &[(0.0, 0.0), (30.0, 90.0), (60.0, 180.0), (80.0, 45.0), (88.0, 120.0), (45.0, 10.0)] {
            let view = Vec3::from_angles(to_radians(vz), to_radians(va));
            let fast = m.radiance(view, sun).unwrap();
            let slow = single_scattering_oracle(&p, view, sun, 3000);
            for i in [0, 10, 20, 39] {
                let e = fast.values()[i] / slow[i] - 1.0;
                assert!(e.abs() < 0.01, "view ({vz},{va}) wl {i}: {} vs {} ({e})", fast.values()[i], slow[i]);
            }
        }
    }

    #[test]
    fn low_sun_matches_oracle() {
        let p = default_params();
        let m = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let sun = Vec3::from_angles(to_radians(85.0), 0.0);
        for &(vz, va) in &[(0.0, 0.0), (70.0, 0.0), (70.0, 180.0), (85.0, 90.0)] {
            let view = Vec3::from_angles(to_radians(vz), to_radians(va));
            let fast = m.radiance(view, sun).unwrap();
            let slow = single_scattering_oracle(&p, view, sun, 3000);
            for i in [0, 20, 39] {
                let e = fast.values()[i] / slow[i] - 1.0;
                assert!(e.abs() < 0.01, "view ({vz},{va}) wl {i}: {e}");
            }
        }
    }

    #[test]
    fn zenith_sun_is_azimuthally_symmetric() {
        let p = default_params();
        let m = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let a = m.radiance(Vec3::from_angles(PI / 2.0, 0.0), Vec3::ZENITH).unwrap();
        for k in 1..12 {
            let b = m.radiance(Vec3::from_angles(PI / 2.0, k as f64 * 0.5), Vec3::ZENITH).unwrap();
            for i in 0..40 {
                assert!((b.values()[i] / a.values()[i] - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sun_below_horizon_still_lights_the_upper_sky() {
        let p = default_params();
        let m = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let sun = Vec3::from_angles(to_radians(93.0), 0.0);
        let l = m.radiance(Vec3::from_angles(to_radians(80.0), 0.0), sun).unwrap();
        assert!(l.values().iter().all(|&v| v > 0.0 && v.is_finite()));
        assert!(m.radiance(Vec3::new(1.0, 0.0, -0.1), sun).is_err());
    }

    #[test]
    fn observer_above_the_atmosphere_sees_dark_space_overhead() {
        let p = default_params();
        let cfg = Nishita93Config { observer_altitude_km: 100.0, ..Default::default() };
        let m = build_nishita93(&p, cfg).unwrap();
        let space = m.radiance(Vec3::ZENITH, Vec3::ZENITH).unwrap();
        assert!(space.values().iter().all(|&v| v == 0.0));
    }
}
