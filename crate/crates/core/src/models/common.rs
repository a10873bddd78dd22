//! Pieces shared by the physically based models.

use alloc::vec::Vec;

use crate::atmosphere::geometry::{distance_to_ground, distance_to_top, mu_at, radius_at};
use crate::atmosphere::{log_mean, AtmosphereParams, Coefficients};
use crate::error::invalid;
use crate::math::{exp, ln, sqrt, Vec3};
use crate::spectrum::WavelengthGrid;
use crate::{Error, Result};

use super::SkySource;

/// Unit view and sun vectors, rejecting views below the horizon.
pub(crate) fn check_directions(view: Vec3, sun: Vec3) -> Result<(Vec3, Vec3)> {
    check_directions_from(view, sun, false)
}

/// Same, with downward views allowed for elevated observers.
pub(crate) fn check_directions_from(view: Vec3, sun: Vec3, elevated: bool) -> Result<(Vec3, Vec3)> {
    let lv = view.length();
    let ls = sun.length();
    if !(lv > 0.0 && lv.is_finite() && ls > 0.0 && ls.is_finite()) {
        return Err(invalid!("view and sun directions must be finite and nonzero"));
    }
    let v = view * (1.0 / lv);
    if elevated {
        return Ok((v, sun * (1.0 / ls)));
    }
    if v.z < -1e-9 {
        return Err(invalid!("view direction below the horizon (z = {})", v.z));
    }
    Ok((Vec3::new(v.x, v.y, v.z.max(0.0)), sun * (1.0 / ls)))
}

pub(crate) fn check_out(grid: &WavelengthGrid, out: &[f64]) -> Result<()> {
    if out.len() != grid.len() {
        return Err(invalid!("output buffer has {} slots for {} wavelengths", out.len(), grid.len()));
    }
    Ok(())
}

pub(crate) fn check_finite(out: &[f64]) -> Result<()> {
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(alloc::string::String::from("non-finite radiance")));
    }
    Ok(())
}

/// `n` sphere radii bounding layers of equal Rayleigh optical depth, from
/// the ground (index 0) to the top of the atmosphere (index n-1).
pub(crate) fn constant_depth_radii(params: &AtmosphereParams, n: usize) -> Vec<f64> {
    let h = params.rayleigh_scale_height_km;
    let span = 1.0 - exp(-params.top_altitude_km / h);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                return params.r_top();
            }
            let f = i as f64 / (n - 1) as f64;
            params.r_ground() - h * ln(1.0 - f * span)
        })
        .collect()
}

/// A point on a view ray with the quantities the integrators need.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ViewSample {
    pub d: f64,
    pub r: f64,
    /// Cosine between the local vertical and the sun.
    pub mu_s: f64,
    /// Relative Rayleigh and aerosol densities.
    pub rho: [f64; 2],
    /// Natural log of `rho`.
    pub log_rho: [f64; 2],
}

/// The part of a view ray inside the atmosphere, as distances from the
/// observer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ViewRay {
    pub r0: f64,
    pub mu: f64,
    pub nu: f64,
    pub mu_s0: f64,
    pub start: f64,
    pub end: f64,
}

impl ViewRay {
    /// `None` when the ray never enters the atmosphere.
    pub fn new(params: &AtmosphereParams, observer_altitude: f64, view: Vec3, sun: Vec3) -> Option<Self> {
        let rg = params.r_ground();
        let rt = params.r_top();
        let r0 = rg + observer_altitude.max(0.0);
        let mu = view.z;
        let start = if r0 > rt {
            let disc = r0 * r0 * (mu * mu - 1.0) + rt * rt;
            if mu >= 0.0 || disc <= 0.0 {
                return None;
            }
            -r0 * mu - sqrt(disc)
        } else {
            0.0
        };
        let end = match distance_to_ground(r0, mu, rg) {
            Some(d) => d,
            None if r0 > rt => -r0 * mu + sqrt((r0 * r0 * (mu * mu - 1.0) + rt * rt).max(0.0)),
            None => distance_to_top(r0, mu, rt),
        };
        Some(ViewRay { r0, mu, nu: view.dot(sun), mu_s0: sun.z, start, end })
    }

    /// Ray from radius `r` with zenith cosine `mu` inside the atmosphere,
    /// for a sun at zenith cosine `mu_s` and view-sun cosine `nu`.
    pub fn from_radius(params: &AtmosphereParams, r: f64, mu: f64, mu_s: f64, nu: f64) -> Self {
        let end = distance_to_ground(r, mu, params.r_ground()).unwrap_or_else(|| distance_to_top(r, mu, params.r_top()));
        ViewRay { r0: r, mu, nu, mu_s0: mu_s, start: 0.0, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn sample(&self, params: &AtmosphereParams, d: f64) -> ViewSample {
        let r = radius_at(self.r0, self.mu, d);
        let mu_s = ((self.r0 * self.mu_s0 + d * self.nu) / r).clamp(-1.0, 1.0);
        let h = (r - params.r_ground()).max(0.0);
        let log_rho = [-h / params.rayleigh_scale_height_km, -h / params.aerosol_scale_height_km];
        ViewSample { d, r, mu_s, rho: [exp(log_rho[0]), exp(log_rho[1])], log_rho }
    }

    #[allow(dead_code)]
    pub fn mu_at(&self, d: f64, r: f64) -> f64 {
        mu_at(self.r0, self.mu, d, r)
    }

    /// Samples where the ray crosses the given spheres, plus both ends.
    pub fn layer_samples(&self, params: &AtmosphereParams, radii: &[f64]) -> Vec<ViewSample> {
        let mut ds: Vec<f64> = Vec::with_capacity(2 * radii.len() + 2);
        ds.push(self.start);
        ds.push(self.end);
        let r0 = self.r0;
        let mu = self.mu;
        for &rk in radii {
            let disc = r0 * r0 * (mu * mu - 1.0) + rk * rk;
            if disc < 0.0 {
                continue;
            }
            let s = sqrt(disc);
            for d in [-r0 * mu - s, -r0 * mu + s] {
                if d > self.start + 1e-9 && d < self.end - 1e-9 {
                    ds.push(d);
                }
            }
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        ds.into_iter().map(|d| self.sample(params, d)).collect()
    }

    /// `n` uniformly spaced samples over the whole ray.
    pub fn uniform_samples(&self, params: &AtmosphereParams, n: usize) -> Vec<ViewSample> {
        let ds = self.length() / (n.max(2) - 1) as f64;
        (0..n.max(2)).map(|i| self.sample(params, self.start + i as f64 * ds)).collect()
    }
}

/// Integrates `T_view(s) (ρ_R(s) g_R(s) + ρ_M(s) g_M(s))` along the samples,
/// where `g` fills the per-wavelength Rayleigh and aerosol source factors
/// of sample `k`. Density times view transmittance is integrated as an
/// exponential between samples, the remaining factors linearly. The result
/// is added to `out`.
pub(crate) fn integrate_view<F>(coef: &Coefficients, samples: &[ViewSample], g: F, out: &mut [f64])
where
    F: FnMut(usize, &mut [f64], &mut [f64]),
{
    let mut mie = alloc::vec![0.0; out.len()];
    integrate_view_parts(coef, samples, g, out, &mut mie);
    for (o, m) in out.iter_mut().zip(&mie) {
        *o += m;
    }
}

/// Logarithmic mean of `x` and `y` given `l = ln(x / y)`.
fn exp_mean(x: f64, y: f64, l: f64) -> f64 {
    if l.abs() < 1e-6 {
        0.5 * (x + y)
    } else {
        (x - y) / l
    }
}

/// [`integrate_view`] with the Rayleigh and aerosol terms added to separate
/// outputs.
pub(crate) fn integrate_view_parts<F>(
    coef: &Coefficients,
    samples: &[ViewSample],
    mut g: F,
    out_r: &mut [f64],
    out_m: &mut [f64],
) where
    F: FnMut(usize, &mut [f64], &mut [f64]),
{
    let n = coef.len();
    if samples.len() < 2 {
        return;
    }
    let mut ga = [alloc::vec![0.0; n], alloc::vec![0.0; n]];
    let mut gb = [alloc::vec![0.0; n], alloc::vec![0.0; n]];
    // optical depths and transmittances at the interval ends
    let mut ta = alloc::vec![0.0; n];
    let mut tb = alloc::vec![0.0; n];
    let mut ea = alloc::vec![1.0; n];
    let mut eb = alloc::vec![0.0; n];
    let mut col = [0.0; 2];
    {
        let [r, m] = &mut ga;
        g(0, r, m);
    }
    for k in 1..samples.len() {
        let a = &samples[k - 1];
        let b = &samples[k];
        let ds = b.d - a.d;
        col[0] += log_mean(a.rho[0], b.rho[0]) * ds;
        col[1] += log_mean(a.rho[1], b.rho[1]) * ds;
        for i in 0..n {
            tb[i] = coef.rayleigh[i] * col[0] + coef.mie_extinction[i] * col[1];
            eb[i] = exp(-tb[i]);
        }
        {
            let [r, m] = &mut gb;
            g(k, r, m);
        }
        // the log of the integrand ratio is known without a logarithm
        let (lr, lm) = (a.log_rho[0] - b.log_rho[0], a.log_rho[1] - b.log_rho[1]);
        for i in 0..n {
            let dt = tb[i] - ta[i];
            let wr = exp_mean(a.rho[0] * ea[i], b.rho[0] * eb[i], lr + dt);
            let wm = exp_mean(a.rho[1] * ea[i], b.rho[1] * eb[i], lm + dt);
            out_r[i] += 0.5 * ds * wr * (ga[0][i] + gb[0][i]);
            out_m[i] += 0.5 * ds * wm * (ga[1][i] + gb[1][i]);
        }
        core::mem::swap(&mut ea, &mut eb);
        core::mem::swap(&mut ga, &mut gb);
        core::mem::swap(&mut ta, &mut tb);
    }
}

/// Sky of constant radiance, handy as a synthetic source.
#[derive(Debug, Clone)]
pub struct IsotropicSky {
    grid: WavelengthGrid,
    value: f64,
}

impl IsotropicSky {
    pub fn new(grid: WavelengthGrid, value: f64) -> Self {
        IsotropicSky { grid, value }
    }
}

impl SkySource for IsotropicSky {
    fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        check_directions(view, sun)?;
        check_out(&self.grid, out)?;
        out.iter_mut().for_each(|v| *v = self.value);
        Ok(())
    }
}
