use crate::error::invalid;
use crate::math::{erfcx, exp, sqrt, PI};
use crate::spectrum::{Quantity, Spectrum};
use crate::Result;

use super::AtmosphereParams;

/// Ray–sphere relations for rays starting at radius `r` with zenith cosine
/// `mu` (planet centre at the origin, km).
pub mod geometry {
    use crate::math::sqrt;

    /// Radius reached after travelling `d` along the ray.
    #[inline]
    pub fn radius_at(r: f64, mu: f64, d: f64) -> f64 {
        sqrt((d * d + 2.0 * r * mu * d + r * r).max(0.0))
    }

    /// Zenith cosine of the ray at distance `d`, where the radius is `r_d`.
    #[inline]
    pub fn mu_at(r: f64, mu: f64, d: f64, r_d: f64) -> f64 {
        if r_d <= 0.0 {
            return 1.0;
        }
        ((r * mu + d) / r_d).clamp(-1.0, 1.0)
    }

    /// Distance to the outer sphere of radius `r_top` (`r <= r_top`).
    #[inline]
    pub fn distance_to_top(r: f64, mu: f64, r_top: f64) -> f64 {
        let disc = r * r * (mu * mu - 1.0) + r_top * r_top;
        (-r * mu + sqrt(disc.max(0.0))).max(0.0)
    }

    /// Whether the ray hits the ground sphere. Tangent rays count as sky.
    #[inline]
    pub fn hits_ground(r: f64, mu: f64, r_ground: f64) -> bool {
        mu < 0.0 && r * r * (mu * mu - 1.0) + r_ground * r_ground > 0.0
    }

    /// Distance to the ground sphere, if hit.
    #[inline]
    pub fn distance_to_ground(r: f64, mu: f64, r_ground: f64) -> Option<f64> {
        if hits_ground(r, mu, r_ground) {
            let disc = r * r * (mu * mu - 1.0) + r_ground * r_ground;
            Some((-r * mu - sqrt(disc)).max(0.0))
        } else {
            None
        }
    }
}

/// A straight segment inside the atmosphere, starting at a given altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPath {
    pub origin_altitude_km: f64,
    pub cos_zenith: f64,
    pub length_km: f64,
    /// The segment ends on the ground.
    pub ground_hit: bool,
}

impl RayPath {
    /// From `altitude` along `mu` up to the top boundary or the ground.
    pub fn to_boundary(params: &AtmosphereParams, altitude_km: f64, mu: f64) -> Result<Self> {
        check_origin(params, altitude_km, mu)?;
        let r = params.r_ground() + altitude_km;
        Ok(match geometry::distance_to_ground(r, mu, params.r_ground()) {
            Some(d) => RayPath { origin_altitude_km: altitude_km, cos_zenith: mu, length_km: d, ground_hit: true },
            None => RayPath {
                origin_altitude_km: altitude_km,
                cos_zenith: mu,
                length_km: geometry::distance_to_top(r, mu, params.r_top()),
                ground_hit: false,
            },
        })
    }

    /// A segment of explicit length; rejected if it passes below the ground.
    pub fn segment(params: &AtmosphereParams, altitude_km: f64, mu: f64, length_km: f64) -> Result<Self> {
        check_origin(params, altitude_km, mu)?;
        if !(length_km >= 0.0) {
            return Err(invalid!("path length must be nonnegative"));
        }
        let r = params.r_ground() + altitude_km;
        let mut ground_hit = false;
        if let Some(d) = geometry::distance_to_ground(r, mu, params.r_ground()) {
            if length_km > d * (1.0 + 1e-12) + 1e-9 {
                return Err(invalid!("path of {length_km} km passes below the planet surface after {d} km"));
            }
            ground_hit = length_km >= d - 1e-9;
        }
        Ok(RayPath { origin_altitude_km: altitude_km, cos_zenith: mu, length_km, ground_hit })
    }

    fn origin_radius(&self, params: &AtmosphereParams) -> f64 {
        params.r_ground() + self.origin_altitude_km
    }

    /// Altitude after `s` km along the path.
    pub fn altitude_at(&self, params: &AtmosphereParams, s: f64) -> f64 {
        geometry::radius_at(self.origin_radius(params), self.cos_zenith, s) - params.r_ground()
    }

    /// The part of this path starting `s` km from its origin.
    pub fn tail(&self, params: &AtmosphereParams, s: f64) -> RayPath {
        let r = self.origin_radius(params);
        let r_s = geometry::radius_at(r, self.cos_zenith, s);
        RayPath {
            origin_altitude_km: r_s - params.r_ground(),
            cos_zenith: geometry::mu_at(r, self.cos_zenith, s, r_s),
            length_km: (self.length_km - s).max(0.0),
            ground_hit: self.ground_hit,
        }
    }

    /// The first `s` km of this path.
    pub fn head(&self, s: f64) -> RayPath {
        RayPath { length_km: s.min(self.length_km), ground_hit: self.ground_hit && s >= self.length_km, ..*self }
    }
}

fn check_origin(params: &AtmosphereParams, altitude_km: f64, mu: f64) -> Result<()> {
    if !(altitude_km >= 0.0) || altitude_km > params.top_altitude_km + 1e-9 {
        return Err(invalid!("path origin altitude {altitude_km} km outside the atmosphere"));
    }
    if !(-1.0..=1.0).contains(&mu) {
        return Err(invalid!("zenith cosine {mu} outside [-1, 1]"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Rayleigh,
    Aerosol,
}

/// Relative density column (km) along the path. Between samples the density
/// is taken to vary exponentially (the trapezoid rule on its logarithm), so
/// vertical columns of exponential profiles are exact at any sample count.
fn density_column(path: &RayPath, params: &AtmosphereParams, component: Component, samples: usize) -> f64 {
    if path.length_km == 0.0 {
        return 0.0;
    }
    let n = samples.max(2);
    let ds = path.length_km / (n - 1) as f64;
    let density = |i: usize| {
        let h = path.altitude_at(params, i as f64 * ds).max(0.0);
        match component {
            Component::Rayleigh => params.rayleigh_density(h),
            Component::Aerosol => params.aerosol_density(h),
        }
    };
    let mut sum = 0.0;
    let mut a = density(0);
    for i in 1..n {
        let b = density(i);
        sum += log_mean(a, b);
        a = b;
    }
    sum * ds
}

/// Mean of an exponential through `a` and `b` over a unit interval.
#[inline]
pub(crate) fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * (a + b);
    }
    let r = a / b;
    if (r - 1.0).abs() < 1e-6 {
        0.5 * (a + b)
    } else {
        (a - b) / crate::math::ln(r)
    }
}

/// Optical depth of one component along the path, per wavelength.
pub fn optical_depth(path: &RayPath, params: &AtmosphereParams, component: Component, samples: usize) -> Result<Spectrum> {
    if samples < 2 {
        return Err(invalid!("optical depth needs at least 2 samples"));
    }
    let c = params.coefficients()?;
    let column = density_column(path, params, component, samples);
    let k = match component {
        Component::Rayleigh => &c.rayleigh,
        Component::Aerosol => &c.mie_extinction,
    };
    Spectrum::new(c.grid, k.iter().map(|b| b * column).collect(), Quantity::Coefficient)
}

/// `exp(-τ_R - τ_M)` per wavelength with numerically integrated depths.
pub fn transmittance(path: &RayPath, params: &AtmosphereParams, samples: usize) -> Result<Spectrum> {
    if samples < 2 {
        return Err(invalid!("transmittance needs at least 2 samples"));
    }
    let c = params.coefficients()?;
    let cols = [
        density_column(path, params, Component::Rayleigh, samples),
        density_column(path, params, Component::Aerosol, samples),
    ];
    let mut out = alloc::vec![0.0; c.len()];
    c.transmittance_into(cols, &mut out);
    Spectrum::new(c.grid, out, Quantity::Ratio)
}

/// Relative density column (km) from radius `r` along zenith cosine `mu` to
/// infinity for an exponential profile of scale height `h` above a sphere of
/// radius `r_ground`, in closed form.
///
/// Above the horizon this is the asymptotic Chapman grazing-incidence
/// function `sqrt(pi x / 2) erfcx(sqrt(x / 2) mu)` with `x = r / h`. Below
/// the horizon the ray is folded at its tangent point. Callers must not pass
/// rays that hit the ground.
pub fn chapman_column(r: f64, mu: f64, h: f64, r_ground: f64) -> f64 {
    let x = r / h;
    let up = |x: f64, mu: f64| sqrt(0.5 * PI * x) * erfcx(sqrt(0.5 * x) * mu);
    if mu >= 0.0 {
        h * exp(-(r - r_ground) / h) * up(x, mu)
    } else {
        let r_t = r * sqrt(1.0 - mu * mu);
        let tangent = 2.0 * h * exp(-(r_t - r_ground) / h) * sqrt(0.5 * PI * r_t / h);
        (tangent - h * exp(-(r - r_ground) / h) * up(x, -mu)).max(0.0)
    }
}

fn analytic_column(path: &RayPath, params: &AtmosphereParams, h: f64) -> f64 {
    if path.length_km == 0.0 {
        return 0.0;
    }
    let rg = params.r_ground();
    chapman_segment(rg + path.origin_altitude_km, path.cos_zenith, path.length_km, h, rg)
}

/// Closed-form relative density column over the first `d` km of the ray
/// `(r, mu)`.
pub(crate) fn chapman_segment(r: f64, mu: f64, d: f64, h: f64, rg: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    let r_d = geometry::radius_at(r, mu, d);
    let mu_d = geometry::mu_at(r, mu, d, r_d);
    let col = if geometry::hits_ground(r, mu, rg) {
        // Integrate the reversed ray, which rises from the far end.
        chapman_column(r_d.max(rg), -mu_d, h, rg) - chapman_column(r, -mu, h, rg)
    } else {
        chapman_column(r, mu, h, rg) - chapman_column(r_d, mu_d, h, rg)
    };
    col.max(0.0)
}

/// Closed-form transmittance along the path (no inner quadrature).
pub fn analytic_transmittance(path: &RayPath, params: &AtmosphereParams) -> Result<Spectrum> {
    let c = params.coefficients()?;
    let cols = [
        analytic_column(path, params, params.rayleigh_scale_height_km),
        analytic_column(path, params, params.aerosol_scale_height_km),
    ];
    let mut out = alloc::vec![0.0; c.len()];
    c.transmittance_into(cols, &mut out);
    Spectrum::new(c.grid, out, Quantity::Ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::{cos, to_radians};

    #[test]
    fn zero_length_paths() {
        let p = default_params();
        let path = RayPath::segment(&p, 1.0, 0.3, 0.0).unwrap();
        assert!(optical_depth(&path, &p, Component::Rayleigh, 64).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(transmittance(&path, &p, 64).unwrap().values().iter().all(|&v| v == 1.0));
        assert!(analytic_transmittance(&path, &p).unwrap().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn vertical_aerosol_depth_matches_angstrom_law() {
        let p = default_params();
        let path = RayPath::to_boundary(&p, 0.0, 1.0).unwrap();
        assert!((path.length_km - 60.0).abs() < 1e-9);
        let tau = optical_depth(&path, &p, Component::Aerosol, 64).unwrap();
        for (&l, &t) in tau.grid().as_slice().iter().zip(tau.values()) {
            let expected = p.aerosol_optical_depth(l);
            assert!((t / expected - 1.0).abs() < 2e-3, "{l}: {t} vs {expected}");
        }
    }

    #[test]
    fn below_ground_paths_are_rejected() {
        let p = default_params();
        assert!(RayPath::segment(&p, 1.0, -1.0, 2.0).is_err());
        let hit = RayPath::to_boundary(&p, 1.0, -1.0).unwrap();
        assert!(hit.ground_hit && (hit.length_km - 1.0).abs() < 1e-9);
        // tangent ray from the ground counts as sky
        let tangent = RayPath::to_boundary(&p, 0.0, 0.0).unwrap();
        assert!(!tangent.ground_hit);
    }

    #[test]
    fn blue_is_attenuated_more_than_red() {
        let p = default_params();
        let path = RayPath::to_boundary(&p, 0.0, 1.0).unwrap();
        let t = transmittance(&path, &p, 64).unwrap();
        assert!(t.value_at(440.0) < t.value_at(680.0));
    }

    #[test]
    fn analytic_transmittance_tracks_quadrature() {
        let p = default_params();
        for &z in &[0.0, 30.0, 60.0, 75.0, 80.0, 85.0] {
            let path = RayPath::to_boundary(&p, 0.0, cos(to_radians(z))).unwrap();
            let numeric = transmittance(&path, &p, 64).unwrap();
            let analytic = analytic_transmittance(&path, &p).unwrap();
            for (a, n) in analytic.values().iter().zip(numeric.values()) {
                assert!((a / n - 1.0).abs() < 0.05, "zenith {z}: {a} vs {n}");
                assert!(*a > 0.0 && *a <= 1.0);
            }
        }
        // segments that end on the ground, seen from above
        let path = RayPath::to_boundary(&p, 5.0, -0.5).unwrap();
        let numeric = transmittance(&path, &p, 512).unwrap();
        let analytic = analytic_transmittance(&path, &p).unwrap();
        for (a, n) in analytic.values().iter().zip(numeric.values()) {
            assert!((a / n - 1.0).abs() < 0.01, "{a} vs {n}");
        }
    }
}
