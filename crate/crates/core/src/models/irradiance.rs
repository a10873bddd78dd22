//! Sky irradiance on a horizontal surface: cosine weighted hemisphere
//! quadrature of the sky radiance, without the solar disc.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{cos, sin, Vec3, PI};
use crate::spectrum::band_integral;
use crate::Result;

use super::SkySource;

/// Midpoint rule in zenith angle, uniform in azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IrradianceQuadrature {
    pub zenith: usize,
    pub azimuth: usize,
}

impl Default for IrradianceQuadrature {
    fn default() -> Self {
        IrradianceQuadrature { zenith: 32, azimuth: 64 }
    }
}

impl IrradianceQuadrature {
    /// View directions with their solid angle times cosine weights.
    pub fn nodes(&self) -> Vec<(Vec3, f64)> {
        let dt = 0.5 * PI / self.zenith as f64;
        let dp = 2.0 * PI / self.azimuth as f64;
        let mut out = Vec::with_capacity(self.zenith * self.azimuth);
        for i in 0..self.zenith {
            let th = (i as f64 + 0.5) * dt;
            let w = cos(th) * sin(th) * dt * dp;
            for j in 0..self.azimuth {
                out.push((Vec3::from_angles(th, (j as f64 + 0.5) * dp), w));
            }
        }
        out
    }

    /// Spectral irradiance of a radiance function filling per-wavelength
    /// values for a view direction.
    pub fn spectral<F>(&self, channels: usize, mut radiance: F) -> Result<Vec<f64>>
    where
        F: FnMut(Vec3, &mut [f64]) -> Result<()>,
    {
        if self.zenith == 0 || self.azimuth == 0 {
            return Err(invalid!("irradiance quadrature needs at least one node"));
        }
        let mut total = alloc::vec![0.0; channels];
        let mut l = alloc::vec![0.0; channels];
        for (v, w) in self.nodes() {
            l.iter_mut().for_each(|x| *x = 0.0);
            radiance(v, &mut l)?;
            for (t, x) in total.iter_mut().zip(&l) {
                *t += w * x;
            }
        }
        Ok(total)
    }
}

/// Spectral sky irradiance in W m^-2 nm^-1 per wavelength of the model grid.
pub fn sky_irradiance_spectrum(model: &dyn SkySource, sun: Vec3, quadrature: IrradianceQuadrature) -> Result<Vec<f64>> {
    quadrature.spectral(model.grid().len(), |v, out| model.radiance_into(v, sun, out))
}

/// Sky irradiance in W m^-2 integrated over `band` in nm.
pub fn sky_irradiance(model: &dyn SkySource, sun: Vec3, band: [f64; 2]) -> Result<f64> {
    let grid = model.grid();
    if !(band[0] < band[1]) || band[0] < grid.min() - 1e-9 || band[1] > grid.max() + 1e-9 {
        return Err(invalid!("band [{}, {}] nm outside the {}..{} nm grid", band[0], band[1], grid.min(), grid.max()));
    }
    let e = sky_irradiance_spectrum(model, sun, IrradianceQuadrature::default())?;
    Ok(band_integral(grid.as_slice(), &e, band[0], band[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::IsotropicSky;
    use crate::spectrum::WavelengthGrid;

    #[test]
    fn unit_isotropic_sky_gives_pi_per_nanometre() {
        let sky = IsotropicSky::new(WavelengthGrid::canonical(), 1.0);
        let e = sky_irradiance(&sky, Vec3::ZENITH, [400.0, 500.0]).unwrap();
        assert!((e / (100.0 * PI) - 1.0).abs() < 5e-3, "{e}");
    }

    #[test]
    fn band_outside_the_grid_is_rejected() {
        let sky = IsotropicSky::new(WavelengthGrid::canonical(), 1.0);
        assert!(sky_irradiance(&sky, Vec3::ZENITH, [300.0, 500.0]).is_err());
        assert!(sky_irradiance(&sky, Vec3::ZENITH, [500.0, 500.0]).is_err());
    }
}
