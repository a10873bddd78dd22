//! Single scattering with a few view samples and closed-form optical
//! depths for both the view and the sun transmittance.

use crate::atmosphere::geometry::hits_ground;
use crate::atmosphere::{chapman_column, chapman_segment, cornette_shanks, rayleigh_phase_value, AtmosphereParams, Coefficients};
use crate::error::invalid;
use crate::math::Vec3;
use crate::spectrum::WavelengthGrid;
use crate::Result;

use super::common::{check_directions, check_finite, check_out, ViewRay};
use super::{ModelKind, SkyModel, SkySource};

#[derive(Debug, Clone)]
pub struct ONealModel {
    params: AtmosphereParams,
    coef: Coefficients,
    samples: usize,
}

pub const DEFAULT_ONEAL_SAMPLES: usize = 4;

pub fn build_oneal(params: &AtmosphereParams, samples: usize) -> Result<ONealModel> {
    if samples < 2 {
        return Err(invalid!("oneal needs at least 2 samples, got {samples}"));
    }
    Ok(ONealModel { params: params.clone(), coef: params.coefficients()?, samples })
}

impl ONealModel {
    pub fn samples(&self) -> usize {
        self.samples
    }
}

impl SkySource for ONealModel {
    fn grid(&self) -> &WavelengthGrid {
        &self.coef.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        let (view, sun) = check_directions(view, sun)?;
        check_out(&self.coef.grid, out)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let p = &self.params;
        let c = &self.coef;
        let Some(ray) = ViewRay::new(p, 0.0, view, sun) else {
            return Ok(());
        };
        let rg = p.r_ground();
        let (hr, hm) = (p.rayleigh_scale_height_km, p.aerosol_scale_height_km);
        let pr = rayleigh_phase_value(ray.nu);
        let pm = cornette_shanks(p.mie_asymmetry_g, ray.nu);
        let ds = ray.length() / self.samples as f64;
        let mut t = alloc::vec![0.0; c.len()];
        for k in 0..self.samples {
            let s = ray.sample(p, ray.start + (k as f64 + 0.5) * ds);
            if hits_ground(s.r, s.mu_s, rg) {
                continue;
            }
            let view_col = [chapman_segment(ray.r0, ray.mu, s.d, hr, rg), chapman_segment(ray.r0, ray.mu, s.d, hm, rg)];
            let sun_col = [chapman_column(s.r, s.mu_s, hr, rg), chapman_column(s.r, s.mu_s, hm, rg)];
            c.transmittance_into([view_col[0] + sun_col[0], view_col[1] + sun_col[1]], &mut t);
            for i in 0..c.len() {
                out[i] += ds * t[i] * c.solar[i] * (c.rayleigh[i] * s.rho[0] * pr + c.mie_scattering[i] * s.rho[1] * pm);
            }
        }
        check_finite(out)
    }
}

impl SkyModel for ONealModel {
    fn kind(&self) -> ModelKind {
        ModelKind::ONeal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::to_radians;
    use crate::models::nishita93::tests::single_scattering_oracle;

    #[test]
    fn many_samples_converge_to_the_oracle() {
        let p = default_params();
        let m = build_oneal(&p, 64).unwrap();
        let sun = Vec3::from_angles(to_radians(40.0), 0.0);
        for &(vz, va) in &[(0.0, 0.0), (60.0, 180.0), (80.0, 30.0)] {
            let view = Vec3::from_angles(to_radians(vz), to_radians(va));
            let l = m.radiance(view, sun).unwrap();
            let o = single_scattering_oracle(&p, view, sun, 3000);
            for i in [0, 20, 39] {
                assert!((l.values()[i] / o[i] - 1.0).abs() < 0.03, "({vz},{va}) {i}");
            }
        }
    }

    #[test]
    fn two_samples_are_rejected_below_the_minimum() {
        let p = default_params();
        assert!(build_oneal(&p, 1).is_err());
        let m = build_oneal(&p, 2).unwrap();
        let l = m.radiance(Vec3::from_angles(1.0, 0.3), Vec3::from_angles(0.5, 0.0)).unwrap();
        assert!(l.values().iter().all(|&v| v >= 0.0));
    }
}
