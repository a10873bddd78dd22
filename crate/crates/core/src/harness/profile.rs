//! Vertical luminance profiles and irradiance time series.

use alloc::string::String;
use alloc::vec::Vec;

use crate::color::{luminance, ColorMatchingTable};
use crate::dataset::SunEphemeris;
use crate::error::invalid;
use crate::math::{to_radians, Vec3};
use crate::models::{sky_irradiance, SkyBuilder, SkySource};
use crate::Result;

/// Luminance in cd m^-2 along the vertical plane of azimuth
/// `plane_azimuth_deg`, from the horizon at -90 degrees (opposite azimuth)
/// through the zenith to the horizon at +90 degrees, every `step_deg`.
pub fn luminance_profile(
    source: &dyn SkySource,
    sun: Vec3,
    plane_azimuth_deg: f64,
    step_deg: f64,
    cmf: &ColorMatchingTable,
) -> Result<Vec<(f64, f64)>> {
    if !(step_deg > 0.0 && step_deg <= 1.0) {
        return Err(invalid!("profile step must be in (0, 1] degree"));
    }
    let n = ceil_count(180.0 / step_deg);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let signed = -90.0 + 180.0 * k as f64 / n as f64;
        let az = if signed < 0.0 { plane_azimuth_deg + 180.0 } else { plane_azimuth_deg };
        let v = Vec3::from_angles(to_radians(signed.abs()), to_radians(az));
        out.push((signed, luminance(&source.radiance(v, sun)?, cmf)?));
    }
    Ok(out)
}

fn ceil_count(x: f64) -> usize {
    let f = crate::math::floor(x);
    (if f < x - 1e-9 { f + 1.0 } else { f }) as usize
}

/// Sky irradiance in W m^-2 over `band` at every ephemeris time.
pub fn irradiance_series(builder: &dyn SkyBuilder, ephemeris: &SunEphemeris, band: [f64; 2]) -> Result<Vec<(String, f64)>> {
    ephemeris
        .entries()
        .iter()
        .map(|e| {
            let sun = e.sun_direction();
            let model = builder.model_for_sun(sun)?;
            Ok((e.time.clone(), sky_irradiance(model.as_ref(), sun, band)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::test_support::analytic_cmf;
    use crate::models::{IsotropicSky, SkyModel, ModelKind, Shared};
    use crate::spectrum::WavelengthGrid;
    use alloc::sync::Arc;

    #[test]
    fn isotropic_profile_is_flat_and_spans_the_plane() {
        let g = WavelengthGrid::canonical();
        let cmf = analytic_cmf(&g);
        let p = luminance_profile(&IsotropicSky::new(g, 0.1), Vec3::ZENITH, 30.0, 1.0, &cmf).unwrap();
        assert_eq!(p.len(), 181);
        assert_eq!(p[0].0, -90.0);
        assert_eq!(p[180].0, 90.0);
        assert!(p.iter().all(|x| (x.1 - p[0].1).abs() < 1e-9 * p[0].1));
    }

    struct Flat(IsotropicSky);
    impl SkySource for Flat {
        fn grid(&self) -> &WavelengthGrid {
            self.0.grid()
        }
        fn radiance_into(&self, v: Vec3, s: Vec3, out: &mut [f64]) -> Result<()> {
            self.0.radiance_into(v, s, out)
        }
    }
    impl SkyModel for Flat {
        fn kind(&self) -> ModelKind {
            ModelKind::Preetham
        }
    }

    #[test]
    fn empty_ephemeris_gives_an_empty_series() {
        let b = Shared(Arc::new(Flat(IsotropicSky::new(WavelengthGrid::canonical(), 1.0))));
        let e = SunEphemeris::new(Vec::new()).unwrap();
        assert!(irradiance_series(&b, &e, [360.0, 720.0]).unwrap().is_empty());
    }
}
