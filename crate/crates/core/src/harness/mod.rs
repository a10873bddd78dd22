//! Evaluation outputs: fisheye maps, errors against references, luminance
//! profiles, irradiance series and image PSNR.

mod compare;
mod fisheye;
mod profile;

pub use compare::{compare, compare_dataset, compare_records, DatasetReport, DirectionError, ErrorReport, RMSE_BAND};
pub use fisheye::{
    direction_pixel, image_psnr, pixel_direction, relative_error_map, render_fisheye, FisheyeImage, MapMode, RenderOptions,
    SpectralPath,
};
pub use profile::{irradiance_series, luminance_profile};

use crate::color::{reconstruct_spectrum, ColorMatchingTable, DaylightBasis, ThreeSampleRgb, RGB_CENTERS};
use crate::math::Vec3;
use crate::models::SkySource;
use crate::spectrum::WavelengthGrid;
use crate::Result;

/// A source whose spectra are rebuilt from its radiances at 680, 550 and
/// 440 nm through the daylight basis.
pub struct ReconstructedSky<'a> {
    pub inner: &'a dyn SkySource,
    pub converter: &'a ThreeSampleRgb,
    pub cmf: &'a ColorMatchingTable,
    pub basis: &'a DaylightBasis,
}

impl SkySource for ReconstructedSky<'_> {
    fn grid(&self) -> &WavelengthGrid {
        self.inner.grid()
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        let s = self.inner.radiance(view, sun)?;
        let [r, g, b] = RGB_CENTERS.map(|l| s.value_at(l));
        let rec = reconstruct_spectrum(r, g, b, self.converter, self.cmf, self.basis, self.inner.grid());
        out.copy_from_slice(rec.spectrum.values());
        Ok(())
    }
}
