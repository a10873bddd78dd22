//! Equal-angle fisheye maps of the upper hemisphere: zenith at the centre,
//! horizon on the rim, azimuth counterclockwise from the +x image axis.

use alloc::vec::Vec;

use crate::color::{
    chromaticity_rg, spectrum_to_srgb, tone_map_constant, tone_map_encoded, ColorMatchingTable, ColorTriple, ThreeSampleRgb,
    LUMINOUS_EFFICACY,
};
use crate::error::invalid;
use crate::math::{atan2, sqrt, Vec3, PI};
use crate::models::SkySource;
use crate::spectrum::Spectrum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    /// Tone mapped, gamma encoded sRGB in [0, 1].
    RadianceRgb,
    /// Luminance in cd m^-2.
    AbsLuminance,
    /// Luminance in percent of the zenith luminance.
    RelLuminance,
    /// sRGB divided by its largest component.
    Chromaticity,
    /// Relative error in percent of band-summed radiance.
    RelativeError,
}

impl MapMode {
    pub fn channels(self) -> usize {
        match self {
            MapMode::RadianceRgb | MapMode::Chromaticity => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapMode::RadianceRgb => "radiance-rgb",
            MapMode::AbsLuminance => "abs-luminance",
            MapMode::RelLuminance => "rel-luminance",
            MapMode::Chromaticity => "chromaticity",
            MapMode::RelativeError => "relative-error",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [MapMode::RadianceRgb, MapMode::AbsLuminance, MapMode::RelLuminance, MapMode::Chromaticity, MapMode::RelativeError]
            .into_iter()
            .find(|m| m.name() == name)
    }
}

/// How a radiance spectrum becomes a colour.
#[derive(Debug, Clone, Copy)]
pub enum SpectralPath<'a> {
    /// Colour matching over every wavelength.
    Full,
    /// Radiances at 680, 550 and 440 nm times precomputed constants.
    ThreeSample(&'a ThreeSampleRgb),
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions<'a> {
    pub mode: MapMode,
    pub size: usize,
    pub cmf: &'a ColorMatchingTable,
    pub path: SpectralPath<'a>,
    /// Tone mapping constant; by default the median disc luminance maps to
    /// one half before gamma.
    pub exposure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisheyeImage {
    size: usize,
    mode: MapMode,
    data: Vec<f64>,
    valid: Vec<bool>,
    sun: Vec3,
    exposure: Option<f64>,
}

/// Direction through the centre of pixel (column `i`, row `j`), `None`
/// outside the hemisphere disc.
pub fn pixel_direction(size: usize, i: f64, j: f64) -> Option<Vec3> {
    let s = size as f64;
    let x = 2.0 * i / s - 1.0;
    let y = 1.0 - 2.0 * j / s;
    let rho = sqrt(x * x + y * y);
    if rho > 1.0 {
        return None;
    }
    Some(Vec3::from_angles(0.5 * PI * rho, atan2(y, x)))
}

/// Continuous pixel coordinates (column, row) of an upper hemisphere
/// direction; pixel `(i, j)` covers `[i, i + 1) x [j, j + 1)`.
pub fn direction_pixel(size: usize, direction: Vec3) -> Option<(f64, f64)> {
    if direction.z < -1e-12 {
        return None;
    }
    let (zenith, azimuth) = direction.to_angles();
    let rho = zenith / (0.5 * PI);
    let x = rho * crate::math::cos(azimuth);
    let y = rho * crate::math::sin(azimuth);
    let s = size as f64;
    Some(((x + 1.0) * 0.5 * s, (1.0 - y) * 0.5 * s))
}

impl FisheyeImage {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mode(&self) -> MapMode {
        self.mode
    }

    pub fn channels(&self) -> usize {
        self.mode.channels()
    }

    pub fn sun(&self) -> Vec3 {
        self.sun
    }

    /// Pixel holding the sun, if it is above the horizon.
    pub fn sun_pixel(&self) -> Option<(usize, usize)> {
        let (x, y) = direction_pixel(self.size, self.sun)?;
        let m = self.size - 1;
        Some(((x as usize).min(m), (y as usize).min(m)))
    }

    pub fn exposure(&self) -> Option<f64> {
        self.exposure
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[j * self.size + i]
    }

    pub fn pixel(&self, i: usize, j: usize) -> Option<&[f64]> {
        let k = j * self.size + i;
        let c = self.channels();
        self.valid[k].then(|| &self.data[k * c..(k + 1) * c])
    }

    /// Builds an image from per-pixel values; `None` pixels are invalid.
    pub fn from_pixels(size: usize, mode: MapMode, sun: Vec3, mut f: impl FnMut(usize, usize, Vec3) -> Result<Option<[f64; 3]>>) -> Result<Self> {
        if size == 0 {
            return Err(invalid!("image size must be positive"));
        }
        let c = mode.channels();
        let mut data = alloc::vec![0.0; size * size * c];
        let mut valid = alloc::vec![false; size * size];
        for j in 0..size {
            for i in 0..size {
                let Some(v) = pixel_direction(size, i as f64 + 0.5, j as f64 + 0.5) else { continue };
                if let Some(p) = f(i, j, v)? {
                    let k = j * size + i;
                    data[k * c..(k + 1) * c].copy_from_slice(&p[..c]);
                    valid[k] = true;
                }
            }
        }
        Ok(FisheyeImage { size, mode, data, valid, sun, exposure: None })
    }
}

fn color_of(spectrum: &Spectrum, options: &RenderOptions) -> Result<ColorTriple> {
    match options.path {
        SpectralPath::Full => spectrum_to_srgb(spectrum, options.cmf),
        SpectralPath::ThreeSample(k) => Ok(k.rgb_of_spectrum(spectrum)),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite luminance"));
    if v.is_empty() {
        return 0.0;
    }
    v[v.len() / 2]
}

/// Renders a radiance source seen from the ground with the sun at `sun`.
pub fn render_fisheye(source: &dyn SkySource, sun: Vec3, options: &RenderOptions) -> Result<FisheyeImage> {
    let size = options.size;
    if size == 0 {
        return Err(invalid!("image size must be positive"));
    }
    // colours first, then the mode-specific payload
    let mut colors: Vec<Option<ColorTriple>> = alloc::vec![None; size * size];
    for j in 0..size {
        for i in 0..size {
            if let Some(v) = pixel_direction(size, i as f64 + 0.5, j as f64 + 0.5) {
                let s = source.radiance(v, sun)?;
                colors[j * size + i] = Some(color_of(&s, options)?);
            }
        }
    }
    let lum = |c: &ColorTriple| LUMINOUS_EFFICACY * c.y();
    let (zenith_lum, exposure) = match options.mode {
        MapMode::RelLuminance => {
            let z = lum(&color_of(&source.radiance(Vec3::ZENITH, sun)?, options)?);
            if !(z > 0.0) {
                return Err(Error::Numeric(alloc::string::String::from("zenith luminance is zero")));
            }
            (z, None)
        }
        MapMode::RadianceRgb => {
            let k = match options.exposure {
                Some(k) => k,
                None => tone_map_constant(median(colors.iter().flatten().map(|c| c.y()).collect()))?,
            };
            (0.0, Some(k))
        }
        MapMode::RelativeError => return Err(invalid!("relative error maps need a reference, see relative_error_map")),
        _ => (0.0, None),
    };
    let mut image = FisheyeImage::from_pixels(size, options.mode, sun, |i, j, _| {
        let Some(c) = colors[j * size + i] else { return Ok(None) };
        Ok(Some(match options.mode {
            MapMode::RadianceRgb => tone_map_encoded(c, exposure.expect("set above")),
            MapMode::AbsLuminance => [lum(&c), 0.0, 0.0],
            MapMode::RelLuminance => [100.0 * lum(&c) / zenith_lum, 0.0, 0.0],
            MapMode::Chromaticity => chromaticity_rg(c).c,
            MapMode::RelativeError => unreachable!(),
        }))
    })?;
    image.exposure = exposure;
    Ok(image)
}

/// Map of `100 |model - reference| / reference` on radiance summed over
/// `band`; pixels with a zero reference are invalid.
pub fn relative_error_map(model: &dyn SkySource, reference: &dyn SkySource, sun: Vec3, size: usize, band: [f64; 2]) -> Result<FisheyeImage> {
    FisheyeImage::from_pixels(size, MapMode::RelativeError, sun, |_, _, v| {
        let m = model.radiance(v, sun)?.band_sum(band[0], band[1]);
        let r = reference.radiance(v, sun)?.band_sum(band[0], band[1]);
        Ok((r > 0.0).then(|| [100.0 * (m - r).abs() / r, 0.0, 0.0]))
    })
}

/// Peak signal to noise ratio in dB of two images with values in [0, 1],
/// over pixels valid in both; identical images give infinity.
pub fn image_psnr(a: &FisheyeImage, b: &FisheyeImage) -> Result<f64> {
    if a.size != b.size || a.mode != b.mode {
        return Err(invalid!("images differ in size or mode"));
    }
    let c = a.channels();
    let (mut se, mut n) = (0.0, 0usize);
    for k in 0..a.size * a.size {
        if a.valid[k] && b.valid[k] {
            for ch in 0..c {
                let d = a.data[k * c + ch] - b.data[k * c + ch];
                se += d * d;
            }
            n += c;
        }
    }
    if n == 0 {
        return Err(invalid!("images share no valid pixel"));
    }
    if se == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * crate::math::log10(n as f64 / se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::test_support::analytic_cmf;
    use crate::models::IsotropicSky;
    use crate::spectrum::WavelengthGrid;
    use proptest::prelude::*;

    fn options(cmf: &ColorMatchingTable, mode: MapMode) -> RenderOptions<'_> {
        RenderOptions { mode, size: 24, cmf, path: SpectralPath::Full, exposure: None }
    }

    #[test]
    fn isotropic_sky_maps_are_flat() {
        let g = WavelengthGrid::canonical();
        let cmf = analytic_cmf(&g);
        let sky = IsotropicSky::new(g, 0.05);
        let img = render_fisheye(&sky, Vec3::ZENITH, &options(&cmf, MapMode::AbsLuminance)).unwrap();
        let first = img.pixel(12, 12).unwrap()[0];
        assert!(first > 0.0);
        for j in 0..24 {
            for i in 0..24 {
                if let Some(p) = img.pixel(i, j) {
                    assert!((p[0] - first).abs() < 1e-9 * first);
                }
            }
        }
        assert!(!img.is_valid(0, 0));
        let rel = render_fisheye(&sky, Vec3::ZENITH, &options(&cmf, MapMode::RelLuminance)).unwrap();
        assert!((rel.pixel(12, 12).unwrap()[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn chromaticity_ignores_scale() {
        let g = WavelengthGrid::canonical();
        let cmf = analytic_cmf(&g);
        let a = render_fisheye(&IsotropicSky::new(g.clone(), 0.05), Vec3::ZENITH, &options(&cmf, MapMode::Chromaticity)).unwrap();
        let b = render_fisheye(&IsotropicSky::new(g, 0.4), Vec3::ZENITH, &options(&cmf, MapMode::Chromaticity)).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn psnr_of_a_uniform_offset() {
        let a = FisheyeImage::from_pixels(16, MapMode::RadianceRgb, Vec3::ZENITH, |_, _, _| Ok(Some([0.3, 0.4, 0.5]))).unwrap();
        let b = FisheyeImage::from_pixels(16, MapMode::RadianceRgb, Vec3::ZENITH, |_, _, _| Ok(Some([0.31, 0.41, 0.51]))).unwrap();
        assert!((image_psnr(&a, &b).unwrap() - 40.0).abs() < 1e-6);
        assert_eq!(image_psnr(&a, &a).unwrap(), f64::INFINITY);
        let c = FisheyeImage::from_pixels(8, MapMode::RadianceRgb, Vec3::ZENITH, |_, _, _| Ok(Some([0.0; 3]))).unwrap();
        assert!(image_psnr(&a, &c).is_err());
    }

    proptest! {
        #[test]
        fn projection_round_trip(z in 0.0f64..89.9, a in 0.0f64..360.0, size in 8usize..512) {
            let v = Vec3::from_angles_deg(z, a);
            let (i, j) = direction_pixel(size, v).unwrap();
            let back = pixel_direction(size, i, j).unwrap();
            let half_pixel = 0.5 * PI / size as f64;
            prop_assert!(crate::math::acos(back.dot(v).min(1.0)) < half_pixel);
            // the centre of the enclosing pixel is within one pixel diagonal
            let centre = pixel_direction(size, crate::math::floor(i) + 0.5, crate::math::floor(j) + 0.5);
            if let Some(cv) = centre {
                prop_assert!(crate::math::acos(cv.dot(v).min(1.0)) < 1.5 * half_pixel * 2.0);
            }
        }
    }
}
