//! Colour matching, sRGB conversion and tone mapping, plus the three-sample
//! shortcuts: RGB directly from radiances at 680/550/440 nm, and a full
//! spectrum rebuilt from those same three samples.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{exp, powf};
use crate::spectrum::{resample_linear, Extrapolation, Quantity, Spectrum, WavelengthGrid};
use crate::Result;

/// Luminous efficacy used to turn CIE Y into cd m^-2.
pub const LUMINOUS_EFFICACY: f64 = 683.0;

/// XYZ to linear sRGB (IEC 61966-2-1, D65).
pub const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2406, -1.5372, -0.4986],
    [-0.9689, 1.8758, 0.0415],
    [0.0557, -0.2040, 1.0570],
];

/// Centre wavelengths (nm) of the red, green and blue samples.
pub const RGB_CENTERS: [f64; 3] = [680.0, 550.0, 440.0];

/// Exponent of the `λ^-α` spectral shape assumed around each centre.
pub const DEFAULT_SAMPLE_ALPHA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Xyz,
    LinearSrgb,
    RgChromaticity,
    XyY,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorTriple {
    pub space: ColorSpace,
    pub c: [f64; 3],
}

impl ColorTriple {
    pub const fn new(space: ColorSpace, c: [f64; 3]) -> Self {
        ColorTriple { space, c }
    }

    pub fn to_xyz(self) -> ColorTriple {
        match self.space {
            ColorSpace::Xyz => self,
            ColorSpace::LinearSrgb => ColorTriple::new(ColorSpace::Xyz, mat_mul(&srgb_to_xyz_matrix(), self.c)),
            ColorSpace::XyY => {
                let [x, y, big_y] = self.c;
                if y <= 0.0 {
                    ColorTriple::new(ColorSpace::Xyz, [0.0; 3])
                } else {
                    ColorTriple::new(ColorSpace::Xyz, [x * big_y / y, big_y, (1.0 - x - y) * big_y / y])
                }
            }
            ColorSpace::RgChromaticity => panic!("rg chromaticity carries no intensity"),
        }
    }

    pub fn to_linear_srgb(self) -> ColorTriple {
        match self.space {
            ColorSpace::LinearSrgb => self,
            _ => ColorTriple::new(ColorSpace::LinearSrgb, mat_mul(&XYZ_TO_SRGB, self.to_xyz().c)),
        }
    }

    pub fn to_xyy(self) -> ColorTriple {
        let [x, y, z] = self.to_xyz().c;
        let s = x + y + z;
        if s <= 0.0 {
            // Black: report the D65 white point chromaticity.
            return ColorTriple::new(ColorSpace::XyY, [0.3127, 0.3290, 0.0]);
        }
        ColorTriple::new(ColorSpace::XyY, [x / s, y / s, y])
    }

    /// CIE Y of the colour (relative units, no luminous efficacy factor).
    pub fn y(self) -> f64 {
        self.to_xyz().c[1]
    }
}

fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Exact inverse of [`XYZ_TO_SRGB`].
pub fn srgb_to_xyz_matrix() -> [[f64; 3]; 3] {
    let m = &XYZ_TO_SRGB;
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    let inv = 1.0 / det;
    [
        [cof(1, 2, 1, 2) * inv, -cof(0, 2, 1, 2) * inv, cof(0, 1, 1, 2) * inv],
        [-cof(1, 2, 0, 2) * inv, cof(0, 2, 0, 2) * inv, -cof(0, 1, 0, 2) * inv],
        [cof(1, 2, 0, 1) * inv, -cof(0, 2, 0, 1) * inv, cof(0, 1, 0, 1) * inv],
    ]
}

/// CIE 1931 colour matching functions on a grid, with the derived sRGB
/// matching functions `M * [x̄, ȳ, z̄]`.
#[derive(Debug, Clone)]
pub struct ColorMatchingTable {
    grid: WavelengthGrid,
    xyz: [Vec<f64>; 3],
    rgb: [Vec<f64>; 3],
    /// `xyz[c][i] * trapezoid_weight[i]`.
    weighted_xyz: [Vec<f64>; 3],
}

impl ColorMatchingTable {
    pub fn new(grid: WavelengthGrid, xbar: Vec<f64>, ybar: Vec<f64>, zbar: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if xbar.len() != n || ybar.len() != n || zbar.len() != n {
            return Err(invalid!("colour matching columns do not match the grid length {n}"));
        }
        if ybar.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(invalid!("ybar must be nonnegative"));
        }
        if xbar.iter().chain(&zbar).any(|v| !v.is_finite()) {
            return Err(invalid!("colour matching values must be finite"));
        }
        let xyz = [xbar, ybar, zbar];
        let mut rgb = [alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n]];
        for i in 0..n {
            let v = mat_mul(&XYZ_TO_SRGB, [xyz[0][i], xyz[1][i], xyz[2][i]]);
            for c in 0..3 {
                rgb[c][i] = v[c];
            }
        }
        let w = grid.trapezoid_weights();
        let weighted_xyz = [0, 1, 2].map(|c| xyz[c].iter().zip(&w).map(|(a, b)| a * b).collect());
        Ok(ColorMatchingTable { grid, xyz, rgb, weighted_xyz })
    }

    /// Linear resampling onto `grid`; zero outside the table's range.
    pub fn resampled(&self, grid: &WavelengthGrid) -> ColorMatchingTable {
        if *grid == self.grid {
            return self.clone();
        }
        let src = self.grid.as_slice();
        let [x, y, z] = [0, 1, 2].map(|c| resample_linear(src, &self.xyz[c], grid.as_slice(), Extrapolation::Zero));
        ColorMatchingTable::new(grid.clone(), x, y, z).expect("resampled table stays valid")
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }
    pub fn xbar(&self) -> &[f64] {
        &self.xyz[0]
    }
    pub fn ybar(&self) -> &[f64] {
        &self.xyz[1]
    }
    pub fn zbar(&self) -> &[f64] {
        &self.xyz[2]
    }
    /// r̃, g̃, b̃ matching functions.
    pub fn rgb_bar(&self, channel: usize) -> &[f64] {
        &self.rgb[channel]
    }

    /// XYZ of raw values sampled on this table's own grid.
    pub fn xyz_of_values(&self, values: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.weighted_xyz[c].iter().zip(values).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Table evaluated on a spectrum's grid, or an error if the ranges are
    /// disjoint.
    fn aligned(&self, grid: &WavelengthGrid) -> Result<alloc::borrow::Cow<'_, ColorMatchingTable>> {
        if *grid == self.grid {
            return Ok(alloc::borrow::Cow::Borrowed(self));
        }
        if grid.max() < self.grid.min() || grid.min() > self.grid.max() {
            return Err(invalid!(
                "spectrum grid {}..{} nm does not overlap the colour matching table",
                grid.min(),
                grid.max()
            ));
        }
        Ok(alloc::borrow::Cow::Owned(self.resampled(grid)))
    }
}

/// CIE XYZ of a spectrum (trapezoid rule over the overlapping range).
pub fn spectrum_to_xyz(spectrum: &Spectrum, cmf: &ColorMatchingTable) -> Result<ColorTriple> {
    let table = cmf.aligned(spectrum.grid())?;
    Ok(ColorTriple::new(ColorSpace::Xyz, table.xyz_of_values(spectrum.values())))
}

/// Linear sRGB of a spectrum: the integral of `[r̃, g̃, b̃] L`.
pub fn spectrum_to_srgb(spectrum: &Spectrum, cmf: &ColorMatchingTable) -> Result<ColorTriple> {
    Ok(spectrum_to_xyz(spectrum, cmf)?.to_linear_srgb())
}

/// Luminance in cd m^-2 of a radiance spectrum: `683 ∫ ȳ L dλ`.
pub fn luminance(spectrum: &Spectrum, cmf: &ColorMatchingTable) -> Result<f64> {
    Ok(LUMINOUS_EFFICACY * spectrum_to_xyz(spectrum, cmf)?.c[1])
}

/// Colour divided by its largest component; black maps to (0, 0, 0).
pub fn chromaticity_rg(color: ColorTriple) -> ColorTriple {
    let c = color.to_linear_srgb().c.map(|v| v.max(0.0));
    let m = c[0].max(c[1]).max(c[2]);
    if m <= 0.0 {
        return ColorTriple::new(ColorSpace::RgChromaticity, [0.0; 3]);
    }
    ColorTriple::new(ColorSpace::RgChromaticity, c.map(|v| v / m))
}

/// `1 - exp(-k c)` per component (linear values, before gamma encoding).
pub fn tone_map(color: ColorTriple, k: f64) -> ColorTriple {
    let c = color.to_linear_srgb().c;
    ColorTriple::new(ColorSpace::LinearSrgb, c.map(|v| 1.0 - exp(-k * v.max(0.0))))
}

/// sRGB transfer function for a single linear value in [0, 1].
pub fn srgb_encode(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * powf(v, 1.0 / 2.4) - 0.055
    }
}

/// Tone map followed by gamma encoding: display values in [0, 1].
pub fn tone_map_encoded(color: ColorTriple, k: f64) -> [f64; 3] {
    tone_map(color, k).c.map(srgb_encode)
}

/// Tone-mapping constant mapping the given luminance to 0.5 before gamma.
pub fn tone_map_constant(median_luminance: f64) -> Result<f64> {
    if !(median_luminance > 0.0) || !median_luminance.is_finite() {
        return Err(invalid!("tone mapping needs a positive median luminance"));
    }
    Ok(core::f64::consts::LN_2 / median_luminance)
}

/// Precomputed constants `k_r, k_g, k_b` turning radiances at 680, 550 and
/// 440 nm into linear sRGB, assuming `L(λ) ∝ S(λ) λ^-α` around each centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeSampleRgb {
    pub k: [f64; 3],
    pub alpha: f64,
}

impl ThreeSampleRgb {
    /// Integrates on the colour matching table's grid, with the solar
    /// spectrum linearly interpolated there.
    pub fn new(solar: &Spectrum, cmf: &ColorMatchingTable, alpha: f64) -> Result<Self> {
        let grid = cmf.grid();
        let w = grid.trapezoid_weights();
        let shape: Vec<f64> = grid
            .as_slice()
            .iter()
            .map(|&l| solar.value_at(l) * powf(l, -alpha))
            .collect();
        let mut k = [0.0; 3];
        for c in 0..3 {
            let center = RGB_CENTERS[c];
            let s_c = solar.value_at(center);
            if !(s_c > 0.0) {
                return Err(invalid!("solar spectrum is zero at {center} nm"));
            }
            let norm = s_c * powf(center, -alpha);
            let integral: f64 = (0..grid.len()).map(|i| cmf.rgb_bar(c)[i] * shape[i] * w[i]).sum();
            k[c] = integral / norm;
        }
        Ok(ThreeSampleRgb { k, alpha })
    }

    /// Linear sRGB from radiances at 680, 550 and 440 nm.
    pub fn rgb(&self, lr: f64, lg: f64, lb: f64) -> ColorTriple {
        ColorTriple::new(ColorSpace::LinearSrgb, [self.k[0] * lr, self.k[1] * lg, self.k[2] * lb])
    }

    /// Same as [`rgb`](Self::rgb) for a spectrum sampled on any grid that
    /// holds the three centre wavelengths (linear interpolation otherwise).
    pub fn rgb_of_spectrum(&self, spectrum: &Spectrum) -> ColorTriple {
        self.rgb(
            spectrum.value_at(RGB_CENTERS[0]),
            spectrum.value_at(RGB_CENTERS[1]),
            spectrum.value_at(RGB_CENTERS[2]),
        )
    }
}

/// One-shot form of [`ThreeSampleRgb`].
pub fn rgb_from_three_samples(
    lr: f64,
    lg: f64,
    lb: f64,
    solar: &Spectrum,
    cmf: &ColorMatchingTable,
    alpha: f64,
) -> Result<ColorTriple> {
    Ok(ThreeSampleRgb::new(solar, cmf, alpha)?.rgb(lr, lg, lb))
}

/// CIE daylight components S0, S1, S2.
#[derive(Debug, Clone)]
pub struct DaylightBasis {
    wavelengths: Vec<f64>,
    s: [Vec<f64>; 3],
}

/// Chromaticity region in which the daylight reconstruction is used as is.
/// Outside it, chromaticities are clamped to the boundary: x in
/// [0.20, 0.45], y in [0.20, 0.45] and at least 0.06 above the line where the
/// daylight coefficient denominator vanishes.
pub fn clamp_to_daylight_gamut(x: f64, y: f64) -> (f64, f64, bool) {
    let cx = x.clamp(0.20, 0.45);
    let floor = (0.0241 + 0.2562 * cx) / 0.7341 + 0.06;
    let cy = y.clamp(floor.max(0.20), 0.45);
    let moved = (cx - x).abs() > 1e-12 || (cy - y).abs() > 1e-12;
    (cx, cy, moved)
}

impl DaylightBasis {
    pub fn new(wavelengths: Vec<f64>, s0: Vec<f64>, s1: Vec<f64>, s2: Vec<f64>) -> Result<Self> {
        let n = wavelengths.len();
        if n < 2 || s0.len() != n || s1.len() != n || s2.len() != n {
            return Err(invalid!("daylight basis columns have inconsistent lengths"));
        }
        if wavelengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid!("daylight basis wavelengths not strictly increasing"));
        }
        Ok(DaylightBasis { wavelengths, s: [s0, s1, s2] })
    }

    /// Coefficients M1, M2 of the daylight mix with chromaticity (x, y).
    pub fn mix_coefficients(x: f64, y: f64) -> (f64, f64) {
        let d = 0.0241 + 0.2562 * x - 0.7341 * y;
        let m1 = (-1.3515 - 1.7703 * x + 5.9114 * y) / d;
        let m2 = (0.0300 - 31.4424 * x + 30.0717 * y) / d;
        (m1, m2)
    }

    /// `S0 + M1 S1 + M2 S2` at one wavelength (linear interpolation).
    pub fn relative(&self, m1: f64, m2: f64, wavelength: f64) -> f64 {
        let v = |i: usize| crate::spectrum::interp_linear(&self.wavelengths, &self.s[i], wavelength, Extrapolation::Clamp);
        v(0) + m1 * v(1) + m2 * v(2)
    }

    /// CIE Y (no luminous efficacy) of the relative daylight mix.
    pub fn relative_y(&self, m1: f64, m2: f64, cmf: &ColorMatchingTable) -> f64 {
        let values: Vec<f64> = cmf.grid().as_slice().iter().map(|&l| self.relative(m1, m2, l)).collect();
        cmf.xyz_of_values(&values)[1]
    }

    /// Daylight spectrum with chromaticity (x, y) and CIE Y `big_y`, sampled
    /// on `grid` and clamped nonnegative. The normalization integral runs
    /// on the colour matching table's grid.
    pub fn spectrum(&self, x: f64, y: f64, big_y: f64, cmf: &ColorMatchingTable, grid: &WavelengthGrid) -> Spectrum {
        let (m1, m2) = Self::mix_coefficients(x, y);
        let rel_y = self.relative_y(m1, m2, cmf);
        let scale = if rel_y > 0.0 { big_y / rel_y } else { 0.0 };
        let values = grid.as_slice().iter().map(|&l| (scale * self.relative(m1, m2, l)).max(0.0)).collect();
        Spectrum::new(grid.clone(), values, Quantity::Radiance).expect("clamped values are valid")
    }
}

/// Output of [`reconstruct_spectrum`]: the spectrum plus a flag telling
/// whether the chromaticity had to be clamped into the daylight gamut.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub spectrum: Spectrum,
    pub clamped: bool,
}

/// Full spectrum from three radiance samples: three-sample sRGB, then XYZ and
/// xyY, then the CIE daylight mix with that chromaticity and luminance.
pub fn reconstruct_spectrum(
    lr: f64,
    lg: f64,
    lb: f64,
    converter: &ThreeSampleRgb,
    cmf: &ColorMatchingTable,
    basis: &DaylightBasis,
    grid: &WavelengthGrid,
) -> Reconstruction {
    let xyz = converter.rgb(lr, lg, lb).to_xyz();
    let big_y = xyz.c[1];
    if !(big_y > 0.0) {
        return Reconstruction { spectrum: Spectrum::zeros(grid.clone(), Quantity::Radiance), clamped: false };
    }
    let [x, y, _] = xyz.to_xyy().c;
    let (x, y, clamped) = clamp_to_daylight_gamut(x, y);
    Reconstruction { spectrum: basis.spectrum(x, y, big_y, cmf, grid), clamped }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::math::exp;

    fn g(x: f64, mu: f64, s1: f64, s2: f64) -> f64 {
        let s = if x < mu { s1 } else { s2 };
        exp(-0.5 * ((x - mu) / s) * ((x - mu) / s))
    }

    /// Analytic multi-lobe fit of the CIE 1931 functions (Wyman, Sloan and
    /// Shirley), good to a few percent; enough for unit tests.
    pub fn analytic_cmf(grid: &WavelengthGrid) -> ColorMatchingTable {
        let l = grid.as_slice();
        let x = l
            .iter()
            .map(|&w| 1.056 * g(w, 599.8, 37.9, 31.0) + 0.362 * g(w, 442.0, 16.0, 26.7) - 0.065 * g(w, 501.1, 20.4, 26.2))
            .collect();
        let y = l.iter().map(|&w| 0.821 * g(w, 568.8, 46.9, 40.5) + 0.286 * g(w, 530.9, 16.3, 31.1)).collect();
        let z = l.iter().map(|&w| 1.217 * g(w, 437.0, 11.8, 36.0) + 0.681 * g(w, 459.0, 26.0, 13.8)).collect();
        ColorMatchingTable::new(grid.clone(), x, y, z).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::analytic_cmf;
    use super::*;

    #[test]
    fn srgb_matrices_are_inverse() {
        let inv = srgb_to_xyz_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| XYZ_TO_SRGB[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chromaticity_examples() {
        let c = chromaticity_rg(ColorTriple::new(ColorSpace::LinearSrgb, [0.2, 0.4, 0.8]));
        assert_eq!(c.c, [0.25, 0.5, 1.0]);
        let c = chromaticity_rg(ColorTriple::new(ColorSpace::LinearSrgb, [3.0, 3.0, 3.0]));
        assert_eq!(c.c, [1.0, 1.0, 1.0]);
        let c = chromaticity_rg(ColorTriple::new(ColorSpace::LinearSrgb, [0.0; 3]));
        assert_eq!(c.c, [0.0; 3]);
    }

    #[test]
    fn tone_map_examples() {
        let k = 0.37;
        let c = tone_map(ColorTriple::new(ColorSpace::LinearSrgb, [0.0, core::f64::consts::LN_2 / k, 1.0]), k);
        assert_eq!(c.c[0], 0.0);
        assert!((c.c[1] - 0.5).abs() < 1e-15);
        assert!(tone_map_encoded(ColorTriple::new(ColorSpace::LinearSrgb, [0.0; 3]), k) == [0.0; 3]);
    }

    #[test]
    fn disjoint_grids_are_rejected() {
        let cmf = analytic_cmf(&WavelengthGrid::canonical());
        let far = WavelengthGrid::uniform(1000.0, 1200.0, 5).unwrap();
        let s = Spectrum::constant(far, 1.0, Quantity::Radiance).unwrap();
        assert!(spectrum_to_srgb(&s, &cmf).is_err());
    }

    #[test]
    fn flat_solar_and_zero_alpha_give_plain_integrals() {
        let grid = WavelengthGrid::uniform(360.0, 830.0, 95).unwrap();
        let cmf = analytic_cmf(&grid);
        let solar = Spectrum::constant(grid.clone(), 1.7, Quantity::Irradiance).unwrap();
        let t = ThreeSampleRgb::new(&solar, &cmf, 0.0).unwrap();
        for c in 0..3 {
            let direct = crate::spectrum::trapezoid(grid.as_slice(), cmf.rgb_bar(c));
            assert!((t.k[c] - direct).abs() < 1e-12 * direct.abs());
            assert!(t.k[c] > 0.0);
        }
    }

    #[test]
    fn three_samples_reproduce_exact_power_law_spectra() {
        // L = c S λ^-α is exactly the assumed shape, so the three-sample conversion
        // equals the full spectral integral on the table grid.
        let grid = WavelengthGrid::uniform(360.0, 830.0, 95).unwrap();
        let cmf = analytic_cmf(&grid);
        let solar = Spectrum::from_fn(grid.clone(), Quantity::Irradiance, |l| 1.0 + 0.5 * crate::math::sin(l / 37.0)).unwrap();
        let t = ThreeSampleRgb::new(&solar, &cmf, 3.0).unwrap();
        let sky = Spectrum::from_fn(grid.clone(), Quantity::Radiance, |l| 2.5e8 * solar.value_at(l) * powf(l, -3.0)).unwrap();
        let full = spectrum_to_srgb(&sky, &cmf).unwrap();
        let approx = t.rgb_of_spectrum(&sky);
        for c in 0..3 {
            assert!((full.c[c] - approx.c[c]).abs() < 1e-9 * full.c[c].abs().max(1e-12));
        }
    }

    #[test]
    fn zero_samples_give_zero() {
        let grid = WavelengthGrid::canonical();
        let cmf = analytic_cmf(&grid);
        let solar = Spectrum::constant(grid.clone(), 1.0, Quantity::Irradiance).unwrap();
        let c = rgb_from_three_samples(0.0, 0.0, 0.0, &solar, &cmf, 3.0).unwrap();
        assert_eq!(c.c, [0.0; 3]);
        let zero_solar = Spectrum::zeros(grid, Quantity::Irradiance);
        assert!(ThreeSampleRgb::new(&zero_solar, &cmf, 3.0).is_err());
    }

    #[test]
    fn daylight_gamut_clamp_keeps_interior_points() {
        let (x, y, moved) = clamp_to_daylight_gamut(0.31, 0.33);
        assert!(!moved && x == 0.31 && y == 0.33);
        let (_, _, moved) = clamp_to_daylight_gamut(0.6, 0.1);
        assert!(moved);
    }
}
