//! Analytic spectral sky fitted to brute-force simulations: a nine
//! parameter extension of the Perez distribution per spectral channel,
//! with coefficients interpolated in sun elevation, turbidity and albedo.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{acos, cos, exp, floor, powf, sqrt, Vec3, PI};
use crate::spectrum::{Spectrum, WavelengthGrid};
use crate::{Error, Result};

use super::common::{check_directions, check_finite, check_out};
use super::{ModelKind, SkyModel, SkySource};

const PARAMS: usize = 9;
const CONTROL: usize = 6;
const TURBIDITIES: usize = 10;
const ALBEDOS: usize = 2;
const ROWS: usize = ALBEDOS * TURBIDITIES;

/// Solar disc radiance (W m^-2 sr^-1 nm^-1) the coefficients were fitted
/// with, at the 11 channel wavelengths.
pub const FITTED_SOLAR_RADIANCE: [f64; 11] =
    [7500.0, 12500.0, 21127.5, 26760.5, 30663.7, 27825.0, 25503.8, 25134.2, 23212.1, 21526.7, 19870.8];

/// Half-angle of the solar disc assumed by the fitted solar radiance.
pub const FITTED_SOLAR_HALF_ANGLE_DEG: f64 = 0.255;

/// Coefficient tables of the spectral model.
#[derive(Debug, Clone, PartialEq)]
pub struct HosekDataset {
    wavelengths: Vec<f64>,
    /// Per channel: rows (albedo-major, then turbidity 1..10) of 6 control
    /// points x 9 parameters.
    coefficients: Vec<Vec<f64>>,
    /// Per channel: rows of 6 control points.
    radiances: Vec<Vec<f64>>,
}

impl HosekDataset {
    pub fn new(wavelengths: Vec<f64>, coefficients: Vec<Vec<f64>>, radiances: Vec<Vec<f64>>) -> Result<Self> {
        let n = wavelengths.len();
        if n < 2 || coefficients.len() != n || radiances.len() != n {
            return Err(invalid!("hosek dataset needs matching channel tables"));
        }
        if wavelengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid!("hosek channel wavelengths must increase"));
        }
        let step = wavelengths[1] - wavelengths[0];
        if wavelengths.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9) {
            return Err(invalid!("hosek channels must be evenly spaced"));
        }
        for (c, r) in coefficients.iter().zip(&radiances) {
            if c.len() != ROWS * CONTROL * PARAMS || r.len() != ROWS * CONTROL {
                return Err(invalid!(
                    "hosek channel tables need {} coefficients and {} radiances",
                    ROWS * CONTROL * PARAMS,
                    ROWS * CONTROL
                ));
            }
            if c.iter().chain(r).any(|v| !v.is_finite()) {
                return Err(invalid!("hosek tables contain non-finite values"));
            }
        }
        Ok(HosekDataset { wavelengths, coefficients, radiances })
    }

    /// Parses the plain-text layout: a `channels` line, then per channel a
    /// `coefficients <nm>` block of 20 rows of 54 values and a
    /// `radiance <nm>` block of 20 rows of 6 values. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut wavelengths = Vec::new();
        let mut coefficients: Vec<Vec<f64>> = Vec::new();
        let mut radiances: Vec<Vec<f64>> = Vec::new();
        enum Block {
            None,
            Coef,
            Rad,
        }
        let mut block = Block::None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or("");
            let number = |w: &str| w.parse::<f64>().map_err(|_| invalid!("line {}: bad number '{w}'", no + 1));
            match head {
                "channels" => {
                    wavelengths = words.map(number).collect::<Result<_>>()?;
                }
                "coefficients" | "radiance" => {
                    let wl = number(words.next().ok_or_else(|| invalid!("line {}: missing wavelength", no + 1))?)?;
                    let expected = if head == "coefficients" { coefficients.len() } else { radiances.len() };
                    if wavelengths.get(expected).map_or(true, |&w| (w - wl).abs() > 1e-9) {
                        return Err(invalid!("line {}: block for {wl} nm out of channel order", no + 1));
                    }
                    if head == "coefficients" {
                        coefficients.push(Vec::new());
                        block = Block::Coef;
                    } else {
                        radiances.push(Vec::new());
                        block = Block::Rad;
                    }
                }
                _ => {
                    let target = match block {
                        Block::Coef => coefficients.last_mut(),
                        Block::Rad => radiances.last_mut(),
                        Block::None => None,
                    }
                    .ok_or_else(|| invalid!("line {}: values outside a block", no + 1))?;
                    for w in line.split_whitespace() {
                        target.push(number(w)?);
                    }
                }
            }
        }
        HosekDataset::new(wavelengths, coefficients, radiances)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }
}

/// Quintic Bezier over the six control points `m[k * stride]`.
fn bezier(m: &[f64], stride: usize, x: f64) -> f64 {
    let y = 1.0 - x;
    let w = [y * y * y * y * y, 5.0 * y * y * y * y * x, 10.0 * y * y * y * x * x, 10.0 * y * y * x * x * x, 5.0 * y * x * x * x * x, x * x * x * x * x];
    (0..CONTROL).map(|k| w[k] * m[k * stride]).sum()
}

/// Evaluates the elevation spline of one channel table and blends it over
/// albedo and turbidity.
fn cook<const N: usize>(table: &[f64], turbidity: f64, albedo: f64, elevation: f64) -> [f64; N] {
    let x = powf(elevation / (PI / 2.0), 1.0 / 3.0);
    let t_int = (floor(turbidity) as usize).clamp(1, TURBIDITIES);
    let t_rem = turbidity - t_int as f64;
    let block = CONTROL * N;
    let mut out = [0.0; N];
    let mut add = |a: usize, t: usize, w: f64| {
        if w == 0.0 {
            return;
        }
        let m = &table[(a * TURBIDITIES + t - 1) * block..][..block];
        for (i, o) in out.iter_mut().enumerate() {
            *o += w * bezier(&m[i..], N, x);
        }
    };
    add(0, t_int, (1.0 - albedo) * (1.0 - t_rem));
    add(1, t_int, albedo * (1.0 - t_rem));
    if t_int < TURBIDITIES {
        add(0, t_int + 1, (1.0 - albedo) * t_rem);
        add(1, t_int + 1, albedo * t_rem);
    }
    out
}

/// The nine-parameter distribution for angles to the zenith and the sun.
fn distribution(c: &[f64; PARAMS], cos_theta: f64, gamma: f64) -> f64 {
    let cg = cos(gamma);
    let exp_m = exp(c[4] * gamma);
    let ray_m = cg * cg;
    let mie_m = (1.0 + cg * cg) / powf(1.0 + c[8] * c[8] - 2.0 * c[8] * cg, 1.5);
    let zenith = sqrt(cos_theta.max(0.0));
    (1.0 + c[0] * exp(c[1] / (cos_theta + 0.01))) * (c[2] + c[3] * exp_m + c[5] * ray_m + c[6] * mie_m + c[7] * zenith)
}

#[derive(Debug, Clone)]
pub struct HosekModel {
    dataset: HosekDataset,
    turbidity: f64,
    grid: WavelengthGrid,
    /// Channel albedos sampled from the ground albedo spectrum.
    albedo: Vec<f64>,
    /// Rescales each channel to the caller's solar spectrum.
    solar_correction: Vec<f64>,
    /// Channel index and weight of the lower neighbour, per grid wavelength.
    lerp: Vec<(usize, f64)>,
}

/// `ground_albedo` and `solar_spectrum` are resampled to the channel
/// wavelengths; wavelengths beyond the last channel reuse it.
pub fn build_hosek(
    turbidity: f64,
    ground_albedo: &Spectrum,
    solar_spectrum: &Spectrum,
    dataset: &HosekDataset,
    grid: &WavelengthGrid,
) -> Result<HosekModel> {
    if !(1.0..=TURBIDITIES as f64).contains(&turbidity) {
        return Err(invalid!("hosek turbidity {turbidity} outside [1, {TURBIDITIES}]"));
    }
    let channels = &dataset.wavelengths;
    let albedo: Vec<f64> = channels.iter().map(|&l| ground_albedo.value_at(l).clamp(0.0, 1.0)).collect();
    let omega = 2.0 * PI * (1.0 - cos(FITTED_SOLAR_HALF_ANGLE_DEG * PI / 180.0));
    let solar_correction = channels
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let fitted = FITTED_SOLAR_RADIANCE.get(k).copied().unwrap_or(FITTED_SOLAR_RADIANCE[10]);
            solar_spectrum.value_at(l) / (fitted * omega)
        })
        .collect();
    let step = channels[1] - channels[0];
    let last = channels.len() - 1;
    let lerp = grid
        .as_slice()
        .iter()
        .map(|&l| {
            let f = ((l - channels[0]) / step).clamp(0.0, last as f64);
            let i = (f as usize).min(last - 1);
            (i, 1.0 - (f - i as f64))
        })
        .collect();
    Ok(HosekModel { dataset: dataset.clone(), turbidity, grid: grid.clone(), albedo, solar_correction, lerp })
}

impl HosekModel {
    pub fn turbidity(&self) -> f64 {
        self.turbidity
    }

    /// Per-channel model radiance along `view`.
    pub fn channel_radiance(&self, view: Vec3, sun: Vec3) -> Result<Vec<f64>> {
        let (view, sun) = check_directions(view, sun)?;
        if sun.z < 0.0 {
            return Err(Error::Unsupported("hosek needs the sun above the horizon".to_string()));
        }
        let elevation = PI / 2.0 - acos(sun.z);
        let gamma = acos(view.dot(sun));
        let d = &self.dataset;
        Ok((0..d.wavelengths.len())
            .map(|k| {
                let c: [f64; PARAMS] = cook(&d.coefficients[k], self.turbidity, self.albedo[k], elevation);
                let [r]: [f64; 1] = cook(&d.radiances[k], self.turbidity, self.albedo[k], elevation);
                (distribution(&c, view.z, gamma) * r * self.solar_correction[k]).max(0.0)
            })
            .collect())
    }
}

impl SkySource for HosekModel {
    fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        check_out(&self.grid, out)?;
        let ch = self.channel_radiance(view, sun)?;
        for (o, &(i, w)) in out.iter_mut().zip(&self.lerp) {
            *o = w * ch[i] + (1.0 - w) * ch[i + 1];
        }
        check_finite(out)
    }
}

impl SkyModel for HosekModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Hosek
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::math::to_radians;
    use crate::spectrum::Quantity;

    /// Synthetic tables whose cooked parameters are known in closed form:
    /// every control point of albedo row `a`, turbidity `t` and parameter
    /// `i` holds `base[i] + 0.01 t + 0.1 a`.
    pub fn synthetic_dataset() -> HosekDataset {
        let base = [-1.0, -0.3, 1.0, 0.2, -1.5, 0.5, 0.3, 1.2, 0.8];
        let wl: Vec<f64> = (0..11).map(|i| 320.0 + 40.0 * i as f64).collect();
        let mut coef = Vec::new();
        let mut rad = Vec::new();
        for (k, _) in wl.iter().enumerate() {
            let mut c = Vec::new();
            let mut r = Vec::new();
            for a in 0..ALBEDOS {
                for t in 1..=TURBIDITIES {
                    for _ in 0..CONTROL {
                        for b in base {
                            c.push(b + 0.01 * t as f64 + 0.1 * a as f64);
                        }
                        r.push(1.0 + k as f64 + 0.5 * t as f64 + a as f64);
                    }
                }
            }
            coef.push(c);
            rad.push(r);
        }
        HosekDataset::new(wl, coef, rad).unwrap()
    }

    fn flat(v: f64) -> Spectrum {
        Spectrum::constant(WavelengthGrid::canonical(), v, Quantity::Unconstrained).unwrap()
    }

    #[test]
    fn bezier_of_constant_control_points_is_constant() {
        let m = [2.5; 6];
        for x in [0.0, 0.3, 1.0] {
            assert!((bezier(&m, 1, x) - 2.5).abs() < 1e-12);
        }
        let m = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!((bezier(&m, 1, 0.5) - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn cooking_blends_turbidity_and_albedo_linearly() {
        let d = synthetic_dataset();
        let c: [f64; PARAMS] = cook(&d.coefficients[0], 2.5, 0.25, 0.7);
        assert!((c[0] - (-1.0 + 0.025 + 0.025)).abs() < 1e-12, "{}", c[0]);
        let [r]: [f64; 1] = cook(&d.radiances[3], 10.0, 1.0, 0.2);
        assert!((r - (1.0 + 3.0 + 5.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn parser_round_trips_the_layout() {
        let d = synthetic_dataset();
        let mut text = alloc::string::String::from("# comment\nchannels");
        for w in d.wavelengths() {
            text.push_str(&alloc::format!(" {w}"));
        }
        text.push('\n');
        for k in 0..11 {
            text.push_str(&alloc::format!("coefficients {}\n", d.wavelengths()[k]));
            for row in d.coefficients[k].chunks(54) {
                let s: Vec<alloc::string::String> = row.iter().map(|v| alloc::format!("{v:e}")).collect();
                text.push_str(&s.join(" "));
                text.push('\n');
            }
            text.push_str(&alloc::format!("radiance {}\n", d.wavelengths()[k]));
            for row in d.radiances[k].chunks(6) {
                let s: Vec<alloc::string::String> = row.iter().map(|v| alloc::format!("{v:e}")).collect();
                text.push_str(&s.join(" "));
                text.push('\n');
            }
        }
        assert_eq!(HosekDataset::parse(&text).unwrap(), d);
        assert!(HosekDataset::parse("channels 320 360\ncoefficients 360\n1 2\n").is_err());
    }

    #[test]
    fn solar_spectrum_rescales_radiance() {
        let d = synthetic_dataset();
        let g = WavelengthGrid::canonical();
        let a = build_hosek(3.0, &flat(0.2), &flat(1.0), &d, &g).unwrap();
        let b = build_hosek(3.0, &flat(0.2), &flat(2.0), &d, &g).unwrap();
        let sun = Vec3::from_angles(to_radians(30.0), 0.0);
        let view = Vec3::from_angles(to_radians(50.0), 1.0);
        let la = a.radiance(view, sun).unwrap();
        let lb = b.radiance(view, sun).unwrap();
        for i in 0..g.len() {
            assert!((lb.values()[i] / la.values()[i] - 2.0).abs() < 1e-12);
        }
        // beyond the last channel the value is held
        let n = g.len();
        assert_eq!(la.values()[n - 1], la.values()[n - 2]);
    }

    #[test]
    fn low_sun_is_unsupported() {
        let d = synthetic_dataset();
        let g = WavelengthGrid::canonical();
        let m = build_hosek(3.0, &flat(0.2), &flat(1.0), &d, &g).unwrap();
        let e = m.radiance(Vec3::ZENITH, Vec3::from_angles(to_radians(91.0), 0.0)).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
        assert!(build_hosek(11.0, &flat(0.2), &flat(1.0), &d, &g).is_err());
    }
}
