//! Plain-text formats: two-column spectra, ephemerides, sky datasets and
//! key-value run configurations. Layouts are described in FORMATS.md.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clearsky_core::atmosphere::AtmosphereParams;
use clearsky_core::dataset::{DirectionSample, EphemerisEntry, SkyDataset, SkyRecord, SunEphemeris, DIRECTIONS};
use clearsky_core::models::{BrunetonConfig, HaberConfig, Nishita93Config, Nishita96Config, DEFAULT_ONEAL_SAMPLES};
use clearsky_core::spectrum::{resample_linear, Extrapolation};
use clearsky_core::{Quantity, Spectrum, WavelengthGrid};

use crate::data;
use crate::error::{AppError, AppResult};
use crate::text;

pub fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// Writes through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

/// Two columns: wavelength in nm, strictly increasing, and value.
pub fn parse_spectrum(source: &str, text: &str, quantity: Quantity) -> AppResult<Spectrum> {
    let rows = text::table(source, text, 2)?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    text::increasing(source, text, &xs)?;
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let lines: Vec<usize> = text::rows(text).map(|r| r.line).collect();
    for (k, &y) in ys.iter().enumerate() {
        let bad = match quantity {
            Quantity::Albedo | Quantity::Ratio => !(0.0..=1.0).contains(&y),
            Quantity::Unconstrained => false,
            _ => y < 0.0,
        };
        if bad {
            return Err(AppError::parse(source, lines[k], format!("value {y} out of range")));
        }
    }
    if xs.len() < 2 {
        return Err(AppError::parse(source, lines.last().copied().unwrap_or(0), "a spectrum needs at least two samples"));
    }
    Ok(Spectrum::new(WavelengthGrid::new(xs)?, ys, quantity)?)
}

pub fn load_spectrum(path: &Path, quantity: Quantity) -> AppResult<Spectrum> {
    parse_spectrum(&path.display().to_string(), &read_text(path)?, quantity)
}

pub fn format_spectrum(s: &Spectrum, header: &str) -> String {
    let mut out = String::new();
    for l in header.lines() {
        let _ = writeln!(out, "# {l}");
    }
    for (l, v) in s.grid().as_slice().iter().zip(s.values()) {
        let _ = writeln!(out, "{l} {v:e}");
    }
    out
}

/// Rows of `time zenith azimuth`, angles in degrees.
pub fn parse_ephemeris(source: &str, text: &str) -> AppResult<SunEphemeris> {
    let mut entries = Vec::new();
    for r in text::rows(text) {
        if r.fields.len() != 3 {
            return Err(AppError::parse(source, r.line, format!("expected time, zenith and azimuth, found {} columns", r.fields.len())));
        }
        let e = EphemerisEntry { time: r.fields[0].to_string(), zenith_deg: text::number(source, &r, 1)?, azimuth_deg: text::number(source, &r, 2)? };
        entries.push((r.line, e));
    }
    let lines: Vec<usize> = entries.iter().map(|e| e.0).collect();
    SunEphemeris::new(entries.into_iter().map(|e| e.1).collect()).map_err(|e| {
        // name the offending line when the message carries a row number
        let msg = e.to_string();
        let row = msg.split("row ").nth(1).and_then(|s| s.split(|c: char| !c.is_ascii_digit()).next()).and_then(|s| s.parse::<usize>().ok());
        AppError::parse(source, row.and_then(|k| lines.get(k - 1).copied()).unwrap_or(0), msg)
    })
}

pub fn load_ephemeris(path: &Path) -> AppResult<SunEphemeris> {
    parse_ephemeris(&path.display().to_string(), &read_text(path)?)
}

/// Canonical wavelengths inside `[lo, hi]`, the grid loaded datasets use.
fn canonical_within(lo: f64, hi: f64) -> Option<WavelengthGrid> {
    let w: Vec<f64> = WavelengthGrid::canonical().as_slice().iter().copied().filter(|&l| l >= lo - 1e-9 && l <= hi + 1e-9).collect();
    WavelengthGrid::new(w).ok()
}

/// Comma separated: a `wavelengths,...` header, then one row per direction
/// with time label, sun zenith and azimuth, view zenith and azimuth, and
/// one radiance per wavelength. Spectra are resampled linearly onto the
/// canonical wavelengths their range covers.
pub fn parse_dataset(source: &str, text: &str) -> AppResult<SkyDataset> {
    let mut rows = text::rows(text);
    let head = rows.next().ok_or_else(|| AppError::parse(source, 0, "empty dataset"))?;
    if head.fields.first() != Some(&"wavelengths") {
        return Err(AppError::parse(source, head.line, "first data line must be the 'wavelengths' header"));
    }
    let xs: Vec<f64> = (1..head.fields.len()).map(|c| text::number(source, &head, c)).collect::<AppResult<_>>()?;
    if xs.len() < 2 {
        return Err(AppError::parse(source, head.line, "need at least two wavelengths"));
    }
    if let Some(k) = (1..xs.len()).find(|&k| xs[k] <= xs[k - 1]) {
        return Err(AppError::parse(source, head.line, format!("column {}: wavelength {} does not increase", k + 2, xs[k])));
    }
    let target = canonical_within(xs[0], xs[xs.len() - 1])
        .ok_or_else(|| AppError::parse(source, head.line, "wavelength range holds no canonical sample"))?;
    let same = target.as_slice() == xs.as_slice();
    let n = xs.len();
    // records in order of first appearance, with their first line
    let mut records: Vec<(usize, SkyRecord)> = Vec::new();
    for r in rows {
        if r.fields.len() != 5 + n {
            return Err(AppError::parse(source, r.line, format!("expected {} columns, found {}", 5 + n, r.fields.len())));
        }
        let time = r.fields[0].to_string();
        let [sz, sa, vz, va] = [1, 2, 3, 4].map(|c| text::number(source, &r, c));
        let (sz, sa, vz, va) = (sz?, sa?, vz?, va?);
        let mut values = Vec::with_capacity(n);
        for c in 5..5 + n {
            let v = text::number(source, &r, c)?;
            if v < 0.0 {
                return Err(AppError::parse(source, r.line, format!("column {}: negative radiance {v}", c + 1)));
            }
            values.push(v);
        }
        if !(0.0..=90.0).contains(&vz) {
            return Err(AppError::parse(source, r.line, format!("view zenith {vz} outside [0, 90] degrees")));
        }
        let values = if same { values } else { resample_linear(&xs, &values, target.as_slice(), Extrapolation::Clamp) };
        let sample = DirectionSample { zenith_deg: vz, azimuth_deg: va, spectrum: Spectrum::new(target.clone(), values, Quantity::Radiance)? };
        match records.iter_mut().find(|(_, rec)| rec.time == time) {
            Some((_, rec)) => {
                if (rec.sun_zenith_deg - sz).abs() > 1e-9 || (rec.sun_azimuth_deg - sa).abs() > 1e-9 {
                    return Err(AppError::parse(source, r.line, format!("sun position differs from earlier rows of record {time}")));
                }
                rec.samples.push(sample);
            }
            None => records.push((r.line, SkyRecord { time, sun_zenith_deg: sz, sun_azimuth_deg: sa, samples: vec![sample] })),
        }
    }
    if records.is_empty() {
        return Err(AppError::parse(source, head.line, "dataset has no rows"));
    }
    for (line, rec) in &records {
        if rec.samples.len() != DIRECTIONS {
            return Err(AppError::parse(source, *line, format!("record {} has {} directions instead of {DIRECTIONS}", rec.time, rec.samples.len())));
        }
    }
    let first = records[0].0;
    SkyDataset::new(records.into_iter().map(|r| r.1).collect()).map_err(|e| AppError::parse(source, first, e.to_string()))
}

pub fn load_dataset(path: &Path) -> AppResult<SkyDataset> {
    parse_dataset(&path.display().to_string(), &read_text(path)?)
}

pub fn format_dataset(d: &SkyDataset) -> String {
    let mut out = String::from("# clearsky sky dataset\n# time,sun_zenith_deg,sun_azimuth_deg,view_zenith_deg,view_azimuth_deg,radiance per wavelength (W m^-2 sr^-1 nm^-1)\nwavelengths");
    for l in d.grid().as_slice() {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for r in d.records() {
        for s in &r.samples {
            let _ = write!(out, "{},{},{},{},{}", r.time, r.sun_zenith_deg, r.sun_azimuth_deg, s.zenith_deg, s.azimuth_deg);
            for v in s.spectrum.values() {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_dataset(path: &Path, d: &SkyDataset) -> AppResult<()> {
    write_atomic(path, format_dataset(d).as_bytes())
}

/// Model resolutions settable from a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub nishita93: Nishita93Config,
    pub oneal_samples: usize,
    pub nishita96: Nishita96Config,
    pub haber: HaberConfig,
    pub bruneton: BrunetonConfig,
    /// Forward model tables of the aerosol inversion, rebuilt per trial.
    pub inversion: BrunetonConfig,
}

/// Tables small enough to rebuild for every inversion trial (under a
/// second each).
pub const INVERSION_TABLES: BrunetonConfig =
    BrunetonConfig { n_r: 8, n_mu: 32, n_mu_s: 8, n_nu: 4, n_theta_i: 8, n_phi_i: 16, orders: 4, samples: 24, observer_altitude_km: 0.0 };

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            nishita93: Nishita93Config::default(),
            oneal_samples: DEFAULT_ONEAL_SAMPLES,
            nishita96: Nishita96Config::default(),
            haber: HaberConfig::default(),
            bruneton: BrunetonConfig::default(),
            inversion: INVERSION_TABLES,
        }
    }
}

/// Atmosphere plus model resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: AtmosphereParams,
    pub models: ModelSettings,
}

impl RunConfig {
    /// Embedded data and library defaults on the canonical grid.
    pub fn defaults() -> AppResult<Self> {
        Ok(RunConfig { params: data::default_params(&WavelengthGrid::canonical())?, models: ModelSettings::default() })
    }
}

/// `key = value` lines; every key is optional. Relative paths are taken
/// from `base`.
pub fn parse_config(source: &str, text: &str, base: &Path) -> AppResult<RunConfig> {
    let mut cfg = RunConfig::defaults()?;
    apply_config(&mut cfg, source, text, base)?;
    Ok(cfg)
}

/// Applies `key = value` lines on top of `cfg`; a key may appear once.
pub fn apply_config(cfg: &mut RunConfig, source: &str, text: &str, base: &Path) -> AppResult<()> {
    let grid = WavelengthGrid::canonical();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| AppError::parse(source, line, "expected 'key = value'"))?;
        if seen.iter().any(|k| k == key) {
            return Err(AppError::parse(source, line, format!("key '{key}' repeated")));
        }
        seen.push(key.to_string());
        let num = || -> AppResult<f64> {
            let v: f64 = value.parse().map_err(|_| AppError::parse(source, line, format!("{key}: '{value}' is not a number")))?;
            if !v.is_finite() {
                return Err(AppError::parse(source, line, format!("{key}: non-finite value")));
            }
            Ok(v)
        };
        let count = || -> AppResult<usize> { value.parse().map_err(|_| AppError::parse(source, line, format!("{key}: '{value}' is not a count"))) };
        let p = &mut cfg.params;
        let m = &mut cfg.models;
        match key {
            "planet_radius_km" => p.planet_radius_km = num()?,
            "top_altitude_km" => p.top_altitude_km = num()?,
            "rayleigh_scale_height_km" => p.rayleigh_scale_height_km = num()?,
            "aerosol_scale_height_km" => p.aerosol_scale_height_km = num()?,
            "aerosol_ssa" => p.aerosol_single_scattering_albedo = num()?,
            "alpha" => p.aerosol_alpha = num()?,
            "beta" => p.aerosol_beta = num()?,
            "g" => p.mie_asymmetry_g = num()?,
            "turbidity" => p.turbidity = num()?,
            "solar_angular_radius" => p.solar_angular_radius = num()?,
            "ground_albedo" => {
                p.ground_albedo = match value {
                    "grass" => data::grass_albedo()?,
                    v => match v.parse::<f64>() {
                        Ok(a) if (0.0..=1.0).contains(&a) => Spectrum::constant(grid.clone(), a, Quantity::Albedo)?,
                        Ok(a) => return Err(AppError::parse(source, line, format!("ground_albedo {a} outside [0, 1]"))),
                        Err(_) => load_spectrum(&resolve(base, v), Quantity::Albedo)?,
                    },
                }
                .resampled(&grid, Extrapolation::Clamp);
            }
            "solar_spectrum" => {
                p.solar_spectrum =
                    if value == "am0" { data::solar_spectrum()? } else { load_spectrum(&resolve(base, value), Quantity::Irradiance)? }
                        .resampled(&grid, Extrapolation::Clamp);
            }
            "nishita93.spheres" => m.nishita93.spheres = count()?,
            "nishita93.cylinders" => m.nishita93.cylinders = count()?,
            "oneal.samples" => m.oneal_samples = count()?,
            "nishita96.voxels" => m.nishita96.voxels = count()?,
            "nishita96.extent_km" => m.nishita96.extent_km = num()?,
            "haber.spheres" => m.haber.spheres = count()?,
            "haber.n_theta" => m.haber.n_theta = count()?,
            "haber.n_phi" => m.haber.n_phi = count()?,
            "haber.orders" => m.haber.orders = count()?,
            "haber.gather_theta" => m.haber.gather_theta = count()?,
            "haber.gather_phi" => m.haber.gather_phi = count()?,
            "haber.gather_spheres" => m.haber.gather_spheres = count()?,
            k if k.starts_with("bruneton.") || k.starts_with("inversion.") => {
                let (prefix, field) = k.split_once('.').expect("prefix checked");
                let b = if prefix == "bruneton" { &mut m.bruneton } else { &mut m.inversion };
                let slot = match field {
                    "n_r" => &mut b.n_r,
                    "n_mu" => &mut b.n_mu,
                    "n_mu_s" => &mut b.n_mu_s,
                    "n_nu" => &mut b.n_nu,
                    "n_theta_i" => &mut b.n_theta_i,
                    "n_phi_i" => &mut b.n_phi_i,
                    "orders" => &mut b.orders,
                    "samples" => &mut b.samples,
                    _ => return Err(AppError::parse(source, line, format!("unknown key '{key}'"))),
                };
                *slot = count()?;
            }
            _ => return Err(AppError::parse(source, line, format!("unknown key '{key}'"))),
        }
        cfg.params.validate().map_err(|e| AppError::parse(source, line, e.to_string()))?;
    }
    Ok(())
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_config(path: &Path) -> AppResult<RunConfig> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&path.display().to_string(), &read_text(path)?, base)
}
