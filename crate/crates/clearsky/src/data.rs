//! Reference data shipped with the crate: colour matching functions,
//! daylight basis, solar spectrum, grass albedo, Rayleigh coefficients,
//! the Hosek-Wilkie coefficients and the Ithaca sun ephemeris.

use clearsky_core::atmosphere::AtmosphereParams;
use clearsky_core::color::{ColorMatchingTable, DaylightBasis};
use clearsky_core::dataset::SunEphemeris;
use clearsky_core::models::HosekDataset;
use clearsky_core::spectrum::Extrapolation;
use clearsky_core::{Quantity, Spectrum, WavelengthGrid};

use crate::error::AppResult;
use crate::formats::{parse_ephemeris, parse_spectrum};
use crate::text;

pub const CIE_1931: &str = include_str!("../data/cie1931_2deg_5nm.txt");
pub const DAYLIGHT_BASIS: &str = include_str!("../data/cie_daylight_basis_10nm.txt");
pub const SOLAR_AM0: &str = include_str!("../data/solar_irradiance_am0.txt");
pub const GRASS_ALBEDO: &str = include_str!("../data/grass_albedo.txt");
pub const RAYLEIGH: &str = include_str!("../data/rayleigh_penndorf.txt");
pub const HOSEK: &str = include_str!("../data/hosek_wilkie_spectral.txt");
pub const ITHACA_EPHEMERIS: &str = include_str!("../data/ephemeris_ithaca_2013-05-12.txt");

pub fn cie_cmf() -> AppResult<ColorMatchingTable> {
    let rows = text::table("cie1931_2deg_5nm.txt", CIE_1931, 4)?;
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let grid = WavelengthGrid::new(col(0))?;
    Ok(ColorMatchingTable::new(grid, col(1), col(2), col(3))?)
}

pub fn daylight_basis() -> AppResult<DaylightBasis> {
    let rows = text::table("cie_daylight_basis_10nm.txt", DAYLIGHT_BASIS, 4)?;
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    Ok(DaylightBasis::new(col(0), col(1), col(2), col(3))?)
}

pub fn solar_spectrum() -> AppResult<Spectrum> {
    parse_spectrum("solar_irradiance_am0.txt", SOLAR_AM0, Quantity::Irradiance)
}

pub fn grass_albedo() -> AppResult<Spectrum> {
    parse_spectrum("grass_albedo.txt", GRASS_ALBEDO, Quantity::Albedo)
}

pub fn rayleigh_scattering() -> AppResult<Spectrum> {
    parse_spectrum("rayleigh_penndorf.txt", RAYLEIGH, Quantity::Coefficient)
}

pub fn hosek_dataset() -> AppResult<HosekDataset> {
    Ok(HosekDataset::parse(HOSEK)?)
}

pub fn ithaca_ephemeris() -> AppResult<SunEphemeris> {
    parse_ephemeris("ephemeris_ithaca_2013-05-12.txt", ITHACA_EPHEMERIS)
}

/// Default atmosphere on `grid`: tabulated Rayleigh coefficients, grass
/// albedo and the AM0 solar spectrum, linearly resampled.
pub fn default_params(grid: &WavelengthGrid) -> AppResult<AtmosphereParams> {
    let on = |s: Spectrum, q: Quantity| Spectrum::new(grid.clone(), s.resampled(grid, Extrapolation::Clamp).into_values(), q);
    let rayleigh = on(rayleigh_scattering()?, Quantity::Coefficient)?;
    let albedo = on(grass_albedo()?, Quantity::Albedo)?;
    let solar = on(solar_spectrum()?, Quantity::Irradiance)?;
    Ok(AtmosphereParams::with_spectra(rayleigh, albedo, solar))
}

/// Everything a run needs besides the atmosphere.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub cmf: ColorMatchingTable,
    pub daylight: DaylightBasis,
    pub hosek: HosekDataset,
}

impl ReferenceData {
    pub fn embedded() -> AppResult<Self> {
        Ok(ReferenceData { cmf: cie_cmf()?, daylight: daylight_basis()?, hosek: hosek_dataset()? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_load() {
        let cmf = cie_cmf().unwrap();
        assert_eq!(cmf.grid().len(), 95);
        assert!(daylight_basis().is_ok());
        assert!(hosek_dataset().is_ok());
        let p = default_params(&WavelengthGrid::canonical()).unwrap();
        p.validate().unwrap();
        assert!(p.grid().is_canonical());
        let e = ithaca_ephemeris().unwrap();
        assert_eq!(e.entries().len(), 20);
        assert_eq!(e.entries().iter().filter(|x| x.time.as_str() >= "09h30").count(), 17);
    }

    #[test]
    fn rayleigh_table_matches_the_closed_form() {
        let s = rayleigh_scattering().unwrap();
        for (&l, &v) in s.grid().as_slice().iter().zip(s.values()) {
            let f = clearsky_core::atmosphere::rayleigh_beta(l);
            assert!((v / f - 1.0).abs() < 0.02, "{l}: {v} vs {f}");
        }
    }
}
