//! Errors of a radiance source against sampled reference skies.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{SkyDataset, SkyRecord};
use crate::error::invalid;
use crate::models::{SkyBuilder, SkySource};
use crate::spectrum::{Extrapolation, WavelengthGrid};
use crate::Result;

/// Band of the RMSE: the range every model supports.
pub const RMSE_BAND: [f64; 2] = [360.0, 720.0];

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionError {
    pub zenith_deg: f64,
    pub azimuth_deg: f64,
    /// Band-summed radiances.
    pub model: f64,
    pub reference: f64,
    /// `100 |model - reference| / reference`; `None` for a zero reference.
    pub relative_error_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub time: String,
    pub band: [f64; 2],
    pub directions: Vec<DirectionError>,
    /// Root mean square error over directions and band wavelengths, in
    /// mW m^-2 sr^-1 nm^-1.
    pub rmse_mw: f64,
    /// Sum of squared errors in W^2 and the number of terms, for pooling.
    pub sum_sq: f64,
    pub count: usize,
}

impl ErrorReport {
    /// Directions whose reference is zero and has no relative error.
    pub fn excluded(&self) -> usize {
        self.directions.iter().filter(|d| d.relative_error_pct.is_none()).count()
    }

    /// RMSE of several reports pooled together.
    pub fn pooled_rmse_mw(reports: &[ErrorReport]) -> f64 {
        let se: f64 = reports.iter().map(|r| r.sum_sq).sum();
        let n: usize = reports.iter().map(|r| r.count).sum();
        if n == 0 {
            return 0.0;
        }
        1000.0 * crate::math::sqrt(se / n as f64)
    }
}

fn band_range(grid: &WavelengthGrid, band: [f64; 2]) -> Result<core::ops::Range<usize>> {
    if !(band[0] < band[1]) || band[0] < grid.min() - 1e-9 || band[1] > grid.max() + 1e-9 {
        return Err(invalid!("band [{}, {}] nm outside the reference coverage {}..{} nm", band[0], band[1], grid.min(), grid.max()));
    }
    let r = grid.band_indices(band[0], band[1]);
    if r.is_empty() {
        return Err(invalid!("band [{}, {}] nm holds no reference wavelength", band[0], band[1]));
    }
    Ok(r)
}

/// Compares `source` with one record, the source being queried with the
/// record's sun direction and resampled to the record's grid if needed.
pub fn compare(source: &dyn SkySource, reference: &SkyRecord, band: [f64; 2]) -> Result<ErrorReport> {
    let sun = reference.sun_direction();
    compare_with(reference, band, |view| {
        let s = source.radiance(view, sun)?;
        Ok(s.values().to_vec())
    }, source.grid())
}

/// Compares two records sampled in the same directions.
pub fn compare_records(model: &SkyRecord, reference: &SkyRecord, band: [f64; 2]) -> Result<ErrorReport> {
    if model.samples.len() != reference.samples.len() {
        return Err(invalid!("records {} and {} have different direction counts", model.time, reference.time));
    }
    let grid = model.samples.first().ok_or_else(|| invalid!("record {} is empty", model.time))?.spectrum.grid().clone();
    let mut k = 0;
    compare_with(reference, band, |_| {
        let v = model.samples[k].spectrum.values().to_vec();
        k += 1;
        Ok(v)
    }, &grid)
}

fn compare_with(
    reference: &SkyRecord,
    band: [f64; 2],
    mut model: impl FnMut(crate::math::Vec3) -> Result<Vec<f64>>,
    model_grid: &WavelengthGrid,
) -> Result<ErrorReport> {
    let rgrid = reference.samples.first().ok_or_else(|| invalid!("record {} is empty", reference.time))?.spectrum.grid().clone();
    let range = band_range(&rgrid, band)?;
    let same = model_grid == &rgrid;
    let mut directions = Vec::with_capacity(reference.samples.len());
    let (mut se, mut count) = (0.0, 0usize);
    for s in &reference.samples {
        let raw = model(s.direction())?;
        let m = if same {
            raw
        } else {
            crate::spectrum::resample_linear(model_grid.as_slice(), &raw, rgrid.as_slice(), Extrapolation::Clamp)
        };
        let r = s.spectrum.values();
        let (mut ms, mut rs) = (0.0, 0.0);
        for i in range.clone() {
            let d = m[i] - r[i];
            se += d * d;
            count += 1;
            ms += m[i];
            rs += r[i];
        }
        directions.push(DirectionError {
            zenith_deg: s.zenith_deg,
            azimuth_deg: s.azimuth_deg,
            model: ms,
            reference: rs,
            relative_error_pct: (rs > 0.0).then(|| 100.0 * (ms - rs).abs() / rs),
        });
    }
    let rmse_mw = 1000.0 * crate::math::sqrt(se / count as f64);
    Ok(ErrorReport { time: reference.time.clone(), band, directions, rmse_mw, sum_sq: se, count })
}

/// Per-record reports over a whole dataset plus their pooled RMSE.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub records: Vec<ErrorReport>,
    pub rmse_mw: f64,
}

/// Compares a model with every record, rebuilding it for each sun
/// direction when it depends on the sun.
pub fn compare_dataset(builder: &dyn SkyBuilder, reference: &SkyDataset, band: [f64; 2]) -> Result<DatasetReport> {
    let mut records = Vec::with_capacity(reference.records().len());
    for r in reference.records() {
        let model = builder.model_for_sun(r.sun_direction())?;
        records.push(compare(model.as_ref(), r, band)?);
    }
    let rmse_mw = ErrorReport::pooled_rmse_mw(&records);
    Ok(DatasetReport { records, rmse_mw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{standard_directions, DirectionSample};
    use crate::spectrum::{Quantity, Spectrum};
    use alloc::string::ToString;

    fn record(scale: f64) -> SkyRecord {
        let g = WavelengthGrid::canonical();
        let samples = standard_directions()
            .into_iter()
            .enumerate()
            .map(|(k, (z, a))| DirectionSample {
                zenith_deg: z,
                azimuth_deg: a,
                spectrum: Spectrum::from_fn(g.clone(), Quantity::Radiance, |l| scale * (0.02 + 1e-4 * k as f64) * 500.0 / l).unwrap(),
            })
            .collect();
        SkyRecord { time: "10h00".to_string(), sun_zenith_deg: 40.0, sun_azimuth_deg: 0.0, samples }
    }

    #[test]
    fn self_comparison_is_exact() {
        let r = record(1.0);
        let rep = compare_records(&r, &r, RMSE_BAND).unwrap();
        assert_eq!(rep.rmse_mw, 0.0);
        assert!(rep.directions.iter().all(|d| d.relative_error_pct == Some(0.0)));
        // 30 canonical wavelengths fall in the band
        assert_eq!(rep.count, 81 * 30);
    }

    #[test]
    fn roles_swap_symmetrically() {
        let (a, b) = (record(1.0), record(1.07));
        let ab = compare_records(&a, &b, RMSE_BAND).unwrap();
        let ba = compare_records(&b, &a, RMSE_BAND).unwrap();
        assert!((ab.rmse_mw - ba.rmse_mw).abs() < 1e-12);
        assert!(ab.rmse_mw > 0.0);
    }

    #[test]
    fn record_source_matches_its_record() {
        let r = record(1.0);
        let sky = crate::dataset::RecordSky::new(r.clone()).unwrap();
        let rep = compare(&sky, &r, RMSE_BAND).unwrap();
        assert!(rep.rmse_mw < 1e-9);
    }

    #[test]
    fn band_outside_coverage_is_rejected() {
        let r = record(1.0);
        assert!(compare_records(&r, &r, [300.0, 720.0]).is_err());
    }
}
