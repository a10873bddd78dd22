//! Sky radiance sampled over the dome: one record per time of day, each
//! holding spectra for 81 view directions, plus the sun ephemeris and a
//! smooth spherical interpolation of the samples.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{to_radians, wrap, Vec3, PI};
use crate::models::{SkyBuilder, SkySource};
use crate::spectrum::{Quantity, Spectrum, WavelengthGrid};
use crate::{Error, Result};

/// Directions per record.
pub const DIRECTIONS: usize = 81;

/// The assumed sampling layout: the zenith plus rings of 10, 16, 24 and 30
/// equally spaced azimuths at zenith angles 18, 36, 54 and 72 degrees, as
/// (zenith, azimuth) in degrees.
pub fn standard_directions() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(DIRECTIONS);
    out.push((0.0, 0.0));
    for (n, z) in [(10usize, 18.0), (16, 36.0), (24, 54.0), (30, 72.0)] {
        for k in 0..n {
            out.push((z, 360.0 * k as f64 / n as f64));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSample {
    pub zenith_deg: f64,
    pub azimuth_deg: f64,
    pub spectrum: Spectrum,
}

impl DirectionSample {
    pub fn direction(&self) -> Vec3 {
        Vec3::from_angles_deg(self.zenith_deg, self.azimuth_deg)
    }
}

/// Samples taken at one time of day.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyRecord {
    pub time: String,
    pub sun_zenith_deg: f64,
    pub sun_azimuth_deg: f64,
    pub samples: Vec<DirectionSample>,
}

impl SkyRecord {
    pub fn sun_direction(&self) -> Vec3 {
        Vec3::from_angles_deg(self.sun_zenith_deg, self.sun_azimuth_deg)
    }

    /// Smooth interpolation of the samples in the given upper hemisphere
    /// direction, exact at the sample directions.
    pub fn interpolate(&self, direction: Vec3) -> Result<Spectrum> {
        let grid = self.samples.first().ok_or_else(|| invalid!("record {} has no samples", self.time))?.spectrum.grid().clone();
        let weights = SphericalInterpolator::new(self)?.weights(direction)?;
        Ok(combine(&grid, &self.samples, &weights))
    }
}

fn combine(grid: &WavelengthGrid, samples: &[DirectionSample], weights: &[(usize, f64)]) -> Spectrum {
    let mut out = alloc::vec![0.0; grid.len()];
    for &(i, w) in weights {
        for (o, v) in out.iter_mut().zip(samples[i].spectrum.values()) {
            *o += w * v;
        }
    }
    for v in out.iter_mut() {
        *v = v.max(0.0);
    }
    Spectrum::new(grid.clone(), out, Quantity::Radiance).expect("clamped values are valid")
}

/// Tensor-product cubic interpolation: periodic cubic Hermite splines along
/// each ring of equal zenith angle, then a cubic Hermite spline across the
/// rings. A single sample at the zenith acts as a pole: the rings are
/// mirrored through it at the opposite azimuth so the surface stays smooth
/// across the zenith. Beyond the outermost ring values are held constant.
#[derive(Debug, Clone)]
pub struct SphericalInterpolator {
    /// Ring zenith angles in radians with (azimuth, sample index) sorted by
    /// azimuth.
    rings: Vec<(f64, Vec<(f64, usize)>)>,
}

impl SphericalInterpolator {
    pub fn new(record: &SkyRecord) -> Result<Self> {
        let mut rings: Vec<(f64, Vec<(f64, usize)>)> = Vec::new();
        for (i, s) in record.samples.iter().enumerate() {
            let z = to_radians(s.zenith_deg);
            let a = wrap(to_radians(s.azimuth_deg), 2.0 * PI);
            match rings.iter_mut().find(|(rz, _)| (rz - z).abs() < 1e-8) {
                Some((_, ring)) => ring.push((a, i)),
                None => rings.push((z, alloc::vec![(a, i)])),
            }
        }
        if rings.is_empty() {
            return Err(invalid!("record {} has no samples", record.time));
        }
        rings.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite zenith"));
        for (_, ring) in rings.iter_mut() {
            ring.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite azimuth"));
            if ring.windows(2).any(|w| w[1].0 - w[0].0 < 1e-9) {
                return Err(invalid!("record {} repeats a sample direction", record.time));
            }
        }
        Ok(SphericalInterpolator { rings })
    }

    fn has_pole(&self) -> bool {
        self.rings[0].0 < 1e-8
    }

    /// Weights of the ring samples at azimuth `a` (radians).
    fn ring_weights(&self, ring: usize, a: f64, scale: f64, out: &mut Vec<(usize, f64)>) {
        let pts = &self.rings[ring].1;
        let n = pts.len();
        if n == 1 || (ring == 0 && self.has_pole()) {
            for &(_, i) in pts {
                out.push((i, scale / n as f64));
            }
            return;
        }
        let x0 = pts[0].0;
        let a = x0 + wrap(a - x0, 2.0 * PI);
        let k = pts.partition_point(|p| p.0 <= a) - 1;
        // unwrapped positions of neighbours k-1 .. k+2
        let pos = |j: isize| -> (f64, usize) {
            let m = j.rem_euclid(n as isize) as usize;
            let turns = j.div_euclid(n as isize) as f64;
            (pts[m].0 + 2.0 * PI * turns, pts[m].1)
        };
        let k = k as isize;
        let nodes = [pos(k - 1), pos(k), pos(k + 1), pos(k + 2)];
        hermite_weights(nodes.map(|p| p.0), a, |slot, w| out.push((nodes[slot].1, scale * w)));
    }

    /// Interpolation weights over the record samples.
    pub fn weights(&self, direction: Vec3) -> Result<Vec<(usize, f64)>> {
        let l = direction.length();
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid!("direction must be finite and nonzero"));
        }
        let d = direction * (1.0 / l);
        if d.z < -1e-9 {
            return Err(invalid!("direction below the horizon (z = {})", d.z));
        }
        let (z, a) = d.to_angles();
        // rows as (zenith, ring, azimuth offset), mirrored through the pole
        let mut rows: Vec<(f64, usize, f64)> = Vec::new();
        if self.has_pole() {
            for r in (1..self.rings.len()).rev() {
                rows.push((-self.rings[r].0, r, PI));
            }
        }
        for r in 0..self.rings.len() {
            rows.push((self.rings[r].0, r, 0.0));
        }
        let mut out = Vec::new();
        let last = rows.len() - 1;
        if rows.len() == 1 || z >= rows[last].0 {
            self.ring_weights(rows[last].1, a + rows[last].2, 1.0, &mut out);
            return Ok(out);
        }
        if z <= rows[0].0 {
            self.ring_weights(rows[0].1, a + rows[0].2, 1.0, &mut out);
            return Ok(out);
        }
        let k = rows.partition_point(|r| r.0 <= z) - 1;
        let idx = |j: isize| j.clamp(0, last as isize) as usize;
        let ks = [idx(k as isize - 1), k, idx(k as isize + 1), idx(k as isize + 2)];
        // clamped ends get one-sided differences
        let mut xs = ks.map(|j| rows[j].0);
        if ks[0] == ks[1] {
            xs[0] = xs[1] - (xs[2] - xs[1]);
        }
        if ks[3] == ks[2] {
            xs[3] = xs[2] + (xs[2] - xs[1]);
        }
        let mut row_w = [0.0; 4];
        hermite_weights(xs, z, |slot, w| row_w[slot] += w);
        if ks[0] == ks[1] {
            // extrapolated node: its value is 2 p1 - p2 for a one-sided slope
            let w0 = row_w[0];
            row_w[0] = 0.0;
            row_w[1] += 2.0 * w0;
            row_w[2] -= w0;
        }
        if ks[3] == ks[2] {
            let w3 = row_w[3];
            row_w[3] = 0.0;
            row_w[2] += 2.0 * w3;
            row_w[1] -= w3;
        }
        for slot in 0..4 {
            if row_w[slot] != 0.0 {
                let (_, ring, off) = rows[ks[slot]];
                self.ring_weights(ring, a + off, row_w[slot], &mut out);
            }
        }
        Ok(out)
    }
}

/// Cubic Hermite weights on nodes `x[0..4]` for a query in `[x1, x2]`, with
/// centred finite-difference tangents at `x1` and `x2`.
fn hermite_weights(x: [f64; 4], q: f64, mut emit: impl FnMut(usize, f64)) {
    let h = x[2] - x[1];
    let t = ((q - x[1]) / h).clamp(0.0, 1.0);
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    // m1 = (p2 - p0) / (x2 - x0), m2 = (p3 - p1) / (x3 - x1)
    let c1 = h * h10 / (x[2] - x[0]);
    let c2 = h * h11 / (x[3] - x[1]);
    emit(0, -c1);
    emit(1, h00 - c2);
    emit(2, h01 + c1);
    emit(3, c2);
}

/// Records sharing one wavelength grid, each with [`DIRECTIONS`] samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyDataset {
    grid: WavelengthGrid,
    records: Vec<SkyRecord>,
}

impl SkyDataset {
    pub fn new(records: Vec<SkyRecord>) -> Result<Self> {
        let first = records.first().and_then(|r| r.samples.first()).ok_or_else(|| invalid!("dataset has no records"))?;
        let grid = first.spectrum.grid().clone();
        for r in &records {
            if r.samples.len() != DIRECTIONS {
                return Err(invalid!("record {} has {} directions instead of {DIRECTIONS}", r.time, r.samples.len()));
            }
            if !(r.sun_zenith_deg.is_finite() && r.sun_azimuth_deg.is_finite()) {
                return Err(invalid!("record {} has a non-finite sun direction", r.time));
            }
            for (k, s) in r.samples.iter().enumerate() {
                if s.spectrum.grid() != &grid {
                    return Err(invalid!("record {} sample {k} uses another wavelength grid", r.time));
                }
                if !(s.zenith_deg >= 0.0 && s.zenith_deg <= 90.0 && s.azimuth_deg.is_finite()) {
                    return Err(invalid!("record {} sample {k} is not in the upper hemisphere", r.time));
                }
            }
            SphericalInterpolator::new(r)?;
        }
        Ok(SkyDataset { grid, records })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn records(&self) -> &[SkyRecord] {
        &self.records
    }

    pub fn record(&self, time: &str) -> Option<&SkyRecord> {
        self.records.iter().find(|r| r.time == time)
    }

    /// Samples every time of `ephemeris` that has the sun above the horizon
    /// in the given directions, rebuilding sun-dependent models per time.
    pub fn synthesize(builder: &dyn SkyBuilder, ephemeris: &SunEphemeris, directions: &[(f64, f64)]) -> Result<Self> {
        let mut records = Vec::new();
        for e in ephemeris.entries().iter().filter(|e| e.zenith_deg < 90.0) {
            let sun = e.sun_direction();
            let model = builder.model_for_sun(sun)?;
            let samples = directions
                .iter()
                .map(|&(z, a)| {
                    Ok(DirectionSample { zenith_deg: z, azimuth_deg: a, spectrum: model.radiance(Vec3::from_angles_deg(z, a), sun)? })
                })
                .collect::<Result<Vec<_>>>()?;
            records.push(SkyRecord { time: e.time.clone(), sun_zenith_deg: e.zenith_deg, sun_azimuth_deg: e.azimuth_deg, samples });
        }
        SkyDataset::new(records)
    }

    /// Same records on another grid, by linear interpolation.
    pub fn resampled(&self, grid: &WavelengthGrid) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| SkyRecord {
                samples: r
                    .samples
                    .iter()
                    .map(|s| DirectionSample {
                        spectrum: s.spectrum.resampled(grid, crate::spectrum::Extrapolation::Clamp),
                        ..s.clone()
                    })
                    .collect(),
                ..r.clone()
            })
            .collect();
        SkyDataset { grid: grid.clone(), records }
    }
}

/// A record seen as a radiance source through [`SphericalInterpolator`].
#[derive(Debug, Clone)]
pub struct RecordSky {
    record: SkyRecord,
    grid: WavelengthGrid,
    interpolator: SphericalInterpolator,
}

impl RecordSky {
    pub fn new(record: SkyRecord) -> Result<Self> {
        let grid = record.samples.first().ok_or_else(|| invalid!("record {} has no samples", record.time))?.spectrum.grid().clone();
        let interpolator = SphericalInterpolator::new(&record)?;
        Ok(RecordSky { record, grid, interpolator })
    }

    pub fn record(&self) -> &SkyRecord {
        &self.record
    }
}

impl SkySource for RecordSky {
    fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    fn radiance_into(&self, view: Vec3, _sun: Vec3, out: &mut [f64]) -> Result<()> {
        if out.len() != self.grid.len() {
            return Err(invalid!("output buffer has {} slots for {} wavelengths", out.len(), self.grid.len()));
        }
        let w = self.interpolator.weights(view)?;
        let s = combine(&self.grid, &self.record.samples, &w);
        out.copy_from_slice(s.values());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisEntry {
    pub time: String,
    pub zenith_deg: f64,
    pub azimuth_deg: f64,
}

impl EphemerisEntry {
    pub fn sun_direction(&self) -> Vec3 {
        Vec3::from_angles_deg(self.zenith_deg, self.azimuth_deg)
    }
}

/// Time labels with sun positions; zenith angles up to 108 degrees allow
/// rows with the sun below the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SunEphemeris {
    entries: Vec<EphemerisEntry>,
}

impl SunEphemeris {
    pub fn new(entries: Vec<EphemerisEntry>) -> Result<Self> {
        for (k, e) in entries.iter().enumerate() {
            if !(e.zenith_deg >= 0.0 && e.zenith_deg <= 108.0) {
                return Err(invalid!("ephemeris row {} ({}): sun zenith {} outside [0, 108] degrees", k + 1, e.time, e.zenith_deg));
            }
            if !e.azimuth_deg.is_finite() {
                return Err(invalid!("ephemeris row {} ({}): non-finite azimuth", k + 1, e.time));
            }
            if entries[..k].iter().any(|o| o.time == e.time) {
                return Err(invalid!("ephemeris row {}: duplicate time {}", k + 1, e.time));
            }
        }
        Ok(SunEphemeris { entries })
    }

    pub fn entries(&self) -> &[EphemerisEntry] {
        &self.entries
    }

    pub fn find(&self, time: &str) -> Result<&EphemerisEntry> {
        self.entries.iter().find(|e| e.time == time).ok_or_else(|| Error::InvalidInput(alloc::format!("no ephemeris entry for time {time}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn record_from(f: impl Fn(f64, f64) -> f64, rotate: f64) -> SkyRecord {
        let grid = WavelengthGrid::uniform(400.0, 700.0, 4).unwrap();
        let samples = standard_directions()
            .into_iter()
            .map(|(z, a)| {
                let a = a + rotate;
                DirectionSample {
                    zenith_deg: z,
                    azimuth_deg: a,
                    spectrum: Spectrum::new(grid.clone(), alloc::vec![f(z, a); 4], Quantity::Radiance).unwrap(),
                }
            })
            .collect();
        SkyRecord { time: "t".to_string(), sun_zenith_deg: 40.0, sun_azimuth_deg: 0.0, samples }
    }

    fn smooth(z: f64, a: f64) -> f64 {
        let v = Vec3::from_angles_deg(z, a);
        2.0 + v.x + 0.5 * v.y * v.y + v.z
    }

    #[test]
    fn standard_layout_has_81_directions() {
        assert_eq!(standard_directions().len(), DIRECTIONS);
    }

    #[test]
    fn exact_at_the_samples() {
        let r = record_from(smooth, 0.0);
        for s in &r.samples {
            let v = r.interpolate(s.direction()).unwrap();
            assert!((v.values()[0] - s.spectrum.values()[0]).abs() < 1e-12, "{} {}", s.zenith_deg, s.azimuth_deg);
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let r = record_from(|_, _| 3.25, 0.0);
        for (z, a) in [(5.0, 10.0), (27.0, 200.0), (63.0, 359.0), (85.0, 91.0), (0.0, 0.0)] {
            let v = r.interpolate(Vec3::from_angles_deg(z, a)).unwrap();
            assert!((v.values()[2] - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_fields_are_followed_closely() {
        let r = record_from(smooth, 0.0);
        for (z, a) in [(9.0, 33.0), (27.0, 200.0), (45.0, 100.0), (63.0, 300.0), (3.0, 250.0)] {
            let v = r.interpolate(Vec3::from_angles_deg(z, a)).unwrap().values()[0];
            assert!((v - smooth(z, a)).abs() < 0.02, "{z} {a}: {v} vs {}", smooth(z, a));
        }
    }

    #[test]
    fn below_horizon_is_rejected() {
        let r = record_from(smooth, 0.0);
        assert!(r.interpolate(Vec3::new(1.0, 0.0, -0.5)).is_err());
    }

    #[test]
    fn wrong_direction_count_names_the_record() {
        let mut r = record_from(smooth, 0.0);
        r.samples.pop();
        let err = SkyDataset::new(alloc::vec![r]).unwrap_err();
        assert!(alloc::format!("{err}").contains("record t has 80 directions"));
    }

    #[test]
    fn ephemeris_rejects_duplicates_and_range() {
        let e = |t: &str, z: f64| EphemerisEntry { time: t.to_string(), zenith_deg: z, azimuth_deg: 0.0 };
        assert!(SunEphemeris::new(alloc::vec![e("a", 10.0), e("a", 20.0)]).is_err());
        assert!(SunEphemeris::new(alloc::vec![e("a", 110.0)]).is_err());
        assert!(SunEphemeris::new(alloc::vec![e("a", 100.0), e("b", 20.0)]).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn rotation_consistent(rot in 0.0f64..360.0, z in 0.0f64..89.0, a in 0.0f64..360.0) {
                let f = |zz: f64, aa: f64| smooth(zz, aa);
                let base = record_from(f, 0.0);
                // same values carried to rotated positions
                let mut turned = base.clone();
                for s in turned.samples.iter_mut() {
                    s.azimuth_deg += rot;
                }
                let v0 = base.interpolate(Vec3::from_angles_deg(z, a)).unwrap().values()[0];
                let v1 = turned.interpolate(Vec3::from_angles_deg(z, a + rot)).unwrap().values()[0];
                prop_assert!((v0 - v1).abs() < 1e-9);
            }

            #[test]
            fn bounded_overshoot(z in 0.0f64..89.0, a in 0.0f64..360.0) {
                let r = record_from(|zz, aa| 1.0 + 0.8 * (to_radians(aa) * 2.0).sin().abs() * zz / 72.0, 0.0);
                let q = Vec3::from_angles_deg(z, a);
                let v = r.interpolate(q).unwrap().values()[0];
                let mut near: Vec<(f64, f64)> = r.samples.iter().map(|s| ((s.direction() - q).length(), s.spectrum.values()[0])).collect();
                near.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                let lo = near[..4].iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
                let hi = near[..4].iter().map(|n| n.1).fold(0.0, f64::max);
                prop_assert!(v >= 0.5 * lo - 1e-12 && v <= 1.5 * hi + 1e-12, "{} not in [{}, {}]", v, lo, hi);
            }
        }
    }
}
