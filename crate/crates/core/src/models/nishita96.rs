//! Single plus double scattering. Single scattering is the layered
//! integration of the Nishita93 model. For double scattering the incident
//! single scattered radiance is sampled along 8 directions in the plane of
//! the zenith and the sun, each read from a voxel table whose lines run
//! parallel to that direction so that it can be filled incrementally.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::atmosphere::{cornette_shanks, rayleigh_phase_value, AtmosphereParams, Coefficients};
use crate::error::invalid;
use crate::grid::Grid3D;
use crate::math::{exp, floor, ln, sqrt, Vec3};
use crate::spectrum::WavelengthGrid;
use crate::{Error, Result};

use super::common::{check_directions_from, check_finite, check_out, integrate_view, ViewRay};
use super::nishita93::{build_nishita93, Nishita93Config, Nishita93Model};
use super::{ModelKind, SkyModel, SkySource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nishita96Config {
    /// Voxels per table axis.
    pub voxels: usize,
    /// Horizontal size of the voxel box, centred on the observer.
    pub extent_km: f64,
    pub single: Nishita93Config,
}

impl Default for Nishita96Config {
    fn default() -> Self {
        Nishita96Config { voxels: 32, extent_km: 1700.0, single: Nishita93Config::default() }
    }
}

/// Half height of the vertical table range around the ground point; it also
/// covers the ground curving away at the box edges.
const Z_RANGE_KM: f64 = 60.0;
/// Scale of the sinh spacing of the vertical nodes, dense near the ground.
const Z_SPACING_KM: f64 = 2.0;
/// Longest step when integrating between two nodes of a line.
const MAX_STEP_KM: f64 = 2.0;
const MAX_SUBSTEPS: usize = 24;

#[derive(Debug, Clone)]
pub struct Nishita96Model {
    params: AtmosphereParams,
    coef: Coefficients,
    config: Nishita96Config,
    sun: Vec3,
    single: Nishita93Model,
    tables: Vec<DirectionTable>,
}

/// Horizontal unit vectors along and across the horizontal part of `w`.
fn horizontal_frame(w: Vec3) -> (Vec3, Vec3) {
    let h = Vec3::new(w.x, w.y, 0.0);
    let along = if h.length() > 1e-9 { h.normalized() } else { Vec3::new(1.0, 0.0, 0.0) };
    (along, Vec3::ZENITH.cross(along))
}

/// The 8 sampling directions: zenith, sun, the in-plane perpendiculars of
/// both and all their opposites.
pub fn sampling_directions(sun: Vec3) -> [Vec3; 8] {
    let (h, _) = horizontal_frame(sun);
    let p = Vec3::ZENITH - sun * sun.z;
    let s_perp = if p.length() > 1e-9 { p.normalized() } else { h };
    [Vec3::ZENITH, -Vec3::ZENITH, sun, -sun, h, -h, s_perp, -s_perp]
}

#[derive(Debug, Clone, Copy)]
enum Layout {
    /// Axes: horizontal base position (along, across) and height; lines
    /// follow the height axis.
    Sheared { slope: f64 },
    /// Axes: distance along `w`, across, height; lines follow the first
    /// axis. Used for horizontal directions.
    Flat,
}

#[derive(Debug, Clone)]
struct DirectionTable {
    w: Vec3,
    along: Vec3,
    across: Vec3,
    layout: Layout,
    /// Start and spacing of the first and second axes.
    first: (f64, f64),
    across_axis: (f64, f64),
    n: usize,
    /// Single scattered radiance looking along `w`, per wavelength.
    grid: Grid3D,
}

/// Node `k0 = (n - 1) / 2` sits exactly on the ground plane so that the
/// steep aerosol gradient there is not averaged with nodes inside the planet.
fn z_scale(n: usize) -> (f64, f64) {
    let k0 = ((n - 1) / 2) as f64;
    (k0, asinh(Z_RANGE_KM / Z_SPACING_KM) / ((n - 1) as f64 - k0))
}

fn z_level(k: usize, n: usize) -> f64 {
    let (k0, c) = z_scale(n);
    Z_SPACING_KM * sinh_(c * (k as f64 - k0))
}

fn z_index(z: f64, n: usize) -> f64 {
    let (k0, c) = z_scale(n);
    k0 + asinh(z / Z_SPACING_KM) / c
}

/// Start and spacing of `n` uniform nodes covering `[lo, hi]` with one node
/// at the origin, below the observer.
fn axis_through_origin(lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let step = (hi - lo) / (n - 2) as f64;
    (step * floor(lo / step), step)
}

fn asinh(x: f64) -> f64 {
    let a = x.abs();
    let v = ln(a + sqrt(a * a + 1.0));
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn sinh_(x: f64) -> f64 {
    0.5 * (exp(x) - exp(-x))
}

impl DirectionTable {
    fn new(w: Vec3, n: usize, extent: f64, nl: usize) -> Result<Self> {
        let (along, across) = horizontal_frame(w);
        let e = 0.5 * extent;
        let (layout, first) = if w.z.abs() < 1e-3 {
            (Layout::Flat, (-e, e))
        } else {
            let slope = sqrt((1.0 - w.z * w.z).max(0.0)) / w.z;
            let (a, b) = (-Z_RANGE_KM * slope, Z_RANGE_KM * slope);
            (Layout::Sheared { slope }, (-e - a.max(b), e - a.min(b)))
        };
        Ok(DirectionTable {
            w,
            along,
            across,
            layout,
            first: axis_through_origin(first.0, first.1, n),
            across_axis: axis_through_origin(-e, e, n),
            n,
            grid: Grid3D::new([n, n, n], nl)?,
        })
    }

    fn first_value(&self, i: usize) -> f64 {
        self.first.0 + self.first.1 * i as f64
    }

    fn across_value(&self, j: usize) -> f64 {
        self.across_axis.0 + self.across_axis.1 * j as f64
    }

    /// Position of node (i, j, k), relative to the ground point below the
    /// observer.
    fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let z = z_level(k, self.n);
        let a = self.first_value(i);
        let b = self.across_value(j);
        let shift = match self.layout {
            Layout::Sheared { slope } => a + z * slope,
            Layout::Flat => a,
        };
        self.along * shift + self.across * b + Vec3::ZENITH * z
    }

    fn coords(&self, p: Vec3) -> [f64; 3] {
        let u = p.dot(self.along);
        let a = match self.layout {
            Layout::Sheared { slope } => u - p.z * slope,
            Layout::Flat => u,
        };
        let fi = (a - self.first.0) / self.first.1;
        let fj = (p.dot(self.across) - self.across_axis.0) / self.across_axis.1;
        [fi, fj, z_index(p.z, self.n)]
    }

    /// Node indices of every line, ordered along `w`.
    fn lines(&self) -> Vec<Vec<[usize; 3]>> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let line: Vec<[usize; 3]> = match self.layout {
                    Layout::Sheared { .. } if self.w.z > 0.0 => (0..n).map(|k| [a, b, k]).collect(),
                    Layout::Sheared { .. } => (0..n).rev().map(|k| [a, b, k]).collect(),
                    Layout::Flat => (0..n).map(|i| [i, a, b]).collect(),
                };
                out.push(line);
            }
        }
        out
    }
}

/// State shared while filling the tables.
struct Filler<'a> {
    params: &'a AtmosphereParams,
    coef: &'a Coefficients,
    single: &'a Nishita93Model,
    sun: Vec3,
    center: Vec3,
}

/// Scattering source at one point for light leaving along `-w`.
struct Source {
    inside: bool,
    rho: [f64; 2],
    /// Per wavelength, `β ρ P T_sun E` summed over both constituents.
    value: Vec<f64>,
}

impl Filler<'_> {
    fn source(&self, p: Vec3, pr: f64, pm: f64, ts: &mut [f64]) -> Source {
        let nl = self.coef.len();
        let q = p - self.center;
        let r = q.length();
        let rg = self.params.r_ground();
        if r < rg {
            return Source { inside: true, rho: [0.0; 2], value: alloc::vec![0.0; nl] };
        }
        if r > self.params.r_top() {
            return Source { inside: false, rho: [0.0; 2], value: alloc::vec![0.0; nl] };
        }
        let h = r - rg;
        let rho = [self.params.rayleigh_density(h), self.params.aerosol_density(h)];
        let mu_s = (q.dot(self.sun) / r).clamp(-1.0, 1.0);
        let mut value = alloc::vec![0.0; nl];
        if let Some(col) = self.single.sun_columns(r, mu_s) {
            self.coef.transmittance_into(col, ts);
            let c = self.coef;
            for i in 0..nl {
                value[i] = c.solar[i] * ts[i] * (c.rayleigh[i] * rho[0] * pr + c.mie_scattering[i] * rho[1] * pm);
            }
        }
        Source { inside: false, rho, value }
    }

    /// Fills one table, line by line from the far end.
    fn fill(&self, table: &mut DirectionTable) {
        let nl = self.coef.len();
        let cos_s = table.w.dot(self.sun);
        let pr = rayleigh_phase_value(cos_s);
        let pm = cornette_shanks(self.params.mie_asymmetry_g, cos_s);
        let mut ts = alloc::vec![0.0; nl];
        let mut l = alloc::vec![0.0; nl];
        for line in table.lines() {
            l.iter_mut().for_each(|v| *v = 0.0);
            let last = *line.last().expect("lines have nodes");
            let mut ahead_pos = table.node(last[0], last[1], last[2]);
            // beyond the last node, up to the boundary of the atmosphere
            let tail = self.exit_distance(ahead_pos, table.w);
            if tail > 0.0 && (ahead_pos - self.center).length() >= self.params.r_ground() {
                self.integrate_segment(ahead_pos, ahead_pos + table.w * tail, pr, pm, &mut ts, &mut l);
            }
            table.grid.cell_mut(last).copy_from_slice(&l);
            for idx in line.iter().rev().skip(1) {
                let pos = table.node(idx[0], idx[1], idx[2]);
                self.integrate_segment(pos, ahead_pos, pr, pm, &mut ts, &mut l);
                table.grid.cell_mut(*idx).copy_from_slice(&l);
                ahead_pos = pos;
            }
        }
    }

    /// Distance from `p` along `w` to where the line leaves the top sphere,
    /// zero when it never enters it.
    fn exit_distance(&self, p: Vec3, w: Vec3) -> f64 {
        let q = p - self.center;
        let rt = self.params.r_top();
        let b = q.dot(w);
        let disc = b * b - (q.dot(q) - rt * rt);
        if disc <= 0.0 {
            return 0.0;
        }
        (-b + sqrt(disc)).max(0.0)
    }

    /// `l` holds the radiance seen from `b` looking along the line; on
    /// return it holds the radiance seen from `a`, which lies behind `b`.
    fn integrate_segment(&self, a: Vec3, b: Vec3, pr: f64, pm: f64, ts: &mut [f64], l: &mut [f64]) {
        let nl = self.coef.len();
        let len = (b - a).length();
        if len <= 0.0 {
            return;
        }
        let m = ((len / MAX_STEP_KM) as usize + 1).clamp(2, MAX_SUBSTEPS);
        let step = len / m as f64;
        let dir = (b - a) * (1.0 / len);
        let c = self.coef;
        let mut far = self.source(b, pr, pm, ts);
        for s in (0..m).rev() {
            let near = self.source(a + dir * (s as f64 * step), pr, pm, ts);
            if near.inside {
                // points inside the planet inherit the radiance of the point
                // where their line leaves it
                far = near;
                continue;
            }
            if far.inside {
                // looking from `near` the line runs into the ground
                l.iter_mut().for_each(|v| *v = 0.0);
            }
            let col = [0.5 * step * (near.rho[0] + far.rho[0]), 0.5 * step * (near.rho[1] + far.rho[1])];
            for i in 0..nl {
                let t = exp(-(c.rayleigh[i] * col[0] + c.mie_extinction[i] * col[1]));
                l[i] = t * l[i] + 0.5 * step * (near.value[i] + t * far.value[i]);
            }
            far = near;
        }
    }
}

pub fn build_nishita96(params: &AtmosphereParams, sun: Vec3, config: Nishita96Config) -> Result<Nishita96Model> {
    if config.voxels < 3 {
        return Err(invalid!("nishita96 needs at least 3 voxels per axis"));
    }
    if !(config.extent_km > 0.0 && config.extent_km.is_finite()) {
        return Err(invalid!("nishita96 voxel box extent must be positive"));
    }
    let ls = sun.length();
    if !(ls > 0.0 && ls.is_finite()) {
        return Err(invalid!("sun direction must be finite and nonzero"));
    }
    let sun = sun * (1.0 / ls);
    if config.single.observer_altitude_km >= params.top_altitude_km {
        return Err(Error::Unsupported("nishita96 needs the observer inside the atmosphere".to_string()));
    }
    let single = build_nishita93(params, config.single)?;
    let coef = params.coefficients()?;
    let filler = Filler { params, coef: &coef, single: &single, sun, center: Vec3::new(0.0, 0.0, -params.r_ground()) };
    let mut tables = Vec::with_capacity(8);
    for w in sampling_directions(sun) {
        let mut t = DirectionTable::new(w, config.voxels, config.extent_km, coef.len())?;
        filler.fill(&mut t);
        tables.push(t);
    }
    Ok(Nishita96Model { params: params.clone(), coef, config, sun, single, tables })
}

impl Nishita96Model {
    pub fn config(&self) -> Nishita96Config {
        self.config
    }

    pub fn sun(&self) -> Vec3 {
        self.sun
    }

    fn check_sun(&self, sun: Vec3) -> Result<()> {
        if (sun.normalized() - self.sun).length() > 1e-9 {
            return Err(Error::InvalidUse("nishita96 tables were built for another sun direction".to_string()));
        }
        Ok(())
    }

    /// Single and double scattering, written to separate outputs.
    pub fn radiance_parts(&self, view: Vec3, sun: Vec3, single: &mut [f64], double: &mut [f64]) -> Result<()> {
        let alt = self.config.single.observer_altitude_km;
        let (mut view, sun) = check_directions_from(view, sun, alt > 0.0)?;
        self.check_sun(sun)?;
        if sun.x.abs() < 1e-12 && sun.y.abs() < 1e-12 {
            // any vertical plane contains a vertical sun: use the one through
            // the view direction
            view = Vec3::new(sqrt(view.x * view.x + view.y * view.y), 0.0, view.z);
        }
        check_out(&self.coef.grid, single)?;
        check_out(&self.coef.grid, double)?;
        self.single.radiance_into(view, sun, single)?;
        double.iter_mut().for_each(|v| *v = 0.0);
        let Some(ray) = ViewRay::new(&self.params, alt, view, sun) else {
            return Ok(());
        };
        let samples = ray.layer_samples(&self.params, self.single.layer_radii());
        let nl = self.coef.len();
        let g = self.params.mie_asymmetry_g;
        // Rayleigh and aerosol phase weights per sampling direction, each
        // normalized so that the 8-direction quadrature of the phase
        // function integrates to one
        let raw: Vec<(f64, f64)> = self
            .tables
            .iter()
            .map(|t| {
                let c = view.dot(t.w);
                (rayleigh_phase_value(c), cornette_shanks(g, c))
            })
            .collect();
        let (sr, sm) = raw.iter().fold((0.0, 0.0), |(a, b), &(r, m)| (a + r, b + m));
        let weights: Vec<(f64, f64)> = raw.iter().map(|&(r, m)| (r / sr, m / sm)).collect();
        let origin = Vec3::new(0.0, 0.0, alt);
        let mut li = alloc::vec![0.0; nl];
        integrate_view(
            &self.coef,
            &samples,
            |k, gr, gm| {
                gr.iter_mut().for_each(|v| *v = 0.0);
                gm.iter_mut().for_each(|v| *v = 0.0);
                let p = origin + view * samples[k].d;
                for (t, &(wr, wm)) in self.tables.iter().zip(&weights) {
                    t.grid.lookup(t.coords(p), &mut li);
                    for i in 0..nl {
                        gr[i] += wr * li[i];
                        gm[i] += wm * li[i];
                    }
                }
                for i in 0..nl {
                    gr[i] *= self.coef.rayleigh[i];
                    gm[i] *= self.coef.mie_scattering[i];
                }
            },
            double,
        );
        check_finite(double)
    }
}

impl SkySource for Nishita96Model {
    fn grid(&self) -> &WavelengthGrid {
        &self.coef.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        check_out(&self.coef.grid, out)?;
        let mut double = alloc::vec![0.0; out.len()];
        self.radiance_parts(view, sun, out, &mut double)?;
        for (o, d) in out.iter_mut().zip(&double) {
            *o = (*o + d).max(0.0);
        }
        check_finite(out)
    }
}

impl SkyModel for Nishita96Model {
    fn kind(&self) -> ModelKind {
        ModelKind::Nishita96
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::to_radians;

    fn small() -> Nishita96Config {
        Nishita96Config { voxels: 16, ..Default::default() }
    }

    #[test]
    fn sampling_directions_lie_in_the_sun_plane() {
        let sun = Vec3::from_angles(to_radians(40.0), 1.0);
        let dirs = sampling_directions(sun);
        let normal = Vec3::ZENITH.cross(sun).normalized();
        for d in dirs {
            assert!((d.length() - 1.0).abs() < 1e-12);
            assert!(d.dot(normal).abs() < 1e-12);
        }
        assert!(dirs[6].dot(sun).abs() < 1e-12);
        assert!(dirs[4].z.abs() < 1e-12);
    }

    #[test]
    fn table_coordinates_invert_node_positions() {
        for w in [Vec3::from_angles(0.7, 0.4), Vec3::from_angles(2.5, 3.0), Vec3::new(0.6, 0.8, 0.0)] {
            let t = DirectionTable::new(w, 8, 1700.0, 1).unwrap();
            for idx in [[0, 0, 0], [3, 5, 2], [7, 1, 6]] {
                let c = t.coords(t.node(idx[0], idx[1], idx[2]));
                for a in 0..3 {
                    assert!((c[a] - idx[a] as f64).abs() < 1e-9, "{w:?} {idx:?} {c:?}");
                }
            }
            // consecutive nodes of a line step along w
            let line = &t.lines()[10];
            let d = t.node(line[1][0], line[1][1], line[1][2]) - t.node(line[0][0], line[0][1], line[0][2]);
            assert!((d.normalized().dot(w) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_term_is_nishita93_and_double_adds_light() {
        let p = default_params();
        let sun = Vec3::from_angles(to_radians(40.0), 0.0);
        let m = build_nishita96(&p, sun, small()).unwrap();
        let n93 = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let nl = p.grid().len();
        for &(vz, va) in &[(0.0, 0.0), (45.0, 90.0), (80.0, 180.0)] {
            let view = Vec3::from_angles(to_radians(vz), to_radians(va));
            let (mut s, mut d) = (alloc::vec![0.0; nl], alloc::vec![0.0; nl]);
            m.radiance_parts(view, sun, &mut s, &mut d).unwrap();
            let single = n93.radiance(view, sun).unwrap();
            for i in 0..nl {
                assert!((s[i] / single.values()[i] - 1.0).abs() < 1e-12);
                // double scattering is a fraction of single scattering
                assert!(d[i] > 0.0 && d[i] < s[i], "({vz},{va}) {i}: {} vs {}", d[i], s[i]);
            }
        }
    }

    #[test]
    fn tables_reproduce_single_scattering_at_the_observer() {
        let p = default_params();
        let sun = Vec3::from_angles(to_radians(40.0), 0.0);
        let m = build_nishita96(&p, sun, Nishita96Config::default()).unwrap();
        let n93 = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let mut l = alloc::vec![0.0; p.grid().len()];
        for t in &m.tables {
            if t.w.z < 0.05 {
                continue;
            }
            t.grid.lookup(t.coords(Vec3::new(0.0, 0.0, 0.0)), &mut l);
            let o = n93.radiance(t.w, sun).unwrap();
            for i in 0..l.len() {
                assert!((l[i] / o.values()[i] - 1.0).abs() < 0.03, "{:?} {i}: {} vs {}", t.w, l[i], o.values()[i]);
            }
        }
    }

    #[test]
    fn other_sun_direction_is_invalid_use() {
        let p = default_params();
        let sun = Vec3::from_angles(to_radians(30.0), 0.0);
        let m = build_nishita96(&p, sun, Nishita96Config { voxels: 4, ..Default::default() }).unwrap();
        let err = m.radiance(Vec3::ZENITH, Vec3::from_angles(to_radians(31.0), 0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidUse(_)));
        assert!(m.radiance(Vec3::ZENITH, sun * 2.0).is_ok());
    }

    #[test]
    fn zenith_sun_is_azimuthally_symmetric() {
        let p = default_params();
        let m = build_nishita96(&p, Vec3::ZENITH, small()).unwrap();
        let a = m.radiance(Vec3::from_angles(to_radians(60.0), 0.3), Vec3::ZENITH).unwrap();
        let b = m.radiance(Vec3::from_angles(to_radians(60.0), 2.1), Vec3::ZENITH).unwrap();
        for i in 0..a.len() {
            let rel = (a.values()[i] - b.values()[i]).abs() / a.values()[i];
            assert!(rel < 1e-6, "{i}: {rel}");
        }
    }
}
