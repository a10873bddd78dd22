//! Precomputed single and multiple scattering in 4D tables indexed by
//! altitude, view zenith, sun zenith and view-sun angle. Rendering is a
//! table lookup.

use alloc::vec::Vec;

use crate::atmosphere::geometry::{distance_to_ground, distance_to_top, hits_ground};
use crate::atmosphere::{cornette_shanks, rayleigh_phase_value, AtmosphereParams, Coefficients, ColumnTable, TransmittanceTable};
use crate::error::invalid;
use crate::grid::{Grid2D, Grid4D};
use crate::math::{cos, sin, sqrt, Vec3, PI};
use crate::spectrum::WavelengthGrid;
use crate::Result;

use super::common::{check_directions_from, check_finite, check_out, integrate_view, integrate_view_parts, ViewRay, ViewSample};
use super::{ModelKind, SkyModel, SkySource};

/// Lowest sun zenith cosine stored in the tables.
pub const MU_S_MIN: f64 = -0.2;
const IRRADIANCE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrunetonConfig {
    pub n_r: usize,
    /// Even: the first half holds rays hitting the ground.
    pub n_mu: usize,
    pub n_mu_s: usize,
    pub n_nu: usize,
    /// Incident direction quadrature for the scattering density.
    pub n_theta_i: usize,
    pub n_phi_i: usize,
    /// Scattering orders, single scattering included.
    pub orders: usize,
    /// Samples per ray in the scattering integrals.
    pub samples: usize,
    pub observer_altitude_km: f64,
}

impl Default for BrunetonConfig {
    fn default() -> Self {
        BrunetonConfig {
            n_r: 32,
            n_mu: 128,
            n_mu_s: 32,
            n_nu: 8,
            n_theta_i: 16,
            n_phi_i: 32,
            orders: 4,
            samples: 50,
            observer_altitude_km: 0.0,
        }
    }
}

impl BrunetonConfig {
    /// Half the default resolution on the first three axes.
    pub fn reduced() -> Self {
        BrunetonConfig { n_r: 16, n_mu: 64, n_mu_s: 16, ..Default::default() }
    }

    pub fn with_orders(self, orders: usize) -> Self {
        BrunetonConfig { orders, ..self }
    }

    pub fn counts(&self) -> [usize; 4] {
        [self.n_r, self.n_mu, self.n_mu_s, self.n_nu]
    }

    fn validate(&self) -> Result<()> {
        if self.n_r < 2 || self.n_mu_s < 2 || self.n_nu < 2 || self.n_mu < 4 || self.n_mu % 2 != 0 {
            return Err(invalid!("bruneton table sizes must be at least 2 (n_mu even, at least 4)"));
        }
        if self.n_theta_i < 2 || self.n_phi_i < 2 || self.n_phi_i % 2 != 0 {
            return Err(invalid!("bruneton direction quadrature needs n_theta_i >= 2 and even n_phi_i >= 2"));
        }
        if self.orders < 1 || self.samples < 2 {
            return Err(invalid!("bruneton needs at least 1 order and 2 samples per ray"));
        }
        if !(self.observer_altitude_km >= 0.0 && self.observer_altitude_km.is_finite()) {
            return Err(invalid!("observer altitude must be a nonnegative number"));
        }
        Ok(())
    }
}

/// Maps between table nodes and (r, mu, mu_s, nu).
#[derive(Debug, Clone, Copy)]
struct Mapping {
    rg: f64,
    rt: f64,
    big_h: f64,
    n: [usize; 4],
}

impl Mapping {
    fn new(params: &AtmosphereParams, n: [usize; 4]) -> Self {
        let (rg, rt) = (params.r_ground(), params.r_top());
        Mapping { rg, rt, big_h: sqrt(rt * rt - rg * rg), n }
    }

    fn half(&self) -> usize {
        self.n[1] / 2
    }

    fn radius(&self, i: usize) -> f64 {
        let rho = self.big_h * i as f64 / (self.n[0] - 1) as f64;
        sqrt(rho * rho + self.rg * self.rg)
    }

    /// View zenith cosine of node `j` at radius `r`, the distance to the
    /// ray's end and whether it ends on the ground.
    fn mu(&self, r: f64, j: usize) -> (f64, f64, bool) {
        let h = self.half();
        let rho = sqrt((r * r - self.rg * self.rg).max(0.0));
        if j < h {
            let x = 1.0 - j as f64 / (h - 1) as f64;
            let d_min = r - self.rg;
            let d = d_min + x * (rho - d_min);
            let mu = if d <= 0.0 { -1.0 } else { (-(rho * rho + d * d) / (2.0 * r * d)).clamp(-1.0, 1.0) };
            (mu, d, true)
        } else {
            let x = (j - h) as f64 / (h - 1) as f64;
            let d_min = self.rt - r;
            let d = d_min + x * (rho + self.big_h - d_min);
            let mu = if d <= 0.0 {
                1.0
            } else {
                ((self.big_h * self.big_h - rho * rho - d * d) / (2.0 * r * d)).clamp(-1.0, 1.0)
            };
            (mu, d, false)
        }
    }

    fn mu_s_range(&self) -> (f64, f64, f64) {
        let d_min = self.rt - self.rg;
        let d_max = self.big_h;
        (d_min, d_max, -2.0 * MU_S_MIN * self.rg / (d_max - d_min))
    }

    fn mu_s(&self, k: usize) -> f64 {
        let u = k as f64 / (self.n[2] - 1) as f64;
        let (d_min, d_max, big_a) = self.mu_s_range();
        let a = (big_a - u * big_a) / (1.0 + u * big_a);
        let d = d_min + a.min(big_a) * (d_max - d_min);
        if d <= 0.0 {
            1.0
        } else {
            ((self.big_h * self.big_h - d * d) / (2.0 * self.rg * d)).clamp(-1.0, 1.0)
        }
    }

    fn nu(&self, l: usize) -> f64 {
        -1.0 + 2.0 * l as f64 / (self.n[3] - 1) as f64
    }

    /// Fractional node coordinates of a query.
    fn coords(&self, r: f64, mu: f64, mu_s: f64, nu: f64) -> [f64; 4] {
        let r = r.clamp(self.rg, self.rt);
        let rho = sqrt((r * r - self.rg * self.rg).max(0.0));
        let fi = rho / self.big_h * (self.n[0] - 1) as f64;
        let h = self.half();
        let fj = if hits_ground(r, mu, self.rg) {
            let d = distance_to_ground(r, mu, self.rg).unwrap_or(0.0);
            let d_min = r - self.rg;
            let x = if rho > d_min { ((d - d_min) / (rho - d_min)).clamp(0.0, 1.0) } else { 0.0 };
            (1.0 - x) * (h - 1) as f64
        } else {
            let d = distance_to_top(r, mu, self.rt);
            let d_min = self.rt - r;
            let d_max = rho + self.big_h;
            let x = if d_max > d_min { ((d - d_min) / (d_max - d_min)).clamp(0.0, 1.0) } else { 0.0 };
            h as f64 + x * (h - 1) as f64
        };
        let (d_min, d_max, big_a) = self.mu_s_range();
        let d = distance_to_top(self.rg, mu_s, self.rt);
        let a = (d - d_min) / (d_max - d_min);
        let u = (1.0 - a / big_a).max(0.0) / (1.0 + a);
        let fk = u * (self.n[2] - 1) as f64;
        let fl = 0.5 * (nu + 1.0) * (self.n[3] - 1) as f64;
        [fi, fj, fk, fl]
    }
}

/// Raw tables of a build, for storage.
#[derive(Debug, Clone, PartialEq)]
pub struct BrunetonTables {
    pub columns: Grid2D,
    /// Single Rayleigh scattering without the phase function.
    pub single_rayleigh: Grid4D,
    /// Single aerosol scattering without the phase function.
    pub single_mie: Grid4D,
    /// Sum of orders two and up.
    pub multiple: Grid4D,
}

#[derive(Debug, Clone)]
pub struct BrunetonModel {
    params: AtmosphereParams,
    coef: Coefficients,
    config: BrunetonConfig,
    kind: ModelKind,
    map: Mapping,
    columns: ColumnTable,
    single_rayleigh: Grid4D,
    single_mie: Grid4D,
    multiple: Grid4D,
}

pub fn build_bruneton(params: &AtmosphereParams, config: BrunetonConfig) -> Result<BrunetonModel> {
    Builder::new(params, config)?.run(ModelKind::Bruneton)
}

/// Identical computation, tagged as the Elek model.
pub fn build_elek(params: &AtmosphereParams, config: BrunetonConfig) -> Result<BrunetonModel> {
    Builder::new(params, config)?.run(ModelKind::Elek)
}

/// Incident radiance source for the scattering density of the next order.
enum Previous<'a> {
    Single { rayleigh: &'a Grid4D, mie: &'a Grid4D },
    Multiple(&'a Grid4D),
}

/// Ground irradiance of the previous order, per sun zenith cosine.
enum GroundIrradiance {
    Direct,
    Table(Vec<f64>),
}

struct Builder<'a> {
    params: &'a AtmosphereParams,
    coef: Coefficients,
    config: BrunetonConfig,
    map: Mapping,
    columns: ColumnTable,
    sun: TransmittanceTable,
}

impl<'a> Builder<'a> {
    fn new(params: &'a AtmosphereParams, config: BrunetonConfig) -> Result<Self> {
        config.validate()?;
        let coef = params.coefficients()?;
        let map = Mapping::new(params, config.counts());
        let columns = ColumnTable::with_default_size(params);
        let sun = columns.transmittance_table(&coef);
        Ok(Builder { params, coef, config, map, columns, sun })
    }

    fn nl(&self) -> usize {
        self.coef.len()
    }

    fn run(self, kind: ModelKind) -> Result<BrunetonModel> {
        let n = self.config.counts();
        let nl = self.nl();
        let mut single_rayleigh = Grid4D::new(n, nl)?;
        let mut single_mie = Grid4D::new(n, nl)?;
        self.single_scattering(&mut single_rayleigh, &mut single_mie);
        let mut multiple = Grid4D::new(n, nl)?;
        let mut delta: Option<Grid4D> = None;
        for _ in 2..=self.config.orders {
            let (prev, irradiance) = match &delta {
                None => (Previous::Single { rayleigh: &single_rayleigh, mie: &single_mie }, GroundIrradiance::Direct),
                Some(d) => (Previous::Multiple(d), GroundIrradiance::Table(self.ground_irradiance(d))),
            };
            let density = self.scattering_density(&prev, &irradiance)?;
            let next = self.multiple_scattering(&density)?;
            for (m, d) in multiple.data_mut().iter_mut().zip(next.data()) {
                *m += d;
            }
            delta = Some(next);
        }
        Ok(BrunetonModel {
            params: self.params.clone(),
            coef: self.coef,
            config: self.config,
            kind,
            map: self.map,
            columns: self.columns,
            single_rayleigh,
            single_mie,
            multiple,
        })
    }

    /// View ray of a table node.
    fn node_ray(&self, i: usize, j: usize, k: usize, l: usize) -> ViewRay {
        let r = self.map.radius(i);
        let (mu, d, ground) = self.map.mu(r, j);
        let mu_s = self.map.mu_s(k);
        let nu = clamp_nu(mu, mu_s, self.map.nu(l));
        ViewRay { r0: r, mu, nu, mu_s0: mu_s, start: 0.0, end: if ground { d } else { distance_to_top(r, mu, self.map.rt) } }
    }

    fn ray_samples(&self, ray: &ViewRay) -> Vec<ViewSample> {
        ray.uniform_samples(self.params, self.config.samples)
    }

    fn for_each_node(&self, mut f: impl FnMut([usize; 4], usize)) {
        let n = self.config.counts();
        let mut flat = 0;
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    for l in 0..n[3] {
                        f([i, j, k, l], flat);
                        flat += 1;
                    }
                }
            }
        }
    }

    fn single_scattering(&self, rayleigh: &mut Grid4D, mie: &mut Grid4D) {
        let nl = self.nl();
        let c = &self.coef;
        let mut ts = alloc::vec![0.0; nl];
        let mut out_r = alloc::vec![0.0; nl];
        let mut out_m = alloc::vec![0.0; nl];
        self.for_each_node(|[i, j, k, l], flat| {
            let ray = self.node_ray(i, j, k, l);
            let samples = self.ray_samples(&ray);
            out_r.iter_mut().for_each(|v| *v = 0.0);
            out_m.iter_mut().for_each(|v| *v = 0.0);
            integrate_view_parts(
                c,
                &samples,
                |s, gr, gm| {
                    self.sun.to_sun_into(samples[s].r, samples[s].mu_s, &mut ts);
                    for w in 0..nl {
                        let e = c.solar[w] * ts[w];
                        gr[w] = e * c.rayleigh[w];
                        gm[w] = e * c.mie_scattering[w];
                    }
                },
                &mut out_r,
                &mut out_m,
            );
            rayleigh.data_mut()[flat * nl..][..nl].copy_from_slice(&out_r);
            mie.data_mut()[flat * nl..][..nl].copy_from_slice(&out_m);
        });
    }

    /// Radiance of the previous order arriving along `-dir`, ground
    /// reflection included.
    fn incident(&self, prev: &Previous, irradiance: &GroundIrradiance, r: f64, mu: f64, mu_s: f64, nu: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let x = self.map.coords(r, mu, mu_s, nu);
        match prev {
            Previous::Single { rayleigh, mie } => {
                rayleigh.lookup_add(x, rayleigh_phase_value(nu), out);
                mie.lookup_add(x, cornette_shanks(self.params.mie_asymmetry_g, nu), out);
            }
            Previous::Multiple(d) => d.lookup_add(x, 1.0, out),
        }
        if let Some(d) = distance_to_ground(r, mu, self.map.rg) {
            let mu_s_g = ((r * mu_s + d * nu) / self.map.rg).clamp(-1.0, 1.0);
            let col = self.columns.between(r, mu, d, true);
            let nl = out.len();
            let mut t = alloc::vec![0.0; nl];
            self.coef.transmittance_into(col, &mut t);
            let mut e = alloc::vec![0.0; nl];
            self.irradiance_at(irradiance, mu_s_g, &mut e);
            for w in 0..nl {
                out[w] += t[w] * self.coef.albedo[w] / PI * e[w];
            }
        }
    }

    fn irradiance_at(&self, irradiance: &GroundIrradiance, mu_s: f64, out: &mut [f64]) {
        let nl = out.len();
        match irradiance {
            GroundIrradiance::Direct => {
                if self.sun.to_sun_into(self.map.rg, mu_s, out) && mu_s > 0.0 {
                    for w in 0..nl {
                        out[w] *= self.coef.solar[w] * mu_s;
                    }
                } else {
                    out.iter_mut().for_each(|v| *v = 0.0);
                }
            }
            GroundIrradiance::Table(t) => {
                let f = ((mu_s - MU_S_MIN) / (1.0 - MU_S_MIN) * (IRRADIANCE_NODES - 1) as f64).clamp(0.0, (IRRADIANCE_NODES - 1) as f64);
                if mu_s < MU_S_MIN {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                let i = (f as usize).min(IRRADIANCE_NODES - 2);
                let u = f - i as f64;
                for w in 0..nl {
                    out[w] = (1.0 - u) * t[i * nl + w] + u * t[(i + 1) * nl + w];
                }
            }
        }
    }

    /// Irradiance at the ground from one table of sky radiance.
    fn ground_irradiance(&self, delta: &Grid4D) -> Vec<f64> {
        let nl = self.nl();
        let nt = self.config.n_theta_i;
        let np = self.config.n_phi_i;
        let rg = self.map.rg;
        let mut out = alloc::vec![0.0; IRRADIANCE_NODES * nl];
        let mut l = alloc::vec![0.0; nl];
        for k in 0..IRRADIANCE_NODES {
            let mu_s = MU_S_MIN + (1.0 - MU_S_MIN) * k as f64 / (IRRADIANCE_NODES - 1) as f64;
            let sin_s = sqrt((1.0 - mu_s * mu_s).max(0.0));
            let dt = 0.5 * PI / nt as f64;
            let dp = 2.0 * PI / np as f64;
            for a in 0..nt {
                let th = (a as f64 + 0.5) * dt;
                for b in 0..np / 2 {
                    let ph = (b as f64 + 0.5) * dp;
                    let w = Vec3::new(sin(th) * cos(ph), sin(th) * sin(ph), cos(th));
                    let nu = w.x * sin_s + w.z * mu_s;
                    l.iter_mut().for_each(|v| *v = 0.0);
                    delta.lookup_add(self.map.coords(rg, w.z, mu_s, nu), 1.0, &mut l);
                    let weight = 2.0 * w.z * sin(th) * dt * dp;
                    for c in 0..nl {
                        out[k * nl + c] += weight * l[c];
                    }
                }
            }
        }
        out
    }

    /// Scattering density per unit relative density: Rayleigh part in the
    /// first `nl` channels, aerosol part in the next `nl`.
    fn scattering_density(&self, prev: &Previous, irradiance: &GroundIrradiance) -> Result<Grid4D> {
        let n = self.config.counts();
        let nl = self.nl();
        let mut out = Grid4D::new(n, 2 * nl)?;
        let nt = self.config.n_theta_i;
        let np = self.config.n_phi_i / 2;
        let dt = PI / nt as f64;
        let dp = 2.0 * PI / self.config.n_phi_i as f64;
        let g = self.params.mie_asymmetry_g;
        let nd = nt * np;
        // half-sphere directions (phi in [0, pi]); each stands for itself and
        // its mirror image through the sun plane
        let dirs: Vec<(Vec3, f64)> = (0..nd)
            .map(|q| {
                let (a, b) = (q / np, q % np);
                let th = (a as f64 + 0.5) * dt;
                let ph = (b as f64 + 0.5) * dp;
                (Vec3::new(sin(th) * cos(ph), sin(th) * sin(ph), cos(th)), sin(th) * dt * dp)
            })
            .collect();
        let mut li = alloc::vec![0.0; nd * nl];
        let mut row = alloc::vec![0.0; nd];
        for i in 0..n[0] {
            let r = self.map.radius(i);
            for k in 0..n[2] {
                let mu_s = self.map.mu_s(k);
                let sin_s = sqrt((1.0 - mu_s * mu_s).max(0.0));
                for (q, (w, _)) in dirs.iter().enumerate() {
                    let nu = w.x * sin_s + w.z * mu_s;
                    self.incident(prev, irradiance, r, w.z, mu_s, nu, &mut li[q * nl..(q + 1) * nl]);
                }
                // Rayleigh moments: M0 = ∫ L, M2 = ∫ L w wᵀ over the sphere
                let mut m0 = alloc::vec![0.0; nl];
                let mut m2 = alloc::vec![[0.0; 4]; nl];
                for (q, (w, dw)) in dirs.iter().enumerate() {
                    let quad = [w.x * w.x, w.y * w.y, w.z * w.z, w.x * w.z];
                    for c in 0..nl {
                        let v = 2.0 * li[q * nl + c] * dw;
                        m0[c] += v;
                        for e in 0..4 {
                            m2[c][e] += v * quad[e];
                        }
                    }
                }
                for j in 0..n[1] {
                    let (mu, _, _) = self.map.mu(r, j);
                    for l in 0..n[3] {
                        let nu = clamp_nu(mu, mu_s, self.map.nu(l));
                        let vx = if sin_s > 1e-9 { (nu - mu * mu_s) / sin_s } else { sqrt((1.0 - mu * mu).max(0.0)) };
                        let vy = sqrt((1.0 - mu * mu - vx * vx).max(0.0));
                        let v = Vec3::new(vx, vy, mu);
                        let mut sum = 0.0;
                        for (q, (w, dw)) in dirs.iter().enumerate() {
                            let mirror = Vec3::new(w.x, -w.y, w.z);
                            let p = (cornette_shanks(g, v.dot(*w)) + cornette_shanks(g, v.dot(mirror))) * dw;
                            row[q] = p;
                            sum += p;
                        }
                        let norm = if sum > 0.0 { 1.0 / sum } else { 0.0 };
                        let cell = out.cell_mut([i, j, k, l]);
                        for c in 0..nl {
                            let m = &m2[c];
                            let quad = m[0] * v.x * v.x + m[1] * v.y * v.y + m[2] * v.z * v.z + 2.0 * m[3] * v.x * v.z;
                            cell[c] = self.coef.rayleigh[c] * 3.0 / (16.0 * PI) * (m0[c] + quad);
                        }
                        for q in 0..nd {
                            let wq = row[q] * norm;
                            let lq = &li[q * nl..(q + 1) * nl];
                            for c in 0..nl {
                                cell[nl + c] += wq * lq[c];
                            }
                        }
                        for c in 0..nl {
                            cell[nl + c] *= self.coef.mie_scattering[c];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Radiance of the next order: the scattering density integrated along
    /// every node's ray.
    fn multiple_scattering(&self, density: &Grid4D) -> Result<Grid4D> {
        let n = self.config.counts();
        let nl = self.nl();
        let mut out = Grid4D::new(n, nl)?;
        let mut j = alloc::vec![0.0; 2 * nl];
        let mut acc = alloc::vec![0.0; nl];
        self.for_each_node(|[i, jj, k, l], flat| {
            let ray = self.node_ray(i, jj, k, l);
            let samples = self.ray_samples(&ray);
            acc.iter_mut().for_each(|v| *v = 0.0);
            integrate_view(
                &self.coef,
                &samples,
                |s, gr, gm| {
                    let p = &samples[s];
                    let mu = ((ray.r0 * ray.mu + p.d) / p.r).clamp(-1.0, 1.0);
                    j.iter_mut().for_each(|v| *v = 0.0);
                    density.lookup_add(self.map.coords(p.r, mu, p.mu_s, ray.nu), 1.0, &mut j);
                    gr.copy_from_slice(&j[..nl]);
                    gm.copy_from_slice(&j[nl..]);
                },
                &mut acc,
            );
            out.data_mut()[flat * nl..][..nl].copy_from_slice(&acc);
        });
        Ok(out)
    }
}

/// Clamps `nu` to the values reachable for the given zenith cosines.
fn clamp_nu(mu: f64, mu_s: f64, nu: f64) -> f64 {
    let s = sqrt(((1.0 - mu * mu) * (1.0 - mu_s * mu_s)).max(0.0));
    nu.clamp(mu * mu_s - s, mu * mu_s + s)
}

impl BrunetonModel {
    pub fn config(&self) -> BrunetonConfig {
        self.config
    }

    pub fn tables(&self) -> BrunetonTables {
        BrunetonTables {
            columns: self.columns.raw().clone(),
            single_rayleigh: self.single_rayleigh.clone(),
            single_mie: self.single_mie.clone(),
            multiple: self.multiple.clone(),
        }
    }

    /// Rebuilds a model from stored tables.
    pub fn from_tables(params: &AtmosphereParams, config: BrunetonConfig, kind: ModelKind, tables: BrunetonTables) -> Result<Self> {
        config.validate()?;
        if !matches!(kind, ModelKind::Bruneton | ModelKind::Elek) {
            return Err(invalid!("stored 4D tables belong to bruneton or elek, not {kind}"));
        }
        let coef = params.coefficients()?;
        let n = config.counts();
        for t in [&tables.single_rayleigh, &tables.single_mie, &tables.multiple] {
            if t.counts() != n || t.channels() != coef.len() {
                return Err(invalid!("stored table shape does not match the configuration"));
            }
        }
        if tables.columns.channels() != 2 {
            return Err(invalid!("stored transmittance table needs 2 channels"));
        }
        let columns = ColumnTable::from_raw(params, tables.columns.counts(), tables.columns.into_data())?;
        Ok(BrunetonModel {
            params: params.clone(),
            coef,
            config,
            kind,
            map: Mapping::new(params, n),
            columns,
            single_rayleigh: tables.single_rayleigh,
            single_mie: tables.single_mie,
            multiple: tables.multiple,
        })
    }

    /// Radiance split into single Rayleigh, single aerosol and multiple
    /// scattering, each added to its output.
    pub fn radiance_parts(&self, view: Vec3, sun: Vec3, parts: [&mut [f64]; 3]) -> Result<()> {
        let elevated = self.config.observer_altitude_km > 0.0;
        let (view, sun) = check_directions_from(view, sun, elevated)?;
        let [sr, sm, ms] = parts;
        let mut r = self.map.rg + self.config.observer_altitude_km;
        let mut mu = view.z;
        let nu = view.dot(sun);
        let mut mu_s = sun.z;
        if r > self.map.rt {
            let disc = r * r * (mu * mu - 1.0) + self.map.rt * self.map.rt;
            if mu >= 0.0 || disc <= 0.0 {
                return Ok(());
            }
            let d = -r * mu - sqrt(disc);
            let rt = self.map.rt;
            mu = ((r * mu + d) / rt).clamp(-1.0, 1.0);
            mu_s = ((r * mu_s + d * nu) / rt).clamp(-1.0, 1.0);
            r = rt;
        }
        let x = self.map.coords(r, mu, mu_s, nu);
        self.single_rayleigh.lookup_add(x, rayleigh_phase_value(nu), sr);
        self.single_mie.lookup_add(x, cornette_shanks(self.params.mie_asymmetry_g, nu), sm);
        self.multiple.lookup_add(x, 1.0, ms);
        Ok(())
    }
}

impl SkySource for BrunetonModel {
    fn grid(&self) -> &WavelengthGrid {
        &self.coef.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        check_out(&self.coef.grid, out)?;
        let n = out.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut sm = alloc::vec![0.0; n];
        let mut ms = alloc::vec![0.0; n];
        self.radiance_parts(view, sun, [out, &mut sm, &mut ms])?;
        for i in 0..n {
            out[i] = (out[i] + sm[i] + ms[i]).max(0.0);
        }
        check_finite(out)
    }
}

impl SkyModel for BrunetonModel {
    fn kind(&self) -> ModelKind {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::test_support::default_params;
    use crate::math::to_radians;
    use crate::models::{build_nishita93, Nishita93Config};

    fn small(orders: usize) -> BrunetonConfig {
        BrunetonConfig { n_r: 12, n_mu: 48, n_mu_s: 12, n_nu: 8, orders, ..Default::default() }
    }

    #[test]
    fn node_mapping_round_trips() {
        let p = default_params();
        let m = Mapping::new(&p, [8, 16, 8, 4]);
        for i in 1..8 {
            let r = m.radius(i);
            for j in 0..16 {
                let (mu, _, ground) = m.mu(r, j);
                if j == 0 || j == 15 {
                    continue; // tangent rays sit on the ground/sky seam
                }
                assert_eq!(ground, hits_ground(r, mu, m.rg));
                for k in 0..8 {
                    let mu_s = m.mu_s(k);
                    let x = m.coords(r, mu, mu_s, m.nu(2));
                    assert!((x[0] - i as f64).abs() < 1e-6);
                    assert!((x[1] - j as f64).abs() < 1e-6, "j {j}: {}", x[1]);
                    assert!((x[2] - k as f64).abs() < 1e-6, "k {k}: {}", x[2]);
                    assert!((x[3] - 2.0).abs() < 1e-9);
                }
            }
        }
        // the distance mapping reaches the minimum sun cosine only approximately
        assert!((m.mu_s(0) - MU_S_MIN).abs() < 0.02, "{}", m.mu_s(0));
        assert!((m.mu_s(7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_order_matches_nishita93() {
        let p = default_params();
        let b = build_bruneton(&p, BrunetonConfig { samples: 100, ..BrunetonConfig::reduced() }.with_orders(1)).unwrap();
        let n = build_nishita93(&p, Nishita93Config::default()).unwrap();
        let sun = Vec3::from_angles(to_radians(40.0), 0.0);
        for &(vz, va) in &[(0.0, 0.0), (30.0, 90.0), (54.0, 180.0), (72.0, 45.0), (36.0, 300.0)] {
            let view = Vec3::from_angles(to_radians(vz), to_radians(va));
            let lb = b.radiance(view, sun).unwrap();
            let ln = n.radiance(view, sun).unwrap();
            let e = lb.band_sum(360.0, 720.0) / ln.band_sum(360.0, 720.0) - 1.0;
            assert!(e.abs() < 0.03, "({vz},{va}): {e}");
        }
    }

    #[test]
    fn multiple_orders_add_light_and_elek_is_identical() {
        let p = default_params();
        let one = build_bruneton(&p, small(1)).unwrap();
        let four = build_bruneton(&p, small(4)).unwrap();
        let elek = build_elek(&p, small(4)).unwrap();
        let sun = Vec3::from_angles(to_radians(50.0), 0.0);
        for &(vz, va) in &[(0.0, 0.0), (60.0, 180.0), (80.0, 90.0)] {
            let view = Vec3::from_angles(to_radians(vz), to_radians(va));
            let a = one.radiance(view, sun).unwrap();
            let b = four.radiance(view, sun).unwrap();
            let c = elek.radiance(view, sun).unwrap();
            assert_eq!(b.values(), c.values());
            for i in 0..a.values().len() {
                assert!(b.values()[i] > a.values()[i]);
            }
        }
        assert_eq!(elek.kind(), ModelKind::Elek);
        let restored = BrunetonModel::from_tables(&p, small(4), ModelKind::Bruneton, four.tables()).unwrap();
        let v = Vec3::from_angles(1.0, 2.0);
        assert_eq!(restored.radiance(v, sun).unwrap().values(), four.radiance(v, sun).unwrap().values());
    }
}
