//! Analytic sky from a single turbidity parameter: Perez distributions of
//! luminance and chromaticity, turned into spectra with the CIE daylight
//! basis.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::color::{ColorMatchingTable, DaylightBasis, LUMINOUS_EFFICACY};
use crate::error::invalid;
use crate::math::{acos, cos, exp, tan, Vec3, PI};
use crate::spectrum::WavelengthGrid;
use crate::{Error, Result};

use super::common::{check_directions, check_finite, check_out};
use super::{ModelKind, SkyModel, SkySource};

pub const PREETHAM_TURBIDITY_RANGE: (f64, f64) = (1.9, 10.0);

/// Perez coefficients A..E for one quantity at one turbidity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perez(pub [f64; 5]);

impl Perez {
    /// `(1 + A e^{B / cos θ}) (1 + C e^{D γ} + E cos² γ)`.
    pub fn eval(&self, cos_theta: f64, gamma: f64) -> f64 {
        let [a, b, c, d, e] = self.0;
        let ct = cos_theta.max(1e-4);
        let cg = cos(gamma);
        (1.0 + a * exp(b / ct)) * (1.0 + c * exp(d * gamma) + e * cg * cg)
    }
}

fn linear(t: f64, rows: [[f64; 2]; 5]) -> Perez {
    Perez(rows.map(|[k, c]| k * t + c))
}

pub fn perez_luminance(t: f64) -> Perez {
    linear(t, [[0.1787, -1.4630], [-0.3554, 0.4275], [-0.0227, 5.3251], [0.1206, -2.5771], [-0.0670, 0.3703]])
}

pub fn perez_x(t: f64) -> Perez {
    linear(t, [[-0.0193, -0.2592], [-0.0665, 0.0008], [-0.0004, 0.2125], [-0.0641, -0.8989], [-0.0033, 0.0452]])
}

pub fn perez_y(t: f64) -> Perez {
    linear(t, [[-0.0167, -0.2608], [-0.0950, 0.0092], [-0.0079, 0.2102], [-0.0441, -1.6537], [-0.0109, 0.0529]])
}

/// Zenith luminance in kcd/m² for sun zenith angle `theta_s` (radians).
pub fn zenith_luminance(t: f64, theta_s: f64) -> f64 {
    let chi = (4.0 / 9.0 - t / 120.0) * (PI - 2.0 * theta_s);
    (4.0453 * t - 4.9710) * tan(chi) - 0.2155 * t + 2.4192
}

fn cubic(theta: f64, c: [f64; 4]) -> f64 {
    ((c[0] * theta + c[1]) * theta + c[2]) * theta + c[3]
}

/// Zenith chromaticity (x, y).
pub fn zenith_chromaticity(t: f64, theta_s: f64) -> (f64, f64) {
    let x = t * t * cubic(theta_s, [0.00166, -0.00375, 0.00209, 0.0])
        + t * cubic(theta_s, [-0.02903, 0.06377, -0.03202, 0.00394])
        + cubic(theta_s, [0.11693, -0.21196, 0.06052, 0.25886]);
    let y = t * t * cubic(theta_s, [0.00275, -0.00610, 0.00317, 0.0])
        + t * cubic(theta_s, [-0.04214, 0.08970, -0.04153, 0.00516])
        + cubic(theta_s, [0.15346, -0.26756, 0.06670, 0.26688]);
    (x, y)
}

#[derive(Debug, Clone)]
pub struct PreethamModel {
    turbidity: f64,
    grid: WavelengthGrid,
    perez: [Perez; 3],
    /// S0, S1, S2 on the output grid.
    basis: [Vec<f64>; 3],
    /// CIE Y of S0, S1, S2 on the colour matching grid.
    basis_y: [f64; 3],
}

/// Sky values at one view direction: luminance (cd/m²) and chromaticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreethamSample {
    pub luminance: f64,
    pub x: f64,
    pub y: f64,
}

pub fn build_preetham(
    turbidity: f64,
    daylight: &DaylightBasis,
    cmf: &ColorMatchingTable,
    grid: &WavelengthGrid,
) -> Result<PreethamModel> {
    let (lo, hi) = PREETHAM_TURBIDITY_RANGE;
    if !(lo..=hi).contains(&turbidity) {
        return Err(invalid!("preetham turbidity {turbidity} outside [{lo}, {hi}]"));
    }
    let basis = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)].map(|(a, b, c): (f64, f64, f64)| {
        grid.as_slice()
            .iter()
            .map(|&l| {
                let s0 = daylight.relative(0.0, 0.0, l);
                a * s0 + b * (daylight.relative(1.0, 0.0, l) - s0) + c * (daylight.relative(0.0, 1.0, l) - s0)
            })
            .collect::<Vec<f64>>()
    });
    let y0 = daylight.relative_y(0.0, 0.0, cmf);
    let basis_y = [y0, daylight.relative_y(1.0, 0.0, cmf) - y0, daylight.relative_y(0.0, 1.0, cmf) - y0];
    Ok(PreethamModel {
        turbidity,
        grid: grid.clone(),
        perez: [perez_luminance(turbidity), perez_x(turbidity), perez_y(turbidity)],
        basis,
        basis_y,
    })
}

impl PreethamModel {
    pub fn turbidity(&self) -> f64 {
        self.turbidity
    }

    /// Luminance and chromaticity along `view`.
    pub fn sample(&self, view: Vec3, sun: Vec3) -> Result<PreethamSample> {
        let (view, sun) = check_directions(view, sun)?;
        if sun.z < 0.0 {
            return Err(Error::Unsupported("preetham needs the sun above the horizon".to_string()));
        }
        let theta_s = acos(sun.z);
        let gamma = acos(view.dot(sun));
        let t = self.turbidity;
        let (xz, yz) = zenith_chromaticity(t, theta_s);
        let zenith = [zenith_luminance(t, theta_s) * 1000.0, xz, yz];
        let mut v = [0.0; 3];
        for k in 0..3 {
            let p = &self.perez[k];
            v[k] = zenith[k] * p.eval(view.z, gamma) / p.eval(1.0, theta_s);
        }
        Ok(PreethamSample { luminance: v[0].max(0.0), x: v[1], y: v[2] })
    }
}

impl SkySource for PreethamModel {
    fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()> {
        check_out(&self.grid, out)?;
        let s = self.sample(view, sun)?;
        let (m1, m2) = DaylightBasis::mix_coefficients(s.x, s.y);
        let rel_y = self.basis_y[0] + m1 * self.basis_y[1] + m2 * self.basis_y[2];
        let scale = if rel_y > 0.0 { s.luminance / LUMINOUS_EFFICACY / rel_y } else { 0.0 };
        for i in 0..out.len() {
            out[i] = (scale * (self.basis[0][i] + m1 * self.basis[1][i] + m2 * self.basis[2][i])).max(0.0);
        }
        check_finite(out)
    }
}

impl SkyModel for PreethamModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Preetham
    }
}
