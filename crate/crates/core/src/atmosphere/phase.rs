use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{acos, sin, sqrt, PI};
use crate::spectrum::{interp_linear, Extrapolation};
use crate::Result;

/// Normalized scattering phase functions (sr^-1).
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseFunction {
    Rayleigh,
    CornetteShanks { g: f64 },
    Isotropic,
    /// Linear interpolation in scattering angle (radians, increasing).
    Tabulated { angles: Vec<f64>, values: Vec<f64> },
}

#[inline]
pub fn rayleigh(mu: f64) -> f64 {
    3.0 / (16.0 * PI) * (1.0 + mu * mu)
}

#[inline]
pub fn cornette_shanks(g: f64, mu: f64) -> f64 {
    let g2 = g * g;
    let denom = 1.0 + g2 - 2.0 * g * mu;
    3.0 / (8.0 * PI) * (1.0 - g2) * (1.0 + mu * mu) / ((2.0 + g2) * denom * sqrt(denom))
}

impl PhaseFunction {
    /// Checked constructor for tabulated phase functions.
    pub fn tabulated(angles: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if angles.len() < 2 || angles.len() != values.len() {
            return Err(invalid!("tabulated phase function needs matching angle/value lists"));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) || angles[0] < 0.0 || angles[angles.len() - 1] > PI + 1e-12 {
            return Err(invalid!("phase function angles must increase within [0, pi]"));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(invalid!("phase function values must be nonnegative"));
        }
        let pf = PhaseFunction::Tabulated { angles, values };
        let integral = pf.sphere_integral(20_000);
        if (integral - 1.0).abs() > 1e-3 {
            return Err(invalid!("tabulated phase function integrates to {integral}, not 1"));
        }
        Ok(pf)
    }

    pub fn eval(&self, cos_theta: f64) -> f64 {
        let mu = cos_theta.clamp(-1.0, 1.0);
        match self {
            PhaseFunction::Rayleigh => rayleigh(mu),
            PhaseFunction::CornetteShanks { g } => cornette_shanks(*g, mu),
            PhaseFunction::Isotropic => 1.0 / (4.0 * PI),
            PhaseFunction::Tabulated { angles, values } => interp_linear(angles, values, acos(mu), Extrapolation::Clamp),
        }
    }

    /// Integral over the unit sphere by the midpoint rule in scattering angle.
    pub fn sphere_integral(&self, n: usize) -> f64 {
        let d = PI / n as f64;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * d;
                self.eval(crate::math::cos(t)) * sin(t)
            })
            .sum::<f64>()
            * 2.0
            * PI
            * d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_value() {
        assert!((PhaseFunction::Isotropic.eval(0.3) - 0.079_577_47).abs() < 1e-8);
    }

    #[test]
    fn cornette_shanks_degenerates_to_rayleigh() {
        for i in 0..=100 {
            let mu = -1.0 + 0.02 * i as f64;
            assert!((cornette_shanks(0.0, mu) - rayleigh(mu)).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_checks_normalization() {
        let angles: Vec<f64> = (0..=180).map(|i| i as f64 * PI / 180.0).collect();
        let iso = alloc::vec![1.0 / (4.0 * PI); angles.len()];
        assert!(PhaseFunction::tabulated(angles.clone(), iso).is_ok());
        let twice = alloc::vec![2.0 / (4.0 * PI); angles.len()];
        assert!(PhaseFunction::tabulated(angles.clone(), twice).is_err());
        let pf = PhaseFunction::tabulated(angles, alloc::vec![1.0 / (4.0 * PI); 181]).unwrap();
        // clamps outside the table
        assert!((pf.eval(2.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }
}
