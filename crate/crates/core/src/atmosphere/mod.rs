//! Physical description of a clear spherical-shell atmosphere.
//!
//! Lengths are kilometres everywhere inside the models; scattering
//! coefficients are specified per metre (the usual tabulation unit) and
//! converted once by [`AtmosphereParams::coefficients`].

mod columns;
mod path;
mod phase;

pub use columns::{ColumnTable, TransmittanceTable};
pub use path::{
    analytic_transmittance, chapman_column, optical_depth, transmittance, Component, RayPath,
};
pub use phase::PhaseFunction;

pub(crate) use path::{chapman_segment, geometry, log_mean};
pub(crate) use phase::{cornette_shanks, rayleigh as rayleigh_phase_value};

use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{exp, powf, PI};
use crate::spectrum::{Quantity, Spectrum, WavelengthGrid};
use crate::Result;

/// Default inner quadrature sample count.
pub const DEFAULT_SAMPLES: usize = 64;

/// Sea-level Rayleigh scattering coefficient of dry air (m^-1) at
/// wavelength `lambda_nm`, from the refractive index dispersion of air at
/// 15 °C and a depolarization factor of 0.035.
pub fn rayleigh_beta(lambda_nm: f64) -> f64 {
    let lam_um = lambda_nm * 1e-3;
    let sigma2 = 1.0 / (lam_um * lam_um);
    let n_minus_1 = (6432.8 + 2_949_810.0 / (146.0 - sigma2) + 25_540.0 / (41.0 - sigma2)) * 1e-8;
    let n = 1.0 + n_minus_1;
    let number_density = 2.547e25;
    let depolarization = 0.035;
    let lam_m = lambda_nm * 1e-9;
    let king = (6.0 + 3.0 * depolarization) / (6.0 - 7.0 * depolarization);
    8.0 * PI * PI * PI * (n * n - 1.0) * (n * n - 1.0) / (3.0 * number_density * powf(lam_m, 4.0)) * king
}

/// Inputs shared by every physically based model.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmosphereParams {
    pub planet_radius_km: f64,
    pub top_altitude_km: f64,
    /// Sea-level Rayleigh scattering coefficient, m^-1.
    pub rayleigh_scattering: Spectrum,
    pub rayleigh_scale_height_km: f64,
    /// Ångström exponent of the aerosol optical depth `β λ^-α` (λ in µm).
    pub aerosol_alpha: f64,
    /// Ångström turbidity coefficient.
    pub aerosol_beta: f64,
    pub aerosol_scale_height_km: f64,
    pub aerosol_single_scattering_albedo: f64,
    /// Cornette-Shanks asymmetry parameter of the aerosols.
    pub mie_asymmetry_g: f64,
    pub ground_albedo: Spectrum,
    /// Extraterrestrial solar spectral irradiance, W m^-2 nm^-1.
    pub solar_spectrum: Spectrum,
    pub solar_angular_radius: f64,
    /// Linke-style turbidity, used only by the analytic models.
    pub turbidity: f64,
}

/// Per-wavelength coefficients in km^-1 on the parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub grid: WavelengthGrid,
    pub rayleigh: Vec<f64>,
    pub mie_scattering: Vec<f64>,
    pub mie_extinction: Vec<f64>,
    pub solar: Vec<f64>,
    pub albedo: Vec<f64>,
}

impl AtmosphereParams {
    pub const DEFAULT_PLANET_RADIUS_KM: f64 = 6360.0;
    pub const DEFAULT_TOP_ALTITUDE_KM: f64 = 60.0;
    pub const DEFAULT_RAYLEIGH_SCALE_HEIGHT_KM: f64 = 8.0;
    pub const DEFAULT_AEROSOL_ALPHA: f64 = 0.8;
    pub const DEFAULT_AEROSOL_BETA: f64 = 0.04;
    pub const DEFAULT_AEROSOL_SCALE_HEIGHT_KM: f64 = 1.2;
    pub const DEFAULT_AEROSOL_SSA: f64 = 0.8;
    pub const DEFAULT_MIE_G: f64 = 0.7;
    pub const DEFAULT_SOLAR_ANGULAR_RADIUS: f64 = 0.004675;
    pub const DEFAULT_TURBIDITY: f64 = 2.53;

    /// Default scalar parameters around the given spectra.
    pub fn with_spectra(rayleigh_scattering: Spectrum, ground_albedo: Spectrum, solar_spectrum: Spectrum) -> Self {
        AtmosphereParams {
            planet_radius_km: Self::DEFAULT_PLANET_RADIUS_KM,
            top_altitude_km: Self::DEFAULT_TOP_ALTITUDE_KM,
            rayleigh_scattering,
            rayleigh_scale_height_km: Self::DEFAULT_RAYLEIGH_SCALE_HEIGHT_KM,
            aerosol_alpha: Self::DEFAULT_AEROSOL_ALPHA,
            aerosol_beta: Self::DEFAULT_AEROSOL_BETA,
            aerosol_scale_height_km: Self::DEFAULT_AEROSOL_SCALE_HEIGHT_KM,
            aerosol_single_scattering_albedo: Self::DEFAULT_AEROSOL_SSA,
            mie_asymmetry_g: Self::DEFAULT_MIE_G,
            ground_albedo,
            solar_spectrum,
            solar_angular_radius: Self::DEFAULT_SOLAR_ANGULAR_RADIUS,
            turbidity: Self::DEFAULT_TURBIDITY,
        }
    }

    /// Same parameters with other aerosol properties.
    pub fn with_aerosol(&self, alpha: f64, beta: f64, g: f64) -> Self {
        AtmosphereParams { aerosol_alpha: alpha, aerosol_beta: beta, mie_asymmetry_g: g, ..self.clone() }
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.rayleigh_scattering.grid()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("planet_radius_km", self.planet_radius_km),
            ("top_altitude_km", self.top_altitude_km),
            ("rayleigh_scale_height_km", self.rayleigh_scale_height_km),
            ("aerosol_scale_height_km", self.aerosol_scale_height_km),
            ("aerosol_beta", self.aerosol_beta),
            ("solar_angular_radius", self.solar_angular_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid!("{name} must be positive, got {v}"));
            }
        }
        if !self.aerosol_alpha.is_finite() {
            return Err(invalid!("aerosol_alpha must be finite"));
        }
        if !(0.0..=1.0).contains(&self.aerosol_single_scattering_albedo) {
            return Err(invalid!(
                "aerosol single scattering albedo {} outside [0, 1]",
                self.aerosol_single_scattering_albedo
            ));
        }
        if !(self.mie_asymmetry_g > -1.0 && self.mie_asymmetry_g < 1.0) {
            return Err(invalid!("mie asymmetry g = {} outside (-1, 1)", self.mie_asymmetry_g));
        }
        if !(self.turbidity > 0.0 && self.turbidity.is_finite()) {
            return Err(invalid!("turbidity must be positive"));
        }
        let grid = self.grid();
        for (name, s) in [("ground albedo", &self.ground_albedo), ("solar spectrum", &self.solar_spectrum)] {
            if s.grid() != grid {
                return Err(invalid!("{name} is not on the Rayleigh coefficient grid"));
            }
        }
        if self.ground_albedo.values().iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(invalid!("ground albedo outside [0, 1]"));
        }
        if self.rayleigh_scattering.values().iter().chain(self.solar_spectrum.values()).any(|&v| !(v >= 0.0)) {
            return Err(invalid!("negative Rayleigh coefficient or solar irradiance"));
        }
        Ok(())
    }

    /// Same parameters on another wavelength grid. The Rayleigh coefficient
    /// is resampled in log-log space, the other spectra linearly.
    pub fn resampled(&self, grid: &WavelengthGrid) -> Result<Self> {
        use crate::spectrum::Extrapolation::Clamp;
        Ok(AtmosphereParams {
            rayleigh_scattering: self.rayleigh_scattering.resampled_log_log(grid)?,
            ground_albedo: self.ground_albedo.resampled(grid, Clamp),
            solar_spectrum: self.solar_spectrum.resampled(grid, Clamp),
            ..self.clone()
        })
    }

    #[inline]
    pub fn r_ground(&self) -> f64 {
        self.planet_radius_km
    }

    #[inline]
    pub fn r_top(&self) -> f64 {
        self.planet_radius_km + self.top_altitude_km
    }

    /// Relative Rayleigh density at altitude `h` km.
    #[inline]
    pub fn rayleigh_density(&self, h: f64) -> f64 {
        exp(-h / self.rayleigh_scale_height_km)
    }

    /// Relative aerosol density at altitude `h` km.
    #[inline]
    pub fn aerosol_density(&self, h: f64) -> f64 {
        exp(-h / self.aerosol_scale_height_km)
    }

    /// Vertical aerosol optical depth `β λ^-α`, λ in µm.
    pub fn aerosol_optical_depth(&self, lambda_nm: f64) -> f64 {
        self.aerosol_beta * powf(lambda_nm * 1e-3, -self.aerosol_alpha)
    }

    /// Sea-level aerosol extinction (m^-1) whose vertical column over the
    /// truncated exponential profile equals the Ångström optical depth.
    pub fn aerosol_extinction(&self, lambda_nm: f64) -> f64 {
        let h = self.aerosol_scale_height_km;
        let column_m = h * 1000.0 * (1.0 - exp(-self.top_altitude_km / h));
        self.aerosol_optical_depth(lambda_nm) / column_m
    }

    /// Sea-level aerosol scattering coefficient (m^-1).
    pub fn aerosol_scattering(&self, lambda_nm: f64) -> f64 {
        self.aerosol_single_scattering_albedo * self.aerosol_extinction(lambda_nm)
    }

    /// Validated per-wavelength coefficients in km^-1.
    pub fn coefficients(&self) -> Result<Coefficients> {
        self.validate()?;
        let grid = self.grid().clone();
        let l = grid.as_slice();
        Ok(Coefficients {
            rayleigh: self.rayleigh_scattering.values().iter().map(|b| b * 1000.0).collect(),
            mie_scattering: l.iter().map(|&w| self.aerosol_scattering(w) * 1000.0).collect(),
            mie_extinction: l.iter().map(|&w| self.aerosol_extinction(w) * 1000.0).collect(),
            solar: self.solar_spectrum.values().to_vec(),
            albedo: self.ground_albedo.values().to_vec(),
            grid,
        })
    }

    pub fn rayleigh_phase(&self) -> PhaseFunction {
        PhaseFunction::Rayleigh
    }

    pub fn mie_phase(&self) -> PhaseFunction {
        PhaseFunction::CornetteShanks { g: self.mie_asymmetry_g }
    }
}

/// Rayleigh coefficients from [`rayleigh_beta`] on any grid.
pub fn rayleigh_spectrum(grid: &WavelengthGrid) -> Spectrum {
    Spectrum::from_fn(grid.clone(), Quantity::Coefficient, rayleigh_beta).expect("positive coefficients")
}

impl Coefficients {
    pub fn len(&self) -> usize {
        self.rayleigh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rayleigh.is_empty()
    }

    /// `exp(-(β_R D_R + β_M,ext D_M))` per wavelength for density columns
    /// `[D_R, D_M]` in km.
    #[inline]
    pub fn transmittance_into(&self, columns: [f64; 2], out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = exp(-(self.rayleigh[i] * columns[0] + self.mie_extinction[i] * columns[1]));
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Default parameters on `grid` with a smooth synthetic solar spectrum
    /// and a constant 0.1 albedo.
    pub fn params_on(grid: &WavelengthGrid) -> AtmosphereParams {
        let rayleigh = rayleigh_spectrum(grid);
        let albedo = Spectrum::constant(grid.clone(), 0.1, Quantity::Albedo).unwrap();
        let solar = Spectrum::from_fn(grid.clone(), Quantity::Irradiance, |l| {
            1.9 - 0.9 * ((l - 480.0) / 350.0) * ((l - 480.0) / 350.0)
        })
        .unwrap();
        AtmosphereParams::with_spectra(rayleigh, albedo, solar)
    }

    pub fn default_params() -> AtmosphereParams {
        params_on(&WavelengthGrid::canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::default_params;
    use super::*;

    #[test]
    fn rayleigh_beta_follows_inverse_fourth_power_with_dispersion() {
        let ratio = rayleigh_beta(400.0) / rayleigh_beta(800.0);
        assert!((ratio / 16.0 - 1.0).abs() < 0.15, "ratio {ratio}");
        // refractive index dispersion makes the blue side steeper than λ^-4
        assert!(ratio > 16.0);
        assert!(rayleigh_beta(680.0) < rayleigh_beta(440.0));
        for &w in WavelengthGrid::canonical().as_slice() {
            assert!(rayleigh_beta(w) > 0.0);
        }
        // tabulated sea-level value near 550 nm: 1.162e-5 m^-1
        assert!((rayleigh_beta(550.0) / 1.162e-5 - 1.0).abs() < 0.01);
    }

    #[test]
    fn aerosol_column_at_one_micron_equals_beta() {
        let p = default_params();
        assert!((p.aerosol_optical_depth(1000.0) - 0.04).abs() < 1e-15);
        let q = p.with_aerosol(0.0, 0.04, 0.7);
        assert!((q.aerosol_extinction(380.0) - q.aerosol_extinction(800.0)).abs() < 1e-20);
        // ssa ratio
        assert!((p.aerosol_scattering(500.0) / p.aerosol_extinction(500.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn aerosol_vertical_column_by_quadrature() {
        let p = default_params();
        let n = 200_000;
        let dz = p.top_altitude_km / n as f64;
        let mut col = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            col += w * p.aerosol_density(i as f64 * dz) * dz * 1000.0;
        }
        let tau = p.aerosol_extinction(440.0) * col;
        assert!((tau / p.aerosol_optical_depth(440.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let p = default_params();
        assert!(p.validate().is_ok());
        assert!(p.with_aerosol(0.8, 0.04, 1.5).validate().is_err());
        assert!(p.with_aerosol(0.8, 0.0, 0.5).validate().is_err());
        let mut q = p.clone();
        q.aerosol_single_scattering_albedo = 1.2;
        assert!(q.validate().is_err());
        let mut q = p.clone();
        q.solar_spectrum = q.solar_spectrum.resampled(&WavelengthGrid::rgb_samples(), crate::spectrum::Extrapolation::Clamp);
        assert!(q.validate().is_err());
    }
}
