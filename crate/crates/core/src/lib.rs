//! Spectral clear-sky radiance models and the tooling needed to compare them.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! the file system (reference data, dataset files, images, caches) lives in
//! the companion `clearsky` crate; here every input arrives as plain values.
//!
//! Module map:
//!
//! - [`spectrum`]: wavelength grids and sampled spectra.
//! - [`color`]: CIE colour matching, sRGB conversion, tone mapping and the
//!   three-sample RGB / spectrum reconstruction shortcuts.
//! - [`atmosphere`]: the shared physical parameterization (profiles,
//!   coefficients, phase functions, optical depth and transmittance).
//! - [`models`]: the eight sky models behind [`models::SkyModel`].
//! - [`dataset`]: measured or simulated radiance samples over the sky dome.
//! - [`harness`]: fisheye renders, error metrics, profiles and irradiance.
//! - [`inversion`]: aerosol parameter fitting and the turbidity fit.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod atmosphere;
pub mod color;
pub mod dataset;
mod error;
pub mod grid;
pub mod harness;
pub mod inversion;
pub mod math;
pub mod models;
pub mod spectrum;

pub use error::{Error, Result};
pub use math::Vec3;
pub use spectrum::{Quantity, Spectrum, WavelengthGrid};
