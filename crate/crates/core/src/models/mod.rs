//! The eight sky models behind one interface.
//!
//! Every model is built once (possibly with a long precomputation) and then
//! evaluated for a view direction and a sun direction. Directions are unit
//! vectors in a local frame with +z up; the observer is on the ground.

mod bruneton;
mod common;
mod haber;
mod hosek;
mod nishita93;
mod nishita96;
mod oneal;
mod preetham;
mod irradiance;

pub use bruneton::{build_bruneton, build_elek, BrunetonConfig, BrunetonModel, BrunetonTables};
pub use common::IsotropicSky;
pub use haber::{build_haber, HaberConfig, HaberModel};
pub use hosek::{build_hosek, HosekDataset, HosekModel, FITTED_SOLAR_RADIANCE};
pub use irradiance::{sky_irradiance, sky_irradiance_spectrum, IrradianceQuadrature};
pub use nishita93::{build_nishita93, Nishita93Config, Nishita93Model};
pub use nishita96::{build_nishita96, sampling_directions, Nishita96Config, Nishita96Model};
pub use oneal::{build_oneal, ONealModel, DEFAULT_ONEAL_SAMPLES};
pub use preetham::{build_preetham, perez_luminance, zenith_chromaticity, zenith_luminance, Perez, PreethamModel, PreethamSample, PREETHAM_TURBIDITY_RANGE};

use alloc::sync::Arc;

use crate::math::Vec3;
use crate::spectrum::{Quantity, Spectrum, WavelengthGrid};
use crate::Result;

/// Anything that yields sky radiance for a view and a sun direction.
pub trait SkySource: Send + Sync {
    fn grid(&self) -> &WavelengthGrid;

    /// Spectral radiance (W m^-2 sr^-1 nm^-1) along `view`, one value per
    /// grid wavelength written to `out`.
    fn radiance_into(&self, view: Vec3, sun: Vec3, out: &mut [f64]) -> Result<()>;

    fn radiance(&self, view: Vec3, sun: Vec3) -> Result<Spectrum> {
        let mut out = alloc::vec![0.0; self.grid().len()];
        self.radiance_into(view, sun, &mut out)?;
        Spectrum::new(self.grid().clone(), out, Quantity::Radiance)
    }
}

/// A built sky model with its capability metadata.
pub trait SkyModel: SkySource {
    fn kind(&self) -> ModelKind;

    fn capabilities(&self) -> ModelCapabilities {
        self.kind().capabilities()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Nishita93,
    Nishita96,
    Preetham,
    ONeal,
    Haber,
    Bruneton,
    Elek,
    Hosek,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Nishita93,
        ModelKind::Nishita96,
        ModelKind::Preetham,
        ModelKind::ONeal,
        ModelKind::Haber,
        ModelKind::Bruneton,
        ModelKind::Elek,
        ModelKind::Hosek,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nishita93 => "nishita93",
            ModelKind::Nishita96 => "nishita96",
            ModelKind::Preetham => "preetham",
            ModelKind::ONeal => "oneal",
            ModelKind::Haber => "haber",
            ModelKind::Bruneton => "bruneton",
            ModelKind::Elek => "elek",
            ModelKind::Hosek => "hosek",
        }
    }

    pub fn from_name(name: &str) -> Option<ModelKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether a build only holds for one sun direction.
    pub fn is_sun_specific(self) -> bool {
        matches!(self, ModelKind::Nishita96 | ModelKind::Haber)
    }

    pub fn capabilities(self) -> ModelCapabilities {
        use Complexity::*;
        use ScatteringOrders::*;
        use Viewpoints::*;
        let row = |viewpoints, aerial_perspective, sun_below_horizon, scattering_orders, pt, pm, rt| ModelCapabilities {
            viewpoints,
            aerial_perspective,
            sun_below_horizon,
            scattering_orders,
            precompute_time: pt,
            precompute_memory: pm,
            render_time: rt,
        };
        match self {
            ModelKind::Nishita93 => row(All, true, true, Single, Poly(3), Poly(2), Poly(1)),
            ModelKind::Nishita96 => row(InAtmosphere, true, true, Double, Poly(3), Poly(3), Poly(1)),
            ModelKind::Preetham => row(GroundOnly, true, false, Double, Zero, Zero, Constant),
            ModelKind::ONeal => row(All, true, true, Single, Zero, Zero, Poly(1)),
            ModelKind::Haber => row(GroundOnly, true, true, Multiple, Poly(6), Poly(3), Poly(2)),
            ModelKind::Bruneton | ModelKind::Elek => row(All, true, true, Multiple, Poly(6), Poly(4), Constant),
            ModelKind::Hosek => row(GroundOnly, false, false, Multiple, Zero, Zero, Constant),
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Viewpoints {
    GroundOnly,
    InAtmosphere,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatteringOrders {
    Single,
    Double,
    Multiple,
}

/// Asymptotic cost class in the grid resolution `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Complexity {
    Zero,
    Constant,
    Poly(u8),
}

impl core::fmt::Display for Complexity {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Complexity::Zero => f.write_str("0"),
            Complexity::Constant => f.write_str("O(1)"),
            Complexity::Poly(1) => f.write_str("O(n)"),
            Complexity::Poly(k) => write!(f, "O(n^{k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelCapabilities {
    pub viewpoints: Viewpoints,
    pub aerial_perspective: bool,
    pub sun_below_horizon: bool,
    pub scattering_orders: ScatteringOrders,
    pub precompute_time: Complexity,
    pub precompute_memory: Complexity,
    pub render_time: Complexity,
}

/// Produces a model for a given sun direction. Sun-independent models are
/// built once and shared; sun-specific ones are rebuilt per direction.
pub trait SkyBuilder: Send + Sync {
    fn kind(&self) -> Option<ModelKind>;
    fn model_for_sun(&self, sun: Vec3) -> Result<Arc<dyn SkyModel>>;
}

/// A [`SkyBuilder`] around an already built, sun-independent model.
pub struct Shared(pub Arc<dyn SkyModel>);

impl SkyBuilder for Shared {
    fn kind(&self) -> Option<ModelKind> {
        Some(self.0.kind())
    }

    fn model_for_sun(&self, _sun: Vec3) -> Result<Arc<dyn SkyModel>> {
        Ok(self.0.clone())
    }
}

/// A [`SkyBuilder`] calling a closure for every sun direction.
pub struct PerSun<F> {
    pub kind: ModelKind,
    pub build: F,
}

impl<F> SkyBuilder for PerSun<F>
where
    F: Fn(Vec3) -> Result<Arc<dyn SkyModel>> + Send + Sync,
{
    fn kind(&self) -> Option<ModelKind> {
        Some(self.kind)
    }

    fn model_for_sun(&self, sun: Vec3) -> Result<Arc<dyn SkyModel>> {
        (self.build)(sun)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capability_rows() {
        let c = ModelKind::Preetham.capabilities();
        assert_eq!(c.viewpoints, Viewpoints::GroundOnly);
        assert!(!c.sun_below_horizon);
        assert_eq!(ModelKind::Elek.capabilities(), ModelKind::Bruneton.capabilities());
        assert_eq!(alloc::format!("{}", ModelKind::Haber.capabilities().precompute_time), "O(n^6)");
        assert_eq!(ModelKind::from_name("oneal"), Some(ModelKind::ONeal));
    }
}
