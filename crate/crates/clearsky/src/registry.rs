//! Model names accepted on the command line and the context that builds
//! them.

use std::sync::{Arc, Mutex};

use clearsky_core::dataset::{RecordSky, SkyDataset, SkyRecord};
use clearsky_core::models::{
    build_haber, build_hosek, build_nishita93, build_nishita96, build_oneal, build_preetham, BrunetonConfig, BrunetonModel, BrunetonTables,
    ModelKind, PerSun, Shared, SkyBuilder, SkyModel, SkySource,
};
use clearsky_core::{Error, Vec3, WavelengthGrid};

use crate::cache::{self, TableCache};
use crate::data::ReferenceData;
use crate::error::AppResult;
use crate::formats::{load_dataset, RunConfig};

/// Names accepted by [`Context::provider`] besides `dataset:<path>` and
/// `oneal:<samples>`.
pub const MODEL_NAMES: [&str; 8] = ["nishita93", "nishita96", "preetham", "oneal", "haber", "bruneton", "elek", "hosek"];

/// A named sky: a model builder or a sampled dataset.
pub enum Provider {
    Model { name: String, builder: Box<dyn SkyBuilder> },
    Dataset { name: String, data: SkyDataset },
}

/// Sun directions of dataset records and ephemeris rows match to this.
const SUN_MATCH: f64 = 1e-9;

impl Provider {
    pub fn name(&self) -> &str {
        match self {
            Provider::Model { name, .. } | Provider::Dataset { name, .. } => name,
        }
    }

    pub fn builder(&self) -> Option<&dyn SkyBuilder> {
        match self {
            Provider::Model { builder, .. } => Some(builder.as_ref()),
            Provider::Dataset { .. } => None,
        }
    }

    /// Record of a dataset matching `time`, or else the sun direction.
    pub fn record(&self, time: Option<&str>, sun: Vec3) -> AppResult<Option<&SkyRecord>> {
        let Provider::Dataset { name, data } = self else { return Ok(None) };
        let found = match time {
            Some(t) => data.records().iter().find(|r| r.time == t),
            None => data.records().iter().find(|r| (r.sun_direction() - sun).length() < SUN_MATCH),
        };
        found
            .map(Some)
            .ok_or_else(|| Error::InvalidInput(format!("{name} has no record for {}", time.unwrap_or("that sun direction"))).into())
    }

    /// The sky for one time and sun direction. Models refuse suns their
    /// capability row excludes; datasets use the record at `time`.
    pub fn source(&self, time: Option<&str>, sun: Vec3) -> AppResult<Arc<dyn SkySource>> {
        match self {
            Provider::Model { name, builder } => {
                if let Some(kind) = builder.kind() {
                    if sun.z < 0.0 && !kind.capabilities().sun_below_horizon {
                        return Err(Error::Unsupported(format!("{name} does not support a sun below the horizon (capability: sunset/sunrise = no)")).into());
                    }
                }
                let m: Arc<dyn SkySource> = builder.model_for_sun(sun)?;
                Ok(m)
            }
            Provider::Dataset { .. } => {
                let r = self.record(time, sun)?.expect("dataset provider");
                Ok(Arc::new(RecordSky::new(r.clone())?))
            }
        }
    }
}

/// Run configuration, reference data and the table cache.
pub struct Context {
    pub config: RunConfig,
    pub reference: Arc<ReferenceData>,
    pub cache: TableCache,
    /// Tables built during this run, shared by bruneton and elek.
    tables: Mutex<Vec<(String, BrunetonTables)>>,
}

impl Context {
    pub fn new(config: RunConfig, reference: ReferenceData, cache: TableCache) -> Self {
        Context { config, reference: Arc::new(reference), cache, tables: Mutex::new(Vec::new()) }
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.config.params.grid()
    }

    fn bruneton(&self, kind: ModelKind, config: BrunetonConfig) -> AppResult<BrunetonModel> {
        let params = &self.config.params;
        let key = cache::key(params, &config);
        let mut memo = self.tables.lock().expect("table memo poisoned");
        let tables = match memo.iter().find(|(k, _)| *k == key) {
            Some((_, t)) => t.clone(),
            None => {
                let t = self.cache.bruneton(params, config)?;
                memo.push((key, t.clone()));
                t
            }
        };
        Ok(BrunetonModel::from_tables(params, config, kind, tables)?)
    }

    /// Builds the sky called `name`.
    pub fn provider(&self, name: &str) -> AppResult<Provider> {
        if let Some(path) = name.strip_prefix("dataset:") {
            return Ok(Provider::Dataset { name: name.to_string(), data: load_dataset(path.as_ref())? });
        }
        let (base, arg) = match name.split_once(':') {
            Some((b, a)) => (b, Some(a)),
            None => (name, None),
        };
        let kind = ModelKind::from_name(base).ok_or_else(|| {
            Error::InvalidInput(format!("unknown model '{name}'; expected one of {}, oneal:<samples> or dataset:<path>", MODEL_NAMES.join(", ")))
        })?;
        if arg.is_some() && kind != ModelKind::ONeal {
            return Err(Error::InvalidInput(format!("model '{base}' takes no ':' argument")).into());
        }
        let p = &self.config.params;
        let m = &self.config.models;
        let shared = |model: Arc<dyn SkyModel>| -> Box<dyn SkyBuilder> { Box::new(Shared(model)) };
        let builder: Box<dyn SkyBuilder> = match kind {
            ModelKind::Nishita93 => shared(Arc::new(build_nishita93(p, m.nishita93)?)),
            ModelKind::ONeal => {
                let samples = match arg {
                    Some(a) => a.parse().map_err(|_| Error::InvalidInput(format!("oneal sample count '{a}' is not a number")))?,
                    None => m.oneal_samples,
                };
                shared(Arc::new(build_oneal(p, samples)?))
            }
            ModelKind::Preetham => {
                let r = &self.reference;
                shared(Arc::new(build_preetham(p.turbidity, &r.daylight, &r.cmf, self.grid())?))
            }
            ModelKind::Hosek => {
                shared(Arc::new(build_hosek(p.turbidity, &p.ground_albedo, &p.solar_spectrum, &self.reference.hosek, self.grid())?))
            }
            ModelKind::Bruneton | ModelKind::Elek => shared(Arc::new(self.bruneton(kind, m.bruneton)?)),
            ModelKind::Nishita96 => {
                let (params, config) = (p.clone(), m.nishita96);
                Box::new(PerSun { kind, build: move |sun| Ok(Arc::new(build_nishita96(&params, sun, config)?) as Arc<dyn SkyModel>) })
            }
            ModelKind::Haber => {
                let (params, config) = (p.clone(), m.haber);
                Box::new(PerSun { kind, build: move |sun| Ok(Arc::new(build_haber(&params, sun, config)?) as Arc<dyn SkyModel>) })
            }
        };
        Ok(Provider::Model { name: name.to_string(), builder })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn context() -> Context {
        let mut config = RunConfig::defaults().unwrap();
        config.models.bruneton =
            BrunetonConfig { n_r: 4, n_mu: 8, n_mu_s: 4, n_nu: 4, n_theta_i: 4, n_phi_i: 8, orders: 2, samples: 8, ..BrunetonConfig::default() };
        Context::new(config, ReferenceData::embedded().unwrap(), TableCache::disabled())
    }

    #[test]
    fn names_resolve_and_unknown_ones_fail() {
        let ctx = context();
        for name in ["nishita93", "oneal", "oneal:32", "preetham", "hosek", "bruneton", "elek", "nishita96", "haber"] {
            let p = ctx.provider(name).unwrap();
            assert_eq!(p.name(), name);
            assert_eq!(p.builder().unwrap().kind().unwrap().name(), name.split(':').next().unwrap());
        }
        assert!(ctx.provider("rayleigh").is_err());
        assert!(ctx.provider("haber:3").is_err());
        assert!(ctx.provider("dataset:/nonexistent.csv").is_err());
    }

    #[test]
    fn bruneton_and_elek_share_one_table_build() {
        let ctx = context();
        let (a, b) = (ctx.provider("bruneton").unwrap(), ctx.provider("elek").unwrap());
        assert_eq!(ctx.tables.lock().unwrap().len(), 1);
        let (v, s) = (Vec3::from_angles_deg(50.0, 10.0), Vec3::from_angles_deg(30.0, 0.0));
        let x = a.source(None, s).unwrap().radiance(v, s).unwrap();
        let y = b.source(None, s).unwrap().radiance(v, s).unwrap();
        assert_eq!(x, y);
    }
}
