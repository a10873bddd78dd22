//! On-disk cache of precomputed Bruneton tables keyed by a hash of the
//! atmosphere parameters and table resolutions.

use std::path::{Path, PathBuf};

use clearsky_core::atmosphere::AtmosphereParams;
use clearsky_core::models::{build_bruneton, BrunetonConfig, BrunetonTables};
use sha2::{Digest, Sha256};

use crate::error::AppResult;
use crate::tables::{self, Container};

/// Environment variable naming the cache directory; an empty value turns
/// caching off.
pub const CACHE_ENV: &str = "CLEARSKY_CACHE";

#[derive(Debug, Clone, PartialEq)]
pub struct TableCache {
    dir: Option<PathBuf>,
}

impl TableCache {
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        TableCache { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        TableCache { dir: None }
    }

    /// `$CLEARSKY_CACHE`, else `$XDG_CACHE_HOME/clearsky`, else
    /// `$HOME/.cache/clearsky`, else disabled.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var_os(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        match std::env::var_os(CACHE_ENV) {
            Some(v) if v.is_empty() => Self::disabled(),
            Some(v) => Self::at(v),
            None => TableCache { dir: var("XDG_CACHE_HOME").or_else(|| var("HOME").map(|h| h.join(".cache"))).map(|d| d.join("clearsky")) },
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Tables for `params` and `config`, built and stored on a miss. A
    /// damaged cache file is rebuilt.
    pub fn bruneton(&self, params: &AtmosphereParams, config: BrunetonConfig) -> AppResult<BrunetonTables> {
        let Some(dir) = &self.dir else {
            return Ok(build_bruneton(params, config)?.tables());
        };
        let path = dir.join(format!("bruneton-{}.tbl", key(params, &config)));
        if path.exists() {
            let source = path.display().to_string();
            match Container::load(&path).and_then(|c| tables::bruneton_tables(&source, c)) {
                Ok(t) => return Ok(t),
                Err(e) => eprintln!("warning: rebuilding damaged cache entry: {e}"),
            }
        }
        let t = build_bruneton(params, config)?.tables();
        tables::bruneton_container(&t).save(&path)?;
        Ok(t)
    }
}

/// Hex SHA-256 of the exact parameter values; `{:?}` prints floats so they
/// read back bit-identically.
pub fn key(params: &AtmosphereParams, config: &BrunetonConfig) -> String {
    let mut h = Sha256::new();
    h.update(tables::VERSION.to_le_bytes());
    h.update(format!("{params:?}|{config:?}").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_params;
    use clearsky_core::models::{BrunetonModel, ModelKind, SkySource};
    use clearsky_core::{Vec3, WavelengthGrid};

    fn tiny() -> BrunetonConfig {
        BrunetonConfig { n_r: 4, n_mu: 8, n_mu_s: 4, n_nu: 4, n_theta_i: 4, n_phi_i: 8, orders: 2, samples: 8, ..BrunetonConfig::default() }
    }

    #[test]
    fn keys_track_every_input() {
        let p = default_params(&WavelengthGrid::canonical()).unwrap();
        let k = key(&p, &tiny());
        assert_eq!(k.len(), 64);
        assert_eq!(k, key(&p.clone(), &tiny()));
        assert_ne!(k, key(&p.with_aerosol(0.8, 0.0400001, 0.7), &tiny()));
        assert_ne!(k, key(&p, &BrunetonConfig { orders: 3, ..tiny() }));
    }

    #[test]
    fn cached_tables_reproduce_the_model() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::at(dir.path());
        let grid = WavelengthGrid::uniform(400.0, 700.0, 4).unwrap();
        let p = default_params(&grid).unwrap();
        let a = cache.bruneton(&p, tiny()).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let b = cache.bruneton(&p, tiny()).unwrap();
        let ma = BrunetonModel::from_tables(&p, tiny(), ModelKind::Bruneton, a).unwrap();
        let mb = BrunetonModel::from_tables(&p, tiny(), ModelKind::Bruneton, b).unwrap();
        let (v, s) = (Vec3::from_angles_deg(60.0, 30.0), Vec3::from_angles_deg(40.0, 0.0));
        assert_eq!(ma.radiance(v, s).unwrap(), mb.radiance(v, s).unwrap());
        // a damaged entry is rebuilt
        let f = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
        std::fs::write(&f, b"junk").unwrap();
        assert!(cache.bruneton(&p, tiny()).is_ok());
        assert!(Container::load(&f).is_ok());
    }
}
