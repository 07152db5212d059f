//! Assessment-model cache: expanding-window loops refit nothing twice.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use stockcast_assess::{fit, fit_warm, AssessorConfig, FittedAssessment};
use stockcast_core::{fnv1a_hash, BiologySeries, FleetKind, ObservationSeries};

use crate::HybridError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    data_hash: u64,
    last_year: i32,
    cfg_hash: u64,
}

/// Shared cache of fitted models keyed by (data, truncation year,
/// config). Insertions keep the first value for a key, so concurrent
/// duplicate fits (which are deterministic anyway) stay consistent.
#[derive(Default)]
pub struct ModelCache {
    inner: Mutex<HashMap<CacheKey, Arc<FittedAssessment>>>,
}

fn hash_observations(obs: &ObservationSeries) -> u64 {
    let mut bytes = Vec::new();
    for fleet in obs.fleets() {
        bytes.extend_from_slice(fleet.name().as_bytes());
        match fleet.kind() {
            FleetKind::CommercialCatch => bytes.push(0),
            FleetKind::Survey { timing } => {
                bytes.push(1);
                bytes.extend_from_slice(&timing.to_bits().to_le_bytes());
            }
        }
        bytes.extend_from_slice(&fleet.first_year().to_le_bytes());
        for year in fleet.first_year()..=fleet.last_year() {
            for cell in fleet.row(year).unwrap_or(&[]) {
                match cell {
                    None => bytes.push(2),
                    Some(v) => {
                        bytes.push(3);
                        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
                    }
                }
            }
        }
    }
    fnv1a_hash(&bytes)
}

fn hash_config(cfg: &AssessorConfig) -> u64 {
    let text = serde_json::to_string(cfg).expect("config serializes");
    fnv1a_hash(text.as_bytes())
}

impl ModelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &CacheKey) -> Option<Arc<FittedAssessment>> {
        self.inner.lock().expect("cache lock").get(key).cloned()
    }

    fn insert(&self, key: CacheKey, model: Arc<FittedAssessment>) -> Arc<FittedAssessment> {
        self.inner
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert(model)
            .clone()
    }

    /// Fit `M_t` for every `t` in `years` (ascending), warm-starting each
    /// fit from the previous converged optimum, reusing cached models.
    pub fn fit_range(
        &self,
        obs: &ObservationSeries,
        bio: &BiologySeries,
        cfg: &AssessorConfig,
        years: std::ops::RangeInclusive<i32>,
    ) -> Result<BTreeMap<i32, Arc<FittedAssessment>>, HybridError> {
        let data_hash = hash_observations(obs);
        let cfg_hash = hash_config(cfg);
        let mut result = BTreeMap::new();
        let mut previous: Option<Arc<FittedAssessment>> = None;
        for t in years {
            let key = CacheKey {
                data_hash,
                last_year: t,
                cfg_hash,
            };
            let model = match self.get(&key) {
                Some(m) => m,
                None => {
                    let truncated = obs.truncated(t)?;
                    let fitted = match &previous {
                        Some(prev) if prev.converged => {
                            fit_warm(&truncated, bio, cfg, &prev.params)?
                        }
                        _ => fit(&truncated, bio, cfg)?,
                    };
                    self.insert(key, Arc::new(fitted))
                }
            };
            previous = Some(model.clone());
            result.insert(t, model);
        }
        Ok(result)
    }
}
