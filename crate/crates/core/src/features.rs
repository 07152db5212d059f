//! Flattening of model estimates and observations into named feature
//! vectors for the tree learner.
//!
//! Naming convention: `N_a<age>` for abundance estimates, `<fleet>_a<age>`
//! for per-age observations, bare `<fleet>` for fleets observing a single
//! age class, and `REC_hat` / `SSB_hat` for derived parameter estimates.
//! Missing observation cells stay in the vector as explicit `None` markers
//! so the tree learner can route on missingness.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::{AbundanceVector, ParameterKind};

/// Stable 64-bit FNV-1a over bytes; used for schema ids and data hashes
/// that must not vary across platforms or std versions.
pub fn fnv1a_hash(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Ordered list of named feature values. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    schema_id: String,
    entries: Vec<(String, Option<f64>)>,
}

impl FeatureVector {
    pub fn new(entries: Vec<(String, Option<f64>)>) -> Result<Self, CoreError> {
        for (i, (name, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(other, _)| other == name) {
                return Err(CoreError::Schema(format!("duplicate feature name {name}")));
            }
        }
        let joined = entries
            .iter()
            .map(|(n, _)| n.as_str())
            .collect::<Vec<_>>()
            .join("\x1f");
        let schema_id = format!("fv1-{:016x}", fnv1a_hash(joined.as_bytes()));
        Ok(Self { schema_id, entries })
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.entries.iter().map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(String, Option<f64>)] {
        &self.entries
    }

    pub fn value_at(&self, index: usize) -> Option<f64> {
        self.entries[index].1
    }

    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// One fleet's observation cells for a single year, in age order.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetCells {
    pub fleet: String,
    /// (age, value) in ascending age order over the fleet's coverage.
    pub cells: Vec<(u32, Option<f64>)>,
}

/// Named inputs to [`flatten_features`]. All parts must refer to the same
/// year alignment; the builder does not re-check that.
#[derive(Debug, Clone, Default)]
pub struct FeatureParts<'a> {
    /// Derived parameter estimates, emitted first in the given order.
    pub parameters: Vec<(ParameterKind, f64)>,
    /// Abundance estimate, emitted as `N_a<age>` in ascending age order.
    pub abundance: Option<&'a AbundanceVector>,
    /// Per-fleet observation cells, emitted in the given fleet order.
    pub observations: Vec<FleetCells>,
}

impl FeatureParts<'_> {
    /// Deterministic flattening into a named feature vector.
    pub fn flatten(&self) -> Result<FeatureVector, CoreError> {
        let mut entries: Vec<(String, Option<f64>)> = Vec::new();
        for (kind, value) in &self.parameters {
            entries.push((kind.feature_name().to_string(), Some(*value)));
        }
        if let Some(n) = self.abundance {
            for age in n.ages().ages() {
                entries.push((format!("N_a{age}"), Some(n.get(age).expect("age in range"))));
            }
        }
        for fleet in &self.observations {
            if fleet.cells.len() == 1 {
                // Single-age fleets are effectively unstratified indices.
                entries.push((fleet.fleet.clone(), fleet.cells[0].1));
            } else {
                for (age, value) in &fleet.cells {
                    entries.push((format!("{}_a{age}", fleet.fleet), *value));
                }
            }
        }
        FeatureVector::new(entries)
    }
}

/// Convenience wrapper matching the operation name used elsewhere.
pub fn flatten_features(parts: &FeatureParts<'_>) -> Result<FeatureVector, CoreError> {
    parts.flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::AgeRange;
    use proptest::prelude::*;

    #[test]
    fn empty_parts_flatten_to_empty_vector() {
        let fv = FeatureParts::default().flatten().unwrap();
        assert!(fv.is_empty());
    }

    #[test]
    fn abundance_and_survey_order_is_documented() {
        let ages = AgeRange::new(1, 3, false).unwrap();
        let n = AbundanceVector::new(2000, ages, vec![5.0, 10.0, 20.0]).unwrap();
        let parts = FeatureParts {
            parameters: vec![],
            abundance: Some(&n),
            observations: vec![FleetCells {
                fleet: "acoustic".into(),
                cells: vec![(1, Some(4.0)), (2, None)],
            }],
        };
        let fv = parts.flatten().unwrap();
        let names: Vec<_> = fv.names().collect();
        assert_eq!(
            names,
            vec!["N_a1", "N_a2", "N_a3", "acoustic_a1", "acoustic_a2"]
        );
        assert_eq!(fv.len(), 5);
        assert_eq!(fv.get("acoustic_a2"), Some(None));
    }

    #[test]
    fn single_age_fleet_is_unstratified() {
        let parts = FeatureParts {
            parameters: vec![(ParameterKind::Ssb, 120.0)],
            abundance: None,
            observations: vec![FleetCells {
                fleet: "poundnet".into(),
                cells: vec![(3, Some(7.5))],
            }],
        };
        let fv = parts.flatten().unwrap();
        let names: Vec<_> = fv.names().collect();
        assert_eq!(names, vec!["SSB_hat", "poundnet"]);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let parts = FeatureParts {
            parameters: vec![(ParameterKind::Ssb, 1.0), (ParameterKind::Ssb, 2.0)],
            abundance: None,
            observations: vec![],
        };
        assert!(matches!(parts.flatten(), Err(CoreError::Schema(_))));
    }

    #[test]
    fn flattening_is_deterministic() {
        let ages = AgeRange::new(1, 2, false).unwrap();
        let n = AbundanceVector::new(2000, ages, vec![1.0, 2.0]).unwrap();
        let build = || {
            FeatureParts {
                parameters: vec![(ParameterKind::Recruitment, 1.0)],
                abundance: Some(&n),
                observations: vec![FleetCells {
                    fleet: "srv".into(),
                    cells: vec![(1, Some(0.5)), (2, Some(0.25))],
                }],
            }
            .flatten()
            .unwrap()
        };
        assert_eq!(build(), build());
        assert_eq!(build().schema_id(), build().schema_id());
    }

    proptest! {
        // Injectivity on a fixed schema: distinct inputs differ somewhere in
        // the flattened values.
        #[test]
        fn flatten_is_injective_on_schema(
            a in proptest::collection::vec(0.0f64..1e3, 2),
            b in proptest::collection::vec(0.0f64..1e3, 2),
        ) {
            let ages = AgeRange::new(1, 2, false).unwrap();
            let na = AbundanceVector::new(2000, ages, a.clone()).unwrap();
            let nb = AbundanceVector::new(2000, ages, b.clone()).unwrap();
            let fa = FeatureParts { abundance: Some(&na), ..Default::default() }.flatten().unwrap();
            let fb = FeatureParts { abundance: Some(&nb), ..Default::default() }.flatten().unwrap();
            prop_assert_eq!(fa.schema_id(), fb.schema_id());
            if a != b {
                prop_assert!(fa != fb);
            } else {
                prop_assert!(fa == fb);
            }
        }
    }
}
