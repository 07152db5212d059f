//! Shared domain types and closed-form fisheries math.
//!
//! Units are fixed across the workspace: abundance in thousands of
//! individuals, individual weights in kg, spawning stock biomass (SSB) in
//! tonnes, and mortalities as per-year instantaneous rates. With these
//! conventions `abundance * weight` is already in tonnes, which keeps the
//! magnitudes of reported quantities comparable across modules.

mod error;
mod features;
mod fisheries;
mod types;

pub use error::CoreError;
pub use features::{flatten_features, fnv1a_hash, FeatureParts, FeatureVector, FleetCells};
pub use fisheries::{baranov_catch, recruitment_of, ssb};
pub use types::{
    AbundanceMatrix, AbundanceVector, AgeRange, BiologySeries, FleetKind, FleetObservation,
    ObservationSeries, ParameterKind, StockParameterSeries,
};
