//! Core library: trajectory storage, ingestion, contact investigation,
//! epidemic models and a synthetic mobility simulator.

pub mod epi;
pub mod error;
pub mod fixtures;
pub mod geo;
pub mod ingest;
pub mod investigation;
pub mod sim;
pub mod store;

pub use error::{Error, Result};
pub use geo::{colocated, haversine, Area, GeoPoint, PersonId, ProximityConfig, Timestamp, TrajectoryPoint};
pub use investigation::{Classification, Investigation, InvestigationConfig, QueryResponse};
pub use store::{PatientRecord, PatientStatus, StoreSnapshot, TrajectoryStore};
