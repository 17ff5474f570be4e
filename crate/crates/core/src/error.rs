//! Error type shared by every module of the core crate.

use crate::geo::{PersonId, Timestamp};
use crate::store::PatientStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("co-location is only defined between two different persons (got {0} twice)")]
    SamePerson(PersonId),

    #[error("point ({person}, {time}) already stored with different coordinates")]
    ConflictingDuplicate { person: PersonId, time: Timestamp },

    #[error("{0} is already an active patient")]
    DuplicateReport(PersonId),

    #[error("illegal status transition for {person}: {from:?} -> {to}")]
    IllegalTransition {
        person: PersonId,
        from: Option<PatientStatus>,
        to: PatientStatus,
    },

    #[error("no active patients to seed the investigation")]
    NoPatients,

    #[error("unknown person {0}")]
    UnknownPerson(String),

    #[error("no infectives in the estimation window")]
    EmptyWindow,

    #[error("integration left the admissible range at t = {t_days} days")]
    NonFiniteState { t_days: f64 },

    #[error("stream is not sorted by time (at t = {0})")]
    UnsortedStream(Timestamp),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad caller input rather than I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
