//! Contact investigation over an immutable snapshot: distance classes,
//! black areas, black-area visitors and the person query.

mod black_areas;
mod classify;
pub mod export;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Area, PersonId, ProximityConfig, Timestamp};
use crate::store::StoreSnapshot;

pub use black_areas::{
    find_black_areas, suspects_from_black_areas, AreaCount, AreaSuspects, BlackAreaResult, SuspectsByArea,
};
pub(crate) use classify::contacts_of;
pub use classify::{classify_suspects, ClassMember, Classification};

pub const DAY_S: i64 = 86_400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestigationConfig {
    pub current_date: Timestamp,
    pub incubation_period_s: i64,
    pub proximity: ProximityConfig,
    /// Minimum number of distinct patients that makes an area black.
    pub alpha: u32,
    /// `None` counts visits at any time before the current date.
    pub black_area_window_s: Option<i64>,
    /// Only follow contacts that happen at or after the contact that placed
    /// the previous person in the chain.
    pub causal_ordering: bool,
}

impl Default for InvestigationConfig {
    fn default() -> Self {
        InvestigationConfig {
            current_date: Timestamp::ZERO,
            incubation_period_s: 14 * DAY_S,
            proximity: ProximityConfig::default(),
            alpha: 3,
            black_area_window_s: None,
            causal_ordering: false,
        }
    }
}

impl InvestigationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.incubation_period_s <= 0 {
            return Err(Error::invalid("incubation period must be > 0"));
        }
        if self.alpha < 1 {
            return Err(Error::invalid("alpha must be >= 1"));
        }
        if self.black_area_window_s.is_some_and(|w| w < 0) {
            return Err(Error::invalid("black-area window must be >= 0"));
        }
        Ok(())
    }

    pub(crate) fn check_snapshot(&self, snap: &StoreSnapshot) -> Result<()> {
        self.validate()?;
        if snap.as_of() != self.current_date {
            return Err(Error::invalid(format!(
                "snapshot taken at {} but current date is {}",
                snap.as_of(),
                self.current_date
            )));
        }
        Ok(())
    }
}

/// Answer to a person's "am I at risk" query. Never names anyone else.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub aux: bool,
    pub s: Option<u32>,
    pub ba_k: Option<String>,
}

/// Answers a query from the results of one investigation. `known` decides
/// whether the id has ever been seen.
pub fn query_person(
    person: &PersonId,
    cls: &Classification,
    sba: &SuspectsByArea,
    known: impl Fn(&PersonId) -> bool,
) -> Result<QueryResponse> {
    if !known(person) {
        return Err(Error::UnknownPerson(person.to_string()));
    }
    let s = cls.class_of(person);
    let ba_k = sba.first_hit(person).map(str::to_string);
    Ok(QueryResponse {
        aux: s.is_some() || ba_k.is_some(),
        s,
        ba_k,
    })
}

/// The full result of one investigation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Investigation {
    pub config: InvestigationConfig,
    pub classification: Classification,
    pub black_areas: BlackAreaResult,
    pub suspects: SuspectsByArea,
    pub known: BTreeSet<PersonId>,
}

impl Investigation {
    /// Classify, then determine black areas and their visitors.
    pub fn run(snap: &StoreSnapshot, areas: &[Area], config: InvestigationConfig) -> Result<Self> {
        let classification = classify_suspects(snap, &config)?;
        let black_areas = find_black_areas(snap, areas, &config);
        let suspects = suspects_from_black_areas(snap, &black_areas, &config);
        Ok(Investigation {
            config,
            classification,
            black_areas,
            suspects,
            known: snap.persons().iter().cloned().collect(),
        })
    }

    pub fn query(&self, person: &str) -> Result<QueryResponse> {
        let id = PersonId::new(person).map_err(|_| Error::UnknownPerson(person.to_string()))?;
        query_person(&id, &self.classification, &self.suspects, |p| self.known.contains(p))
    }
}
