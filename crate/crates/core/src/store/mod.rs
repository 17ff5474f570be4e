//! Append-only trajectory log and health registry.
//!
//! Points are never updated: re-sending an identical point is a no-op and
//! re-sending `(person, time)` with other coordinates is rejected. Arrival
//! order is irrelevant; per-person ordering is restored when a snapshot is
//! taken.

mod index;
pub mod io;
mod snapshot;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{MicroCoord, PersonId, ProximityConfig, Timestamp, TrajectoryPoint};

pub use index::{GridIndex, GridKey, MIN_CELL_M};
pub use snapshot::{read_key_values, StoreSnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatientStatus {
    Active,
    Recovered,
    Dead,
}

impl PatientStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PatientStatus::Active => "active",
            PatientStatus::Recovered => "recovered",
            PatientStatus::Dead => "dead",
        }
    }

    pub fn can_become(self, next: PatientStatus) -> bool {
        matches!(
            (self, next),
            (PatientStatus::Active, PatientStatus::Recovered) | (PatientStatus::Active, PatientStatus::Dead)
        )
    }
}

impl fmt::Display for PatientStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatientStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(PatientStatus::Active),
            "recovered" => Ok(PatientStatus::Recovered),
            "dead" => Ok(PatientStatus::Dead),
            other => Err(Error::invalid(format!("unknown patient status {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub person: PersonId,
    pub status: PatientStatus,
    pub confirmed_at: Timestamp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendReceipt {
    pub accepted: usize,
    pub duplicates: usize,
}

impl std::ops::AddAssign for AppendReceipt {
    fn add_assign(&mut self, rhs: Self) {
        self.accepted += rhs.accepted;
        self.duplicates += rhs.duplicates;
    }
}

#[derive(Debug, Default, Clone)]
pub struct TrajectoryStore {
    ids: Vec<PersonId>,
    lookup: HashMap<PersonId, u32>,
    tracks: Vec<BTreeMap<i64, MicroCoord>>,
    patients: BTreeMap<PersonId, PatientRecord>,
    n_points: usize,
}

impl TrajectoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn patients(&self) -> impl Iterator<Item = &PatientRecord> {
        self.patients.values()
    }

    pub fn patient(&self, person: &PersonId) -> Option<&PatientRecord> {
        self.patients.get(person)
    }

    /// Every point, ordered by person id then time.
    pub fn points(&self) -> impl Iterator<Item = TrajectoryPoint> + '_ {
        let mut order: Vec<u32> = (0..self.ids.len() as u32).collect();
        order.sort_by(|a, b| self.ids[*a as usize].cmp(&self.ids[*b as usize]));
        order.into_iter().flat_map(move |p| {
            let person = &self.ids[p as usize];
            self.tracks[p as usize]
                .iter()
                .map(move |(t, c)| TrajectoryPoint::new(person.clone(), c.to_geo(), Timestamp::new(*t).unwrap()))
        })
    }

    /// Appends a batch atomically: either every point is accepted or
    /// deduplicated, or nothing is written.
    pub fn append_points(&mut self, batch: &[TrajectoryPoint]) -> Result<AppendReceipt> {
        self.append_points_collect(batch).map(|(r, _)| r)
    }

    /// Like [`TrajectoryStore::append_points`], also returning the newly
    /// stored points (quantized) in batch order.
    pub fn append_points_collect(
        &mut self,
        batch: &[TrajectoryPoint],
    ) -> Result<(AppendReceipt, Vec<TrajectoryPoint>)> {
        let mut fresh: HashMap<(&PersonId, i64), MicroCoord> = HashMap::new();
        let mut receipt = AppendReceipt::default();
        let mut order = Vec::with_capacity(batch.len());
        for p in batch {
            let coord = p.loc.micro();
            let t = p.time.secs();
            let stored = self
                .lookup
                .get(&p.person)
                .and_then(|&i| self.tracks[i as usize].get(&t))
                .or_else(|| fresh.get(&(&p.person, t)));
            match stored {
                Some(c) if *c == coord => receipt.duplicates += 1,
                Some(_) => {
                    return Err(Error::ConflictingDuplicate {
                        person: p.person.clone(),
                        time: p.time,
                    })
                }
                None => {
                    fresh.insert((&p.person, t), coord);
                    order.push((&p.person, t, coord));
                    receipt.accepted += 1;
                }
            }
        }
        let mut added = Vec::with_capacity(order.len());
        for (person, t, coord) in order {
            let idx = self.intern(person);
            self.tracks[idx as usize].insert(t, coord);
            added.push(TrajectoryPoint::new(
                person.clone(),
                coord.to_geo(),
                Timestamp::new(t).unwrap(),
            ));
        }
        self.n_points += receipt.accepted;
        Ok((receipt, added))
    }

    fn intern(&mut self, person: &PersonId) -> u32 {
        if let Some(&i) = self.lookup.get(person) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(person.clone());
        self.lookup.insert(person.clone(), i);
        self.tracks.push(BTreeMap::new());
        i
    }

    pub fn report_patient(&mut self, person: PersonId, confirmed_at: Timestamp) -> Result<&PatientRecord> {
        if let Some(rec) = self.patients.get(&person) {
            if rec.status == PatientStatus::Active {
                return Err(Error::DuplicateReport(person));
            }
        }
        let rec = PatientRecord {
            person: person.clone(),
            status: PatientStatus::Active,
            confirmed_at,
        };
        self.patients.insert(person.clone(), rec);
        Ok(&self.patients[&person])
    }

    pub fn update_status(&mut self, person: &PersonId, new_status: PatientStatus) -> Result<&PatientRecord> {
        let Some(rec) = self.patients.get_mut(person) else {
            return Err(Error::IllegalTransition {
                person: person.clone(),
                from: None,
                to: new_status,
            });
        };
        if !rec.status.can_become(new_status) {
            return Err(Error::IllegalTransition {
                person: person.clone(),
                from: Some(rec.status),
                to: new_status,
            });
        }
        rec.status = new_status;
        Ok(rec)
    }

    /// Loads patient records verbatim (used when restoring persisted state).
    pub fn restore_patient(&mut self, rec: PatientRecord) {
        self.patients.insert(rec.person.clone(), rec);
    }

    /// Whether the person appears in trajectories or the health registry.
    pub fn knows(&self, person: &PersonId) -> bool {
        self.lookup.contains_key(person) || self.patients.contains_key(person)
    }

    /// Immutable view of everything observed up to `as_of`, indexed for
    /// `proximity`.
    pub fn snapshot(&self, as_of: Timestamp, proximity: ProximityConfig) -> StoreSnapshot {
        let mut order: Vec<u32> = (0..self.ids.len() as u32).collect();
        order.sort_by(|a, b| self.ids[*a as usize].cmp(&self.ids[*b as usize]));
        let tracks = order.into_iter().map(|p| {
            let person = self.ids[p as usize].clone();
            let pts: Vec<(i64, MicroCoord)> = self.tracks[p as usize]
                .range(..=as_of.secs())
                .map(|(t, c)| (*t, *c))
                .collect();
            (person, pts)
        });
        let patients = self
            .patients
            .values()
            .filter(|r| r.confirmed_at <= as_of)
            .cloned()
            .collect();
        StoreSnapshot::from_sorted_tracks(tracks, patients, as_of, proximity)
    }

    /// Writes `points.csv` and `patients.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        io::write_points_csv(std::fs::File::create(dir.join("points.csv"))?, self.points())?;
        io::write_patients_csv(std::fs::File::create(dir.join("patients.csv"))?, self.patients.values())?;
        Ok(())
    }

    /// Inverse of [`TrajectoryStore::save`]; missing files mean empty.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut store = TrajectoryStore::new();
        let points = dir.join("points.csv");
        if points.exists() {
            let pts = io::read_points_file(&points)?;
            store.append_points(&pts)?;
        }
        let patients = dir.join("patients.csv");
        if patients.exists() {
            for rec in io::read_patients_file(&patients)? {
                store.restore_patient(rec);
            }
        }
        Ok(store)
    }
}
