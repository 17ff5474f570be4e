//! Operations shared by the command line and the HTTP API.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use contrace_core::epi::{estimate_contact_rate, ContactStats, EpiEstimate};
use contrace_core::ingest::{expand_interval, filter_points, ExclusionZone, IntervalRow};
use contrace_core::investigation::{InvestigationConfig, DAY_S};
use contrace_core::store::read_key_values;
use contrace_core::{
    Area, Error, Investigation, PatientRecord, PatientStatus, PersonId, ProximityConfig, Result, StoreSnapshot,
    Timestamp, TrajectoryPoint, TrajectoryStore,
};
use serde::{Deserialize, Serialize};

use crate::data::DataDir;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReceipt {
    pub accepted: usize,
    pub duplicates: usize,
    /// Points dropped by exclusion zones.
    pub filtered: usize,
}

/// Parameters of one investigation run, as accepted by the API.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestigationRequest {
    pub as_of: i64,
    #[serde(default = "defaults::ip_days")]
    pub ip_days: f64,
    #[serde(default = "defaults::epsilon_m")]
    pub epsilon_m: f64,
    #[serde(default = "defaults::delta_t_s")]
    pub delta_t_s: i64,
    #[serde(default = "defaults::alpha")]
    pub alpha: u32,
    #[serde(default)]
    pub black_area_window_s: Option<i64>,
    #[serde(default)]
    pub causal: bool,
}

pub mod defaults {
    pub fn ip_days() -> f64 {
        14.0
    }
    pub fn epsilon_m() -> f64 {
        2.0
    }
    pub fn delta_t_s() -> i64 {
        300
    }
    pub fn alpha() -> u32 {
        3
    }
}

impl InvestigationRequest {
    pub fn config(&self) -> Result<InvestigationConfig> {
        if !(self.ip_days > 0.0 && self.ip_days.is_finite()) {
            return Err(Error::Invalid("ip_days must be > 0".into()));
        }
        let cfg = InvestigationConfig {
            current_date: Timestamp::new(self.as_of)?,
            incubation_period_s: (self.ip_days * DAY_S as f64).round() as i64,
            proximity: ProximityConfig::new(self.epsilon_m, self.delta_t_s)?,
            alpha: self.alpha,
            black_area_window_s: self.black_area_window_s,
            causal_ordering: self.causal,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Mutable state behind a data directory. Every mutation is persisted
/// before it returns.
pub struct Service {
    data: DataDir,
    store: TrajectoryStore,
    areas: Vec<Area>,
    zones: Vec<ExclusionZone>,
}

impl Service {
    pub fn open(data: DataDir) -> Result<Self> {
        Ok(Service {
            store: data.load_store()?,
            areas: data.load_areas()?,
            zones: data.load_zones()?,
            data,
        })
    }

    pub fn data(&self) -> &DataDir {
        &self.data
    }

    pub fn store(&self) -> &TrajectoryStore {
        &self.store
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn ingest_points(&mut self, points: Vec<TrajectoryPoint>) -> Result<IngestReceipt> {
        let (kept, stats) = filter_points(points, &self.zones);
        let (receipt, added) = self.store.append_points_collect(&kept)?;
        self.data.append_points(&added)?;
        Ok(IngestReceipt {
            accepted: receipt.accepted,
            duplicates: receipt.duplicates,
            filtered: stats.dropped,
        })
    }

    /// Resolves intervals against the stored areas and expands them at
    /// `delta_t_s` before ingesting, together with `points`, as one batch.
    pub fn ingest_mixed(
        &mut self,
        mut points: Vec<TrajectoryPoint>,
        intervals: &[IntervalRow],
        delta_t_s: i64,
    ) -> Result<IngestReceipt> {
        let by_id: HashMap<String, Area> = self.areas.iter().map(|a| (a.area_id.clone(), a.clone())).collect();
        for row in intervals {
            points.extend(expand_interval(&row.resolve(&by_id)?, delta_t_s));
        }
        self.ingest_points(points)
    }

    pub fn set_areas(&mut self, areas: Vec<Area>) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &areas {
            if !seen.insert(&a.area_id) {
                return Err(Error::Invalid(format!("duplicate area id {}", a.area_id)));
            }
        }
        self.data.save_areas(&areas)?;
        self.areas = areas;
        Ok(())
    }

    pub fn set_zones_from(&mut self, path: &Path) -> Result<()> {
        self.data.save_zones_from(path)?;
        self.zones = self.data.load_zones()?;
        Ok(())
    }

    pub fn report_patient(&mut self, person: PersonId, confirmed_at: Timestamp) -> Result<PatientRecord> {
        let rec = self.store.report_patient(person, confirmed_at)?.clone();
        self.data.save_patients(&self.store)?;
        Ok(rec)
    }

    pub fn set_status(&mut self, person: &PersonId, status: PatientStatus) -> Result<PatientRecord> {
        let rec = self.store.update_status(person, status)?.clone();
        self.data.save_patients(&self.store)?;
        Ok(rec)
    }

    /// Loads registry records; records already present verbatim are skipped.
    pub fn import_patients(&mut self, records: Vec<PatientRecord>) -> Result<usize> {
        let mut n = 0;
        for rec in records {
            if self.store.patient(&rec.person) == Some(&rec) {
                continue;
            }
            self.store.report_patient(rec.person.clone(), rec.confirmed_at)?;
            if rec.status != PatientStatus::Active {
                self.store.update_status(&rec.person, rec.status)?;
            }
            n += 1;
        }
        self.data.save_patients(&self.store)?;
        Ok(n)
    }

    /// Latest time seen in trajectories or confirmations.
    pub fn latest_time(&self) -> Timestamp {
        let pts = self.store.points().map(|p| p.time).max();
        let pats = self.store.patients().map(|p| p.confirmed_at).max();
        pts.max(pats).unwrap_or(Timestamp::ZERO)
    }

    pub fn snapshot(&self, cfg: &InvestigationConfig) -> StoreSnapshot {
        self.store.snapshot(cfg.current_date, cfg.proximity)
    }
}

/// Runs an investigation on a snapshot and persists it; returns its id.
pub fn execute_investigation(
    data: &DataDir,
    snap: &StoreSnapshot,
    areas: &[Area],
    cfg: InvestigationConfig,
) -> Result<(String, Investigation)> {
    let inv = Investigation::run(snap, areas, cfg)?;
    let est = estimate_contact_rate(snap, &inv.classification, &cfg, 1.0);
    let id = data.save_investigation(&inv, |dir| write_contact_stats(&dir.join("contact_stats"), &est))?;
    Ok((id, inv))
}

fn write_contact_stats(path: &Path, est: &Result<(ContactStats, EpiEstimate)>) -> Result<()> {
    let mut f = File::create(path)?;
    match est {
        Ok((s, e)) => {
            writeln!(f, "window_start={}", s.window_start)?;
            writeln!(f, "window_end={}", s.window_end)?;
            writeln!(f, "distinct_pairs={}", s.distinct_pairs)?;
            writeln!(f, "infective_count={}", s.infective_count)?;
            writeln!(
                f,
                "contacts_per_infective_per_day={:?}",
                s.contacts_per_infective_per_day
            )?;
            writeln!(f, "theta_hat={:?}", e.theta_hat)?;
            writeln!(f, "iu_size={}", e.iu_size)?;
        }
        Err(Error::EmptyWindow) => writeln!(f, "empty_window=true")?,
        Err(e) => return Err(Error::Invalid(e.to_string())),
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateResponse {
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    pub contacts_per_infective_per_day: f64,
    pub distinct_pairs: usize,
    pub infective_count: usize,
    pub p_trans: f64,
    pub beta_hat: f64,
    pub theta_hat: f64,
    pub iu_size: usize,
}

/// Contact-rate estimate of a saved investigation at transmission
/// probability `p_trans`.
pub fn epi_estimate(data: &DataDir, id: &str, p_trans: f64) -> Result<EstimateResponse> {
    if !(0.0..=1.0).contains(&p_trans) {
        return Err(Error::Invalid("p_trans must be in [0, 1]".into()));
    }
    let path = data.investigation_file(id, "contact_stats")?;
    let kv = read_key_values(&path)?;
    if kv.contains_key("empty_window") {
        return Err(Error::EmptyWindow);
    }
    let get = |k: &str| -> Result<&String> {
        kv.get(k).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: format!("missing {k}"),
        })
    };
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Invalid(format!("bad {k}"))) };
    let int = |k: &str| -> Result<i64> { get(k)?.parse().map_err(|_| Error::Invalid(format!("bad {k}"))) };
    let rate = num("contacts_per_infective_per_day")?;
    Ok(EstimateResponse {
        window_start: Timestamp::new(int("window_start")?)?,
        window_end: Timestamp::new(int("window_end")?)?,
        contacts_per_infective_per_day: rate,
        distinct_pairs: int("distinct_pairs")? as usize,
        infective_count: int("infective_count")? as usize,
        p_trans,
        beta_hat: rate * p_trans,
        theta_hat: num("theta_hat")?,
        iu_size: int("iu_size")? as usize,
    })
}
