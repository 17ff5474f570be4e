//! Black-area determination and black-area visitors.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::geo::{haversine_deg, Area, PersonId, Timestamp, METERS_PER_DEGREE};
use crate::store::StoreSnapshot;

use super::InvestigationConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct AreaCount {
    pub area: Area,
    /// Distinct confirmed patients seen inside the area.
    pub count: usize,
    pub is_black: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlackAreaResult {
    pub alpha: u32,
    /// One entry per input area, in input order.
    pub areas: Vec<AreaCount>,
}

impl BlackAreaResult {
    pub fn black_areas(&self) -> impl Iterator<Item = &AreaCount> {
        self.areas.iter().filter(|a| a.is_black)
    }

    pub fn is_black(&self, area_id: &str) -> bool {
        self.areas.iter().any(|a| a.is_black && a.area.area_id == area_id)
    }
}

/// Visitors of one black area with their earliest qualifying visit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaSuspects {
    pub area_id: String,
    pub visitors: Vec<(PersonId, Timestamp)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuspectsByArea {
    /// One entry per black area, in area order.
    pub areas: Vec<AreaSuspects>,
}

impl SuspectsByArea {
    /// Union of all per-area visitor sets.
    pub fn union(&self) -> BTreeSet<&PersonId> {
        self.areas
            .iter()
            .flat_map(|a| a.visitors.iter().map(|(p, _)| p))
            .collect()
    }

    /// First black area (in area order) the person visited.
    pub fn first_hit(&self, person: &PersonId) -> Option<&str> {
        self.areas
            .iter()
            .find(|a| a.visitors.iter().any(|(p, _)| p == person))
            .map(|a| a.area_id.as_str())
    }
}

/// Cheap latitude pre-check before the haversine test.
struct AreaProbe<'a> {
    area: &'a Area,
    lat_slack: f64,
}

impl<'a> AreaProbe<'a> {
    fn new(area: &'a Area) -> Self {
        AreaProbe {
            area,
            lat_slack: area.radius_m * 1.001 / METERS_PER_DEGREE,
        }
    }

    #[inline]
    fn contains(&self, lat: f64, lon: f64) -> bool {
        let c = self.area.center;
        (lat - c.lat()).abs() <= self.lat_slack && haversine_deg(c.lat(), c.lon(), lat, lon) <= self.area.radius_m
    }
}

fn in_window(cfg: &InvestigationConfig, t: i64) -> bool {
    let cd = cfg.current_date.secs();
    t <= cd && cfg.black_area_window_s.is_none_or(|w| cd - t <= w)
}

/// Counts distinct confirmed patients (any status) seen inside each area
/// within the black-area window; areas with `count >= alpha` are black.
pub fn find_black_areas(snap: &StoreSnapshot, areas: &[Area], cfg: &InvestigationConfig) -> BlackAreaResult {
    let patients: Vec<u32> = snap.patients().filter_map(|r| snap.person_index(&r.person)).collect();
    let areas = areas
        .par_iter()
        .map(|area| {
            let probe = AreaProbe::new(area);
            let count = patients
                .iter()
                .filter(|&&p| {
                    snap.raw_person_points(p)
                        .iter()
                        .any(|q| in_window(cfg, q.time) && probe.contains(q.lat, q.lon))
                })
                .count();
            AreaCount {
                area: area.clone(),
                count,
                is_black: count >= cfg.alpha as usize,
            }
        })
        .collect();
    BlackAreaResult {
        alpha: cfg.alpha,
        areas,
    }
}

/// Non-patient persons seen inside each black area within the window.
pub fn suspects_from_black_areas(
    snap: &StoreSnapshot,
    ba: &BlackAreaResult,
    cfg: &InvestigationConfig,
) -> SuspectsByArea {
    let areas = ba
        .black_areas()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|entry| {
            let probe = AreaProbe::new(&entry.area);
            let mut first: BTreeMap<u32, i64> = BTreeMap::new();
            for q in snap.raw_points() {
                if in_window(cfg, q.time) && probe.contains(q.lat, q.lon) {
                    first
                        .entry(q.person)
                        .and_modify(|t| *t = (*t).min(q.time))
                        .or_insert(q.time);
                }
            }
            let visitors = first
                .into_iter()
                .map(|(p, t)| (snap.person_id(p).clone(), Timestamp::new(t).unwrap()))
                .filter(|(p, _)| !snap.is_patient(p))
                .collect();
            AreaSuspects {
                area_id: entry.area.area_id.clone(),
                visitors,
            }
        })
        .collect();
    SuspectsByArea { areas }
}
