//! Distance-class suspect classification.
//!
//! The contact graph has persons as vertices and co-location events as
//! edges. An event between observations at times `t_a` and `t_b` happens at
//! `max(t_a, t_b)` and only counts if it lies within the incubation period
//! before the current date. Classes are the layers of a multi-source BFS
//! seeded with the active patients.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{PersonId, Timestamp};
use crate::store::StoreSnapshot;

use super::InvestigationConfig;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMember {
    pub person: PersonId,
    /// Time of the contact that placed the person in its class; the
    /// confirmation time for class 0.
    pub contact_ts: Timestamp,
}

/// Disjoint distance classes; `classes[d]` holds the persons at distance `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    as_of: Timestamp,
    classes: Vec<Vec<ClassMember>>,
    lookup: BTreeMap<PersonId, (u32, Timestamp)>,
}

impl Classification {
    /// Builds a classification from explicit classes. Members are sorted by
    /// person id; a person may appear in at most one class.
    pub fn from_classes(as_of: Timestamp, mut classes: Vec<Vec<ClassMember>>) -> Result<Self> {
        let mut lookup = BTreeMap::new();
        for (d, class) in classes.iter_mut().enumerate() {
            class.sort_by(|a, b| a.person.cmp(&b.person));
            for m in class.iter() {
                if lookup.insert(m.person.clone(), (d as u32, m.contact_ts)).is_some() {
                    return Err(Error::invalid(format!("{} appears in two classes", m.person)));
                }
            }
        }
        Ok(Classification { as_of, classes, lookup })
    }

    pub fn as_of(&self) -> Timestamp {
        self.as_of
    }

    pub fn classes(&self) -> &[Vec<ClassMember>] {
        &self.classes
    }

    pub fn class(&self, d: usize) -> &[ClassMember] {
        self.classes.get(d).map_or(&[], |c| c.as_slice())
    }

    /// Number of classes including class 0.
    pub fn depth(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, person: &PersonId) -> Option<u32> {
        self.lookup.get(person).map(|(d, _)| *d)
    }

    pub fn contact_ts(&self, person: &PersonId) -> Option<Timestamp> {
        self.lookup.get(person).map(|(_, t)| *t)
    }

    pub fn seeds(&self) -> &[ClassMember] {
        self.class(0)
    }

    /// All classified persons outside class 0.
    pub fn suspects(&self) -> impl Iterator<Item = &ClassMember> {
        self.classes.iter().skip(1).flatten()
    }

    pub fn suspect_count(&self) -> usize {
        self.classes.iter().skip(1).map(Vec::len).sum()
    }

    /// Class ids keyed by person.
    pub fn as_map(&self) -> BTreeMap<&PersonId, u32> {
        self.lookup.iter().map(|(p, (d, _))| (p, *d)).collect()
    }
}

/// Every person `u` meets within the investigation window, with the earliest
/// qualifying contact time. When `not_before` is set, only contacts at or
/// after it count.
pub(crate) fn contacts_of(
    snap: &StoreSnapshot,
    u: u32,
    cfg: &InvestigationConfig,
    not_before: Option<i64>,
) -> Vec<(u32, i64)> {
    let cd = cfg.current_date.secs();
    let ip = cfg.incubation_period_s;
    let prox = cfg.proximity;
    // A contact happens at the later of the two observation times, so an
    // observation up to Δt older than the window can still take part.
    let oldest = cd - ip - prox.delta_t_s();
    let points = snap.raw_points();
    let mut found: BTreeMap<u32, i64> = BTreeMap::new();
    for p in snap.raw_person_points(u) {
        if p.time < oldest {
            continue;
        }
        snap.for_each_contact(Some(u), p.lat, p.lon, p.time, &prox, |j| {
            let q = &points[j as usize];
            let t = p.time.max(q.time);
            if cd - t > ip || t > cd || not_before.is_some_and(|nb| t < nb) {
                return;
            }
            found
                .entry(q.person)
                .and_modify(|best| *best = (*best).min(t))
                .or_insert(t);
        });
    }
    found.into_iter().collect()
}

/// Layered multi-source BFS over the contact graph.
pub fn classify_suspects(snap: &StoreSnapshot, cfg: &InvestigationConfig) -> Result<Classification> {
    cfg.check_snapshot(snap)?;
    let mut assigned: Vec<Option<(u32, i64)>> = vec![None; snap.persons().len()];
    let mut frontier: Vec<u32> = Vec::new();
    let mut classes: Vec<Vec<ClassMember>> = Vec::new();

    let mut seeds = Vec::new();
    for rec in snap.active_patients() {
        let i = snap
            .person_index(&rec.person)
            .expect("patients are always part of the snapshot");
        assigned[i as usize] = Some((0, rec.confirmed_at.secs()));
        frontier.push(i);
        seeds.push(ClassMember {
            person: rec.person.clone(),
            contact_ts: rec.confirmed_at,
        });
    }
    if seeds.is_empty() {
        return Err(Error::NoPatients);
    }
    classes.push(seeds);

    let mut d = 0u32;
    while !frontier.is_empty() {
        d += 1;
        let reached: Vec<Vec<(u32, i64)>> = frontier
            .par_iter()
            .map(|&u| {
                let not_before = if cfg.causal_ordering && d > 1 {
                    assigned[u as usize].map(|(_, t)| t)
                } else {
                    None
                };
                contacts_of(snap, u, cfg, not_before)
            })
            .collect();
        let mut next: BTreeMap<u32, i64> = BTreeMap::new();
        for (v, t) in reached.into_iter().flatten() {
            if assigned[v as usize].is_some() {
                continue;
            }
            next.entry(v).and_modify(|best| *best = (*best).min(t)).or_insert(t);
        }
        if next.is_empty() {
            break;
        }
        let mut class = Vec::with_capacity(next.len());
        for (&v, &t) in &next {
            assigned[v as usize] = Some((d, t));
            class.push(ClassMember {
                person: snap.person_id(v).clone(),
                contact_ts: Timestamp::new(t).expect("contact times come from stored points"),
            });
        }
        classes.push(class);
        frontier = next.into_keys().collect();
    }

    Classification::from_classes(snap.as_of(), classes)
}
