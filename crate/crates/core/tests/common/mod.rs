#![allow(dead_code)]

pub mod oracle;

use contrace_core::{GeoPoint, PersonId, StoreSnapshot, Timestamp, TrajectoryPoint};
use contrace_core::{PatientRecord, PatientStatus, ProximityConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use oracle::{Params, Pt};

/// A random small world: a lattice of sites 20 m apart, optionally jittered,
/// so exact co-locations and near misses both occur.
pub struct Instance {
    pub snap: StoreSnapshot,
    pub params: Params,
    pub causal: bool,
}

pub fn random_instance(rng: &mut ChaCha8Rng, allow_causal: bool) -> Instance {
    let persons = rng.random_range(2..=50usize);
    let n = rng.random_range(1..=500usize);
    let base = GeoPoint::new(rng.random_range(-60.0..60.0), rng.random_range(-170.0..170.0)).unwrap();
    let horizon = 4 * 86_400;
    let mut pts = Vec::with_capacity(n);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..n {
        let p = rng.random_range(0..persons);
        let t = rng.random_range(0..horizon / 60) * 60;
        if !seen.insert((p, t)) {
            continue;
        }
        let (i, j) = (rng.random_range(0..6), rng.random_range(0..6));
        let mut loc = base.offset_m(20.0 * i as f64, 20.0 * j as f64);
        if rng.random_bool(0.5) {
            loc = loc.offset_m(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        }
        pts.push(TrajectoryPoint::new(
            PersonId::new(format!("u{p}")).unwrap(),
            loc,
            Timestamp::new(t).unwrap(),
        ));
    }
    let eps = if rng.random_bool(0.2) {
        0.0
    } else {
        rng.random_range(0.0..50.0)
    };
    let dt = if rng.random_bool(0.2) {
        0
    } else {
        rng.random_range(0..=3_600)
    };
    let cd = rng.random_range(horizon / 2..=horizon);
    let ip = rng.random_range(3_600..=3 * 86_400);
    let n_patients = rng.random_range(1..=3usize);
    let patients = (0..n_patients)
        .map(|_| {
            let rec = PatientRecord {
                person: PersonId::new(format!("u{}", rng.random_range(0..persons))).unwrap(),
                status: PatientStatus::Active,
                confirmed_at: Timestamp::new(rng.random_range(0..=cd)).unwrap(),
            };
            (rec.person.clone(), rec)
        })
        .collect::<std::collections::BTreeMap<_, _>>()
        .into_values()
        .collect::<Vec<PatientRecord>>();
    let proximity = ProximityConfig::new(eps, dt).unwrap();
    let snap = StoreSnapshot::from_points(&pts, patients, Timestamp::new(cd).unwrap(), proximity).unwrap();
    Instance {
        snap,
        params: Params { eps, dt, cd, ip },
        causal: allow_causal && rng.random_bool(0.3),
    }
}

pub fn oracle_points(snap: &StoreSnapshot) -> Vec<Pt> {
    snap.points()
        .map(|p| Pt {
            person: p.person.to_string(),
            lat: p.loc.lat(),
            lon: p.loc.lon(),
            t: p.time.secs(),
        })
        .collect()
}

pub fn oracle_seeds(snap: &StoreSnapshot) -> Vec<(String, i64)> {
    snap.active_patients()
        .map(|r| (r.person.to_string(), r.confirmed_at.secs()))
        .collect()
}
