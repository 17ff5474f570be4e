//! Synthetic workloads shared by the benchmarks.

use contrace_core::{Area, GeoPoint, PatientRecord, PatientStatus, PersonId, ProximityConfig};
use contrace_core::{StoreSnapshot, Timestamp, TrajectoryPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const START: i64 = 1_700_006_400;

/// `persons` people reporting every 300 s for `days` days inside a 10 km
/// square; `poi_share` of the samples sit near one of `pois` hotspots.
pub fn city(persons: usize, days: i64, pois: usize, poi_share: f64, seed: u64) -> (Vec<TrajectoryPoint>, Vec<Area>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = GeoPoint::new(48.80, 2.25).unwrap();
    let hotspots: Vec<Area> = (0..pois)
        .map(|i| {
            let c = base.offset_m(rng.random_range(0.0..10_000.0), rng.random_range(0.0..10_000.0));
            Area::new(format!("poi{i}"), c, 25.0).unwrap()
        })
        .collect();
    let mut pts = Vec::with_capacity(persons * days as usize * 288);
    for p in 0..persons {
        let id = PersonId::new(format!("b{p:05}")).unwrap();
        for k in 0..days * 288 {
            let loc = if !hotspots.is_empty() && rng.random_bool(poi_share) {
                let h = &hotspots[rng.random_range(0..hotspots.len())];
                h.center
                    .offset_m(rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0))
            } else {
                base.offset_m(rng.random_range(0.0..10_000.0), rng.random_range(0.0..10_000.0))
            };
            pts.push(TrajectoryPoint::new(
                id.clone(),
                loc,
                Timestamp::new(START + 300 * k).unwrap(),
            ));
        }
    }
    (pts, hotspots)
}

/// Snapshot of `points` at the end of the period with the first
/// `patients` persons confirmed.
pub fn snapshot(points: &[TrajectoryPoint], days: i64, patients: usize) -> StoreSnapshot {
    let cd = Timestamp::new(START + days * 86_400).unwrap();
    let mut seen = Vec::new();
    for p in points {
        if seen.len() == patients {
            break;
        }
        if !seen.contains(&p.person) {
            seen.push(p.person.clone());
        }
    }
    let recs = seen
        .into_iter()
        .map(|person| PatientRecord {
            person,
            status: PatientStatus::Active,
            confirmed_at: cd,
        })
        .collect();
    StoreSnapshot::from_points(points, recs, cd, ProximityConfig::default()).unwrap()
}
