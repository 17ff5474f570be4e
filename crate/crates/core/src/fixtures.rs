//! The five-person example log used throughout tests, benches and the CLI
//! demo data.
//!
//! Symbolic coordinates `c1..c6` are mapped to points 1 km apart and times
//! `t1..t6` to hours, so with ε = 0 and Δt = 0 co-location reduces to exact
//! `(c, t)` equality.

use crate::geo::{GeoPoint, PersonId, ProximityConfig, Timestamp, TrajectoryPoint};
use crate::store::{PatientRecord, PatientStatus, StoreSnapshot};

pub const SAMPLE_BASE_TS: i64 = 1_600_000_000;

/// `(person, c, t)` rows, in log order.
pub const SAMPLE_ROWS: [(&str, u32, u32); 10] = [
    ("P1", 1, 1),
    ("P2", 2, 1),
    ("P3", 3, 2),
    ("P1", 4, 3),
    ("P1", 5, 4),
    ("P1", 2, 5),
    ("P3", 2, 5),
    ("P4", 6, 5),
    ("P5", 3, 6),
    ("P1", 3, 6),
];

pub fn sample_coord(k: u32) -> GeoPoint {
    GeoPoint::new(36.70, 3.00)
        .unwrap()
        .offset_m(1_000.0 * k as f64, 0.0)
        .quantized()
}

pub fn sample_time(k: u32) -> Timestamp {
    Timestamp::new(SAMPLE_BASE_TS + 3_600 * k as i64).unwrap()
}

pub fn sample_point(person: &str, c: u32, t: u32) -> TrajectoryPoint {
    TrajectoryPoint::new(PersonId::new(person).unwrap(), sample_coord(c), sample_time(t))
}

pub fn sample_points() -> Vec<TrajectoryPoint> {
    SAMPLE_ROWS.iter().map(|(p, c, t)| sample_point(p, *c, *t)).collect()
}

/// Current date of the example: one hour after `t6`.
pub fn sample_current_date() -> Timestamp {
    sample_time(7)
}

/// Active patient records confirmed at the current date.
pub fn sample_patients(ids: &[&str]) -> Vec<PatientRecord> {
    ids.iter()
        .map(|p| PatientRecord {
            person: PersonId::new(*p).unwrap(),
            status: PatientStatus::Active,
            confirmed_at: sample_current_date(),
        })
        .collect()
}

/// Snapshot of the example log in symbolic mode.
pub fn sample_snapshot(patients: &[&str]) -> StoreSnapshot {
    StoreSnapshot::from_points(
        &sample_points(),
        sample_patients(patients),
        sample_current_date(),
        ProximityConfig::symbolic(),
    )
    .unwrap()
}
