//! Geographic and temporal primitives.
//!
//! Every algorithm in the crate reduces "were these two people at the same
//! place at the same time" to [`colocated`]: an ε-ball in space (haversine
//! on a sphere) combined with an inclusive Δt tolerance in time.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by every distance computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters per degree of latitude on the sphere.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// Stored coordinate precision (6 decimals).
pub const MICRO: f64 = 1_000_000.0;

pub const MAX_PERSON_ID_LEN: usize = 64;
pub const MAX_EPSILON_M: f64 = 1_000.0;
pub const MAX_DELTA_T_S: i64 = 86_400;
pub const MAX_AREA_RADIUS_M: f64 = 10_000.0;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PersonId(String);

impl PersonId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::invalid("person id must not be empty"));
        }
        if id.len() > MAX_PERSON_ID_LEN {
            return Err(Error::invalid(format!(
                "person id longer than {MAX_PERSON_ID_LEN} bytes"
            )));
        }
        Ok(PersonId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PersonId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        PersonId::new(value)
    }
}

impl From<PersonId> for String {
    fn from(value: PersonId) -> Self {
        value.0
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for PersonId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PersonId::new(s)
    }
}

/// Seconds since the UNIX epoch, UTC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Timestamp(i64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn new(secs: i64) -> Result<Self> {
        if secs < 0 {
            return Err(Error::invalid(format!("timestamp {secs} is negative")));
        }
        Ok(Timestamp(secs))
    }

    pub fn secs(self) -> i64 {
        self.0
    }

    /// Absolute difference in seconds.
    pub fn abs_diff(self, other: Timestamp) -> i64 {
        (self.0 - other.0).abs()
    }

    pub fn saturating_sub_secs(self, secs: i64) -> Timestamp {
        Timestamp((self.0 - secs).max(0))
    }

    pub fn add_secs(self, secs: i64) -> Timestamp {
        Timestamp((self.0 + secs).max(0))
    }
}

impl TryFrom<i64> for Timestamp {
    type Error = Error;
    fn try_from(value: i64) -> Result<Self> {
        Timestamp::new(value)
    }
}

impl From<Timestamp> for i64 {
    fn from(value: Timestamp) -> Self {
        value.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// WGS84 latitude/longitude in decimal degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(self) -> f64 {
        self.lat
    }

    pub fn lon(self) -> f64 {
        self.lon
    }

    /// Coordinates in integer micro-degrees, the stored precision.
    pub fn micro(self) -> MicroCoord {
        MicroCoord {
            lat: (self.lat * MICRO).round() as i32,
            lon: (self.lon * MICRO).round() as i32,
        }
    }

    /// The point rounded to stored precision.
    pub fn quantized(self) -> GeoPoint {
        self.micro().to_geo()
    }

    /// Destination after moving `north_m` meters north and `east_m` meters
    /// east, using the local equirectangular approximation. Clamped to the
    /// valid coordinate range.
    pub fn offset_m(self, north_m: f64, east_m: f64) -> GeoPoint {
        let lat = (self.lat + north_m / METERS_PER_DEGREE).clamp(-90.0, 90.0);
        let cos = self.lat.to_radians().cos().max(1e-12);
        let lon = (self.lon + east_m / (METERS_PER_DEGREE * cos)).clamp(-180.0, 180.0);
        GeoPoint { lat, lon }
    }
}

/// Micro-degree coordinates. Two points are "the same place" for
/// duplicate detection iff their `MicroCoord`s are equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MicroCoord {
    pub lat: i32,
    pub lon: i32,
}

impl MicroCoord {
    pub fn to_geo(self) -> GeoPoint {
        GeoPoint {
            lat: self.lat as f64 / MICRO,
            lon: self.lon as f64 / MICRO,
        }
    }
}

/// Fixed 6-decimal rendering of a micro-degree value, exact (no float
/// formatting involved).
pub fn format_micro(v: i32) -> String {
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    format!("{sign}{}.{:06}", a / 1_000_000, a % 1_000_000)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub person: PersonId,
    pub loc: GeoPoint,
    pub time: Timestamp,
}

impl TrajectoryPoint {
    pub fn new(person: PersonId, loc: GeoPoint, time: Timestamp) -> Self {
        TrajectoryPoint { person, loc, time }
    }
}

/// A predefined public area: a circle around `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub area_id: String,
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl Area {
    pub fn new(area_id: impl Into<String>, center: GeoPoint, radius_m: f64) -> Result<Self> {
        let area_id = area_id.into();
        if area_id.is_empty() {
            return Err(Error::invalid("area id must not be empty"));
        }
        if !(radius_m > 0.0 && radius_m <= MAX_AREA_RADIUS_M) {
            return Err(Error::invalid(format!(
                "area radius {radius_m} outside (0, {MAX_AREA_RADIUS_M}]"
            )));
        }
        Ok(Area {
            area_id,
            center,
            radius_m,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityConfig {
    epsilon_m: f64,
    delta_t_s: i64,
}

impl ProximityConfig {
    pub fn new(epsilon_m: f64, delta_t_s: i64) -> Result<Self> {
        if !(0.0..=MAX_EPSILON_M).contains(&epsilon_m) {
            return Err(Error::invalid(format!(
                "epsilon {epsilon_m} outside [0, {MAX_EPSILON_M}]"
            )));
        }
        if !(0..=MAX_DELTA_T_S).contains(&delta_t_s) {
            return Err(Error::invalid(format!(
                "delta_t {delta_t_s} outside [0, {MAX_DELTA_T_S}]"
            )));
        }
        Ok(ProximityConfig { epsilon_m, delta_t_s })
    }

    /// Exact coordinate and time equality.
    pub fn symbolic() -> Self {
        ProximityConfig {
            epsilon_m: 0.0,
            delta_t_s: 0,
        }
    }

    pub fn epsilon_m(&self) -> f64 {
        self.epsilon_m
    }

    pub fn delta_t_s(&self) -> i64 {
        self.delta_t_s
    }
}

impl Default for ProximityConfig {
    fn default() -> Self {
        ProximityConfig {
            epsilon_m: 2.0,
            delta_t_s: 300,
        }
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_deg(a.lat, a.lon, b.lat, b.lon)
}

#[inline]
pub(crate) fn haversine_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let p1 = lat1.to_radians();
    let p2 = lat2.to_radians();
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[inline]
pub(crate) fn within(lat1: f64, lon1: f64, t1: i64, lat2: f64, lon2: f64, t2: i64, cfg: &ProximityConfig) -> bool {
    (t1 - t2).abs() <= cfg.delta_t_s && haversine_deg(lat1, lon1, lat2, lon2) <= cfg.epsilon_m
}

/// Whether two observations of different persons count as a contact.
pub fn colocated(p: &TrajectoryPoint, q: &TrajectoryPoint, cfg: &ProximityConfig) -> Result<bool> {
    if p.person == q.person {
        return Err(Error::SamePerson(p.person.clone()));
    }
    Ok(within(
        p.loc.lat, p.loc.lon, p.time.0, q.loc.lat, q.loc.lon, q.time.0, cfg,
    ))
}

/// Radius membership, boundary inclusive.
pub fn area_contains(area: &Area, loc: GeoPoint) -> bool {
    haversine(area.center, loc) <= area.radius_m
}
