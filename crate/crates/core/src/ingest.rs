//! Pre-storage filtering and normalisation of collected data.
//!
//! Two collection shapes reach the store: individual location reports and
//! building entry/exit intervals. Intervals are expanded into points at the
//! building centre, and everything is passed through the exclusion-zone
//! mask before it is stored.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine, Area, GeoPoint, PersonId, Timestamp, TrajectoryPoint};
use crate::store::io::{check_header, line_of, parse_field, read_jsonl};

pub const ZONES_HEADER: [&str; 4] = ["zone_id", "lat", "lon", "radius_m"];
pub const AREAS_HEADER: [&str; 4] = ["area_id", "lat", "lon", "radius_m"];
pub const INTERVALS_HEADER: [&str; 4] = ["person_id", "area_id", "entry_ts", "exit_ts"];

/// A circle whose observations carry no contact value (roads, highways).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionZone {
    pub zone_id: String,
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl ExclusionZone {
    pub fn new(zone_id: impl Into<String>, center: GeoPoint, radius_m: f64) -> Result<Self> {
        if !(radius_m > 0.0 && radius_m.is_finite()) {
            return Err(Error::invalid(format!("zone radius {radius_m} must be > 0")));
        }
        Ok(ExclusionZone {
            zone_id: zone_id.into(),
            center,
            radius_m,
        })
    }

    pub fn contains(&self, loc: GeoPoint) -> bool {
        haversine(self.center, loc) <= self.radius_m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterDecision<'a> {
    Keep,
    Drop(&'a str),
}

/// Drops the point if it lies in any zone (boundary inclusive); reports the
/// first matching zone.
pub fn filter_point<'z>(p: &TrajectoryPoint, zones: &'z [ExclusionZone]) -> FilterDecision<'z> {
    zones
        .iter()
        .find(|z| z.contains(p.loc))
        .map_or(FilterDecision::Keep, |z| FilterDecision::Drop(&z.zone_id))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub kept: usize,
    pub dropped: usize,
}

/// Applies [`filter_point`] to a batch, keeping survivors in input order.
pub fn filter_points(points: Vec<TrajectoryPoint>, zones: &[ExclusionZone]) -> (Vec<TrajectoryPoint>, FilterStats) {
    if zones.is_empty() {
        let kept = points.len();
        return (points, FilterStats { kept, dropped: 0 });
    }
    let before = points.len();
    let kept: Vec<_> = points
        .into_iter()
        .filter(|p| filter_point(p, zones) == FilterDecision::Keep)
        .collect();
    let stats = FilterStats {
        kept: kept.len(),
        dropped: before - kept.len(),
    };
    (kept, stats)
}

/// A building stay: `person` was inside `area` from `entry` to `exit`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalRecord {
    pub person: PersonId,
    pub area: Area,
    pub entry: Timestamp,
    pub exit: Timestamp,
}

impl IntervalRecord {
    pub fn new(person: PersonId, area: Area, entry: Timestamp, exit: Timestamp) -> Result<Self> {
        if entry >= exit {
            return Err(Error::invalid(format!(
                "interval entry {entry} must precede exit {exit}"
            )));
        }
        Ok(IntervalRecord {
            person,
            area,
            entry,
            exit,
        })
    }
}

/// Points at the area centre at `entry, entry + Δt, ...` plus `exit`.
/// A zero Δt samples every second.
pub fn expand_interval(rec: &IntervalRecord, delta_t_s: i64) -> Vec<TrajectoryPoint> {
    let step = delta_t_s.max(1);
    let (entry, exit) = (rec.entry.secs(), rec.exit.secs());
    let mut out: Vec<TrajectoryPoint> = (entry..=exit)
        .step_by(step as usize)
        .map(|t| TrajectoryPoint::new(rec.person.clone(), rec.area.center, Timestamp::new(t).unwrap()))
        .collect();
    if (exit - entry) % step != 0 {
        out.push(TrajectoryPoint::new(rec.person.clone(), rec.area.center, rec.exit));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceReportConfig {
    /// Minimum spacing between two reports, seconds.
    pub report_period_x_s: i64,
    /// Movement at or below this distance counts as stationary, meters.
    pub stationary_radius_y_m: f64,
}

impl DeviceReportConfig {
    pub fn new(report_period_x_s: i64, stationary_radius_y_m: f64) -> Result<Self> {
        if report_period_x_s < 1 {
            return Err(Error::invalid("report period must be > 0"));
        }
        if !(stationary_radius_y_m >= 0.0 && stationary_radius_y_m.is_finite()) {
            return Err(Error::invalid("stationary radius must be >= 0"));
        }
        Ok(DeviceReportConfig {
            report_period_x_s,
            stationary_radius_y_m,
        })
    }
}

impl Default for DeviceReportConfig {
    fn default() -> Self {
        DeviceReportConfig {
            report_period_x_s: 300,
            stationary_radius_y_m: 2.0,
        }
    }
}

/// Device-side suppression of stationary reports for one person's stream.
///
/// A point is emitted when nothing has been emitted yet, or when it is more
/// than `y` meters from the last emitted point and at least `x` seconds after
/// it.
pub fn dedup_stationary(stream: &[TrajectoryPoint], cfg: &DeviceReportConfig) -> Result<Vec<TrajectoryPoint>> {
    let mut out: Vec<TrajectoryPoint> = Vec::new();
    for (i, p) in stream.iter().enumerate() {
        if i > 0 {
            let prev = &stream[i - 1];
            if p.person != prev.person {
                return Err(Error::invalid("dedup_stationary expects a single person's stream"));
            }
            if p.time < prev.time {
                return Err(Error::UnsortedStream(p.time));
            }
        }
        let emit = match out.last() {
            None => true,
            Some(last) => {
                haversine(last.loc, p.loc) > cfg.stationary_radius_y_m
                    && p.time.secs() - last.time.secs() >= cfg.report_period_x_s
            }
        };
        if emit {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn read_circles(r: impl Read, path: &str, header: &[&str]) -> Result<Vec<(String, GeoPoint, f64, u64)>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, header, path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id: String = parse_field(&rec, 0, header[0], path)?;
        let lat = parse_field(&rec, 1, "lat", path)?;
        let lon = parse_field(&rec, 2, "lon", path)?;
        let radius: f64 = parse_field(&rec, 3, "radius_m", path)?;
        let center = GeoPoint::new(lat, lon).map_err(|e| at(e, path, line))?;
        out.push((id, center, radius, line));
    }
    Ok(out)
}

fn at(e: Error, path: &str, line: u64) -> Error {
    match e {
        Error::Invalid(message) => Error::Parse {
            path: path.to_string(),
            line,
            message,
        },
        other => other,
    }
}

/// Zones CSV: `zone_id,lat,lon,radius_m`.
pub fn read_zones_csv(r: impl Read, path: &str) -> Result<Vec<ExclusionZone>> {
    read_circles(r, path, &ZONES_HEADER)?
        .into_iter()
        .map(|(id, c, r, line)| ExclusionZone::new(id, c, r).map_err(|e| at(e, path, line)))
        .collect()
}

pub fn read_zones_file(path: &Path) -> Result<Vec<ExclusionZone>> {
    read_zones_csv(File::open(path)?, &path.display().to_string())
}

/// Areas CSV: `area_id,lat,lon,radius_m`.
pub fn read_areas_csv(r: impl Read, path: &str) -> Result<Vec<Area>> {
    read_circles(r, path, &AREAS_HEADER)?
        .into_iter()
        .map(|(id, c, r, line)| Area::new(id, c, r).map_err(|e| at(e, path, line)))
        .collect()
}

pub fn read_areas_file(path: &Path) -> Result<Vec<Area>> {
    read_areas_csv(File::open(path)?, &path.display().to_string())
}

pub fn write_areas_csv<'a>(w: impl std::io::Write, areas: impl Iterator<Item = &'a Area>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(AREAS_HEADER)?;
    for a in areas {
        let m = a.center.micro();
        wtr.write_record([
            a.area_id.clone(),
            crate::geo::format_micro(m.lat),
            crate::geo::format_micro(m.lon),
            a.radius_m.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Wire shape of one interval; `area_id` refers to a registered area.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub person_id: String,
    pub area_id: String,
    pub entry_ts: i64,
    pub exit_ts: i64,
}

impl IntervalRow {
    pub fn resolve(&self, areas: &HashMap<String, Area>) -> Result<IntervalRecord> {
        let area = areas
            .get(&self.area_id)
            .ok_or_else(|| Error::invalid(format!("unknown area {}", self.area_id)))?;
        IntervalRecord::new(
            PersonId::new(self.person_id.clone())?,
            area.clone(),
            Timestamp::new(self.entry_ts)?,
            Timestamp::new(self.exit_ts)?,
        )
    }
}

/// Interval CSV: `person_id,area_id,entry_ts,exit_ts`.
pub fn read_intervals_csv(r: impl Read, path: &str) -> Result<Vec<IntervalRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &INTERVALS_HEADER, path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(IntervalRow {
            person_id: parse_field(&rec, 0, "person_id", path)?,
            area_id: parse_field(&rec, 1, "area_id", path)?,
            entry_ts: parse_field(&rec, 2, "entry_ts", path)?,
            exit_ts: parse_field(&rec, 3, "exit_ts", path)?,
        });
    }
    Ok(out)
}

pub fn read_intervals_jsonl(r: impl Read, path: &str) -> Result<Vec<IntervalRow>> {
    Ok(read_jsonl(r, path)?.into_iter().map(|(_, row)| row).collect())
}

pub fn read_intervals_file(path: &Path) -> Result<Vec<IntervalRow>> {
    let name = path.display().to_string();
    let file = File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") | Some("ndjson") => read_intervals_jsonl(file, &name),
        _ => read_intervals_csv(file, &name),
    }
}

pub fn write_intervals_csv<'a>(w: impl std::io::Write, rows: impl Iterator<Item = &'a IntervalRow>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(INTERVALS_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.person_id.clone(),
            r.area_id.clone(),
            r.entry_ts.to_string(),
            r.exit_ts.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Resolves, expands and filters a set of raw reports into storable points.
pub fn prepare_batch(
    points: Vec<TrajectoryPoint>,
    intervals: &[IntervalRow],
    areas: &HashMap<String, Area>,
    zones: &[ExclusionZone],
    delta_t_s: i64,
) -> Result<(Vec<TrajectoryPoint>, FilterStats)> {
    let mut all = points;
    for row in intervals {
        all.extend(expand_interval(&row.resolve(areas)?, delta_t_s));
    }
    Ok(filter_points(all, zones))
}
