//! Trajectory and patient file formats.
//!
//! * Trajectory CSV: `person_id,lat,lon,ts`, coordinates with exactly six
//!   decimals, LF line endings.
//! * Trajectory JSONL: one `{"person_id", "lat", "lon", "ts"}` object per line.
//! * Patient CSV: `person_id,status,confirmed_at`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{format_micro, GeoPoint, PersonId, Timestamp, TrajectoryPoint};

use super::{PatientRecord, PatientStatus};

pub const POINTS_HEADER: [&str; 4] = ["person_id", "lat", "lon", "ts"];
pub const PATIENTS_HEADER: [&str; 3] = ["person_id", "status", "confirmed_at"];

/// Wire shape of one trajectory point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub person_id: String,
    pub lat: f64,
    pub lon: f64,
    pub ts: i64,
}

impl PointRecord {
    pub fn into_point(self) -> Result<TrajectoryPoint> {
        Ok(TrajectoryPoint::new(
            PersonId::new(self.person_id)?,
            GeoPoint::new(self.lat, self.lon)?,
            Timestamp::new(self.ts)?,
        ))
    }
}

impl From<&TrajectoryPoint> for PointRecord {
    fn from(p: &TrajectoryPoint) -> Self {
        let q = p.loc.quantized();
        PointRecord {
            person_id: p.person.to_string(),
            lat: q.lat(),
            lon: q.lon(),
            ts: p.time.secs(),
        }
    }
}

pub(crate) fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str], path: &str) -> Result<()> {
    let got = rdr.headers()?;
    if got.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    Ok(())
}

pub(crate) fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    path: &str,
) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line: line_of(rec),
            message: format!("bad {name}"),
        })
}

fn with_line<T>(r: Result<T>, path: &str, line: u64) -> Result<T> {
    r.map_err(|e| match e {
        Error::Invalid(message) => Error::Parse {
            path: path.to_string(),
            line,
            message,
        },
        other => other,
    })
}

pub fn write_points_csv(w: impl Write, points: impl Iterator<Item = TrajectoryPoint>) -> Result<()> {
    write_point_rows(w, points, true)
}

/// Data rows only, for appending to an existing trajectory CSV.
pub fn append_points_csv(w: impl Write, points: impl Iterator<Item = TrajectoryPoint>) -> Result<()> {
    write_point_rows(w, points, false)
}

fn write_point_rows(w: impl Write, points: impl Iterator<Item = TrajectoryPoint>, header: bool) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(std::io::BufWriter::new(w));
    if header {
        wtr.write_record(POINTS_HEADER)?;
    }
    for p in points {
        let m = p.loc.micro();
        wtr.write_record([
            p.person.as_str(),
            &format_micro(m.lat),
            &format_micro(m.lon),
            &p.time.secs().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_points_csv(r: impl Read, path: &str) -> Result<Vec<TrajectoryPoint>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &POINTS_HEADER, path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let person: String = parse_field(&rec, 0, "person_id", path)?;
        let lat = parse_field(&rec, 1, "lat", path)?;
        let lon = parse_field(&rec, 2, "lon", path)?;
        let ts = parse_field(&rec, 3, "ts", path)?;
        out.push(with_line(
            PointRecord {
                person_id: person,
                lat,
                lon,
                ts,
            }
            .into_point(),
            path,
            line,
        )?);
    }
    Ok(out)
}

pub fn read_points_jsonl(r: impl Read, path: &str) -> Result<Vec<TrajectoryPoint>> {
    read_jsonl::<PointRecord>(r, path)?
        .into_iter()
        .map(|(line, rec)| with_line(rec.into_point(), path, line))
        .collect()
}

/// Reads a trajectory file; `.jsonl`/`.json` extensions select JSONL.
pub fn read_points_file(path: &Path) -> Result<Vec<TrajectoryPoint>> {
    let name = path.display().to_string();
    let file = File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") | Some("ndjson") => read_points_jsonl(file, &name),
        _ => read_points_csv(file, &name),
    }
}

/// Parses newline-delimited JSON, skipping blank lines. Returns records with
/// their 1-based line numbers.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(r: impl Read, path: &str) -> Result<Vec<(u64, T)>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: n as u64 + 1,
            message: e.to_string(),
        })?;
        out.push((n as u64 + 1, rec));
    }
    Ok(out)
}

pub fn write_patients_csv<'a>(w: impl Write, patients: impl Iterator<Item = &'a PatientRecord>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(PATIENTS_HEADER)?;
    for p in patients {
        wtr.write_record([p.person.as_str(), p.status.as_str(), &p.confirmed_at.secs().to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_patients_csv(r: impl Read, path: &str) -> Result<Vec<PatientRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &PATIENTS_HEADER, path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let person: String = parse_field(&rec, 0, "person_id", path)?;
        let status: PatientStatus = with_line(rec.get(1).unwrap_or("").trim().parse(), path, line)?;
        let ts: i64 = parse_field(&rec, 2, "confirmed_at", path)?;
        out.push(PatientRecord {
            person: with_line(PersonId::new(person), path, line)?,
            status,
            confirmed_at: with_line(Timestamp::new(ts), path, line)?,
        });
    }
    Ok(out)
}

pub fn read_patients_file(path: &Path) -> Result<Vec<PatientRecord>> {
    read_patients_csv(File::open(path)?, &path.display().to_string())
}
