use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{within, MicroCoord, PersonId, ProximityConfig, Timestamp, TrajectoryPoint};

use super::index::GridIndex;
use super::{io, PatientRecord, PatientStatus};

#[derive(Clone, Copy, Debug)]
pub(crate) struct SnapPoint {
    pub person: u32,
    pub time: i64,
    pub lat: f64,
    pub lon: f64,
    pub micro: MicroCoord,
}

/// Immutable view of the store at a cutoff time.
///
/// Persons are numbered in id order and points are sorted by (person, time),
/// so every derived output is independent of ingest order.
#[derive(Clone, Debug)]
pub struct StoreSnapshot {
    as_of: Timestamp,
    proximity: ProximityConfig,
    persons: Vec<PersonId>,
    lookup: HashMap<PersonId, u32>,
    points: Vec<SnapPoint>,
    ranges: Vec<Range<usize>>,
    patients: BTreeMap<PersonId, PatientRecord>,
    index: GridIndex,
}

impl StoreSnapshot {
    /// `tracks` must be ordered by person id with each track ordered by time.
    pub(crate) fn from_sorted_tracks(
        tracks: impl Iterator<Item = (PersonId, Vec<(i64, MicroCoord)>)>,
        patients: Vec<PatientRecord>,
        as_of: Timestamp,
        proximity: ProximityConfig,
    ) -> Self {
        let mut by_person: BTreeMap<PersonId, Vec<(i64, MicroCoord)>> = BTreeMap::new();
        for (p, pts) in tracks {
            if !pts.is_empty() {
                by_person.insert(p, pts);
            }
        }
        for rec in &patients {
            by_person.entry(rec.person.clone()).or_default();
        }
        let mut persons = Vec::with_capacity(by_person.len());
        let mut points = Vec::new();
        let mut ranges = Vec::with_capacity(by_person.len());
        for (i, (person, pts)) in by_person.into_iter().enumerate() {
            let start = points.len();
            for (t, c) in pts {
                let g = c.to_geo();
                points.push(SnapPoint {
                    person: i as u32,
                    time: t,
                    lat: g.lat(),
                    lon: g.lon(),
                    micro: c,
                });
            }
            ranges.push(start..points.len());
            persons.push(person);
        }
        let lookup = persons.iter().enumerate().map(|(i, p)| (p.clone(), i as u32)).collect();
        let index = GridIndex::build(&proximity, points.iter().map(|p| (p.lat, p.lon, p.time)));
        StoreSnapshot {
            as_of,
            proximity,
            persons,
            lookup,
            points,
            ranges,
            patients: patients.into_iter().map(|r| (r.person.clone(), r)).collect(),
            index,
        }
    }

    /// Builds a snapshot directly from points and patient records. Points
    /// after `as_of` and patients confirmed after `as_of` are dropped;
    /// duplicate and conflicting points are rejected as by the store.
    pub fn from_points(
        points: &[TrajectoryPoint],
        patients: Vec<PatientRecord>,
        as_of: Timestamp,
        proximity: ProximityConfig,
    ) -> Result<Self> {
        let mut store = super::TrajectoryStore::new();
        store.append_points(points)?;
        for rec in patients {
            store.restore_patient(rec);
        }
        Ok(store.snapshot(as_of, proximity))
    }

    pub fn as_of(&self) -> Timestamp {
        self.as_of
    }

    pub fn proximity(&self) -> ProximityConfig {
        self.proximity
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Persons with points or patient records, in id order.
    pub fn persons(&self) -> &[PersonId] {
        &self.persons
    }

    pub fn knows(&self, person: &PersonId) -> bool {
        self.lookup.contains_key(person)
    }

    pub fn patients(&self) -> impl Iterator<Item = &PatientRecord> {
        self.patients.values()
    }

    pub fn is_patient(&self, person: &PersonId) -> bool {
        self.patients.contains_key(person)
    }

    pub fn active_patients(&self) -> impl Iterator<Item = &PatientRecord> {
        self.patients.values().filter(|r| r.status == PatientStatus::Active)
    }

    pub fn points(&self) -> impl Iterator<Item = TrajectoryPoint> + '_ {
        self.points.iter().map(|p| self.to_point(p))
    }

    pub fn person_points(&self, person: &PersonId) -> impl Iterator<Item = TrajectoryPoint> + '_ {
        let range = self
            .lookup
            .get(person)
            .map(|&i| self.ranges[i as usize].clone())
            .unwrap_or(0..0);
        self.points[range].iter().map(|p| self.to_point(p))
    }

    fn to_point(&self, p: &SnapPoint) -> TrajectoryPoint {
        TrajectoryPoint::new(
            self.persons[p.person as usize].clone(),
            p.micro.to_geo(),
            Timestamp::new(p.time).unwrap(),
        )
    }

    // Crate-internal accessors used by the investigation engine.

    pub(crate) fn person_index(&self, person: &PersonId) -> Option<u32> {
        self.lookup.get(person).copied()
    }

    pub(crate) fn person_id(&self, i: u32) -> &PersonId {
        &self.persons[i as usize]
    }

    pub(crate) fn raw_points(&self) -> &[SnapPoint] {
        &self.points
    }

    pub(crate) fn raw_person_points(&self, i: u32) -> &[SnapPoint] {
        &self.points[self.ranges[i as usize].clone()]
    }

    /// Calls `f` with the id of every stored point of another person that is
    /// co-located with `(person, lat, lon, t)` under `cfg`.
    pub(crate) fn for_each_contact(
        &self,
        person: Option<u32>,
        lat: f64,
        lon: f64,
        t: i64,
        cfg: &ProximityConfig,
        mut f: impl FnMut(u32),
    ) {
        let visit = |j: u32| {
            let q = &self.points[j as usize];
            if Some(q.person) != person && within(lat, lon, t, q.lat, q.lon, q.time, cfg) {
                f(j);
            }
        };
        if self.index.covers(cfg) {
            self.index.probe(lat, lon, t, visit);
        } else {
            (0..self.points.len() as u32).for_each(visit);
        }
    }

    /// All stored points of other persons co-located with `p`, ordered by
    /// person id then time.
    pub fn candidates_near(&self, p: &TrajectoryPoint, cfg: &ProximityConfig) -> Vec<TrajectoryPoint> {
        let me = self.lookup.get(&p.person).copied();
        let mut ids = Vec::new();
        self.for_each_contact(me, p.loc.lat(), p.loc.lon(), p.time.secs(), cfg, |j| ids.push(j));
        ids.sort_unstable();
        ids.into_iter()
            .map(|j| self.to_point(&self.points[j as usize]))
            .collect()
    }

    /// Writes `points.csv`, `patients.csv` and `meta` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        io::write_points_csv(fs::File::create(dir.join("points.csv"))?, self.points())?;
        io::write_patients_csv(fs::File::create(dir.join("patients.csv"))?, self.patients.values())?;
        let mut meta = fs::File::create(dir.join("meta"))?;
        writeln!(meta, "as_of={}", self.as_of)?;
        writeln!(meta, "epsilon={}", self.proximity.epsilon_m())?;
        writeln!(meta, "delta_t={}", self.proximity.delta_t_s())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta");
        let meta = read_key_values(&meta_path)?;
        let get = |k: &str| {
            meta.get(k).ok_or_else(|| Error::Parse {
                path: meta_path.display().to_string(),
                line: 0,
                message: format!("missing key {k}"),
            })
        };
        let bad = |k: &str| Error::Parse {
            path: meta_path.display().to_string(),
            line: 0,
            message: format!("bad value for {k}"),
        };
        let as_of = Timestamp::new(get("as_of")?.parse().map_err(|_| bad("as_of"))?)?;
        let proximity = ProximityConfig::new(
            get("epsilon")?.parse().map_err(|_| bad("epsilon"))?,
            get("delta_t")?.parse().map_err(|_| bad("delta_t"))?,
        )?;
        let points = io::read_points_file(&dir.join("points.csv"))?;
        let patients = io::read_patients_file(&dir.join("patients.csv"))?;
        Self::from_points(&points, patients, as_of, proximity)
    }
}

/// Parses a `key=value` file; blank lines and `#` comments are skipped.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = fs::File::open(path)?;
    let mut out = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: n as u64 + 1,
                message: "expected key=value".into(),
            });
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geo::{colocated, GeoPoint};
    use crate::store::TrajectoryStore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(snap: &StoreSnapshot, p: &TrajectoryPoint, cfg: &ProximityConfig) -> Vec<TrajectoryPoint> {
        snap.points()
            .filter(|q| q.person != p.person && colocated(p, q, cfg).unwrap())
            .collect()
    }

    #[test]
    fn sample_candidates() {
        let snap = fixtures::sample_snapshot(&[]);
        let p = fixtures::sample_point("P3", 2, 5);
        let got = snap.candidates_near(&p, &ProximityConfig::symbolic());
        assert_eq!(got, vec![fixtures::sample_point("P1", 2, 5)]);
    }

    #[test]
    fn empty_store_has_no_candidates() {
        let snap = TrajectoryStore::new().snapshot(Timestamp::new(100).unwrap(), ProximityConfig::default());
        let p = fixtures::sample_point("P3", 2, 5);
        assert!(snap.candidates_near(&p, &ProximityConfig::default()).is_empty());
    }

    #[test]
    fn index_matches_brute_force_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = ProximityConfig::new(25.0, 120).unwrap();
        let base = GeoPoint::new(48.85, 2.35).unwrap();
        let pts: Vec<_> = (0..1_000)
            .map(|i| {
                let loc = base.offset_m(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
                TrajectoryPoint::new(
                    PersonId::new(format!("p{}", i % 40)).unwrap(),
                    loc,
                    // i / 40 keeps each person's timestamps distinct.
                    Timestamp::new(rng.random_range(0..100) * 25 + (i / 40) as i64 % 25).unwrap(),
                )
            })
            .collect();
        let snap = StoreSnapshot::from_points(&pts, vec![], Timestamp::new(10_000).unwrap(), cfg).unwrap();
        for p in snap.points().collect::<Vec<_>>() {
            assert_eq!(snap.candidates_near(&p, &cfg), brute(&snap, &p, &cfg));
        }
    }

    #[test]
    fn wider_query_than_index_falls_back_to_scan() {
        let pts = fixtures::sample_points();
        let snap = StoreSnapshot::from_points(
            &pts,
            vec![],
            Timestamp::new(i64::MAX / 4).unwrap(),
            ProximityConfig::symbolic(),
        )
        .unwrap();
        let wide = ProximityConfig::new(900.0, 86_400).unwrap();
        let p = fixtures::sample_point("P3", 2, 5);
        assert_eq!(snap.candidates_near(&p, &wide), brute(&snap, &p, &wide));
    }

    #[test]
    fn snapshot_excludes_later_points_and_is_immutable() {
        let mut store = TrajectoryStore::new();
        store.append_points(&fixtures::sample_points()).unwrap();
        let cut = fixtures::sample_time(4);
        let snap = store.snapshot(cut, ProximityConfig::symbolic());
        assert!(snap.points().all(|p| p.time <= cut));
        assert_eq!(snap.len(), 5);
        let later = TrajectoryPoint::new(
            PersonId::new("P9").unwrap(),
            fixtures::sample_coord(1),
            fixtures::sample_time(1),
        );
        store.append_points(&[later]).unwrap();
        assert_eq!(snap.len(), 5);
        assert!(!snap.knows(&PersonId::new("P9").unwrap()));
    }

    #[test]
    fn per_person_points_strictly_increase() {
        let snap = fixtures::sample_snapshot(&[]);
        for person in snap.persons() {
            let ts: Vec<_> = snap.person_points(person).map(|p| p.time).collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn save_load_is_bit_exact() {
        let snap = fixtures::sample_snapshot(&["P3"]);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        snap.save(a.path()).unwrap();
        let back = StoreSnapshot::load(a.path()).unwrap();
        back.save(b.path()).unwrap();
        for f in ["points.csv", "patients.csv", "meta"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        assert_eq!(back.points().collect::<Vec<_>>(), snap.points().collect::<Vec<_>>());
        assert_eq!(back.as_of(), snap.as_of());
        assert_eq!(back.proximity(), snap.proximity());
    }
}
