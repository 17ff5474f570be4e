//! Deterministic synthetic mobility world with device reporting and a
//! ground-truth transmission process.
//!
//! Time advances in ticks of the device report period. Each person leaves
//! home in the morning, visits one to four points of interest and returns
//! home; home locations are never reported. Stays at a point of interest are
//! reported as intervals, travel as sampled points that go through the
//! device's stationarity filter.
//!
//! Ground truth is computed on what each device would log (whether or not the
//! person participates), so the engine sees exactly the participants' part of
//! the true contact graph. Consecutive co-located samples of a pair form one
//! episode, and each episode gets a single transmission trial.
//!
//! Random streams are split by purpose so that, for a fixed seed, changing the
//! participation rate or the offline probability does not change the world or
//! the transmission outcome.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{format_micro, Area, GeoPoint, PersonId, ProximityConfig, Timestamp, TrajectoryPoint};
use crate::ingest::{
    dedup_stationary, expand_interval, write_areas_csv, write_intervals_csv, DeviceReportConfig, IntervalRecord,
    IntervalRow,
};
use crate::investigation::{Classification, DAY_S};
use crate::store::io::{write_patients_csv, write_points_csv};
use crate::store::{AppendReceipt, PatientRecord, PatientStatus, StoreSnapshot, TrajectoryStore};

pub const GROUND_TRUTH_HEADER: &str = "source,target,lat,lon,ts";

const STREAM_WORLD: u64 = 0;
const STREAM_PARTICIPATION: u64 = 1;
const STREAM_TRANSMISSION: u64 = 2;
const STREAM_OFFLINE: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Default for BoundingBox {
    fn default() -> Self {
        BoundingBox {
            lat_min: 48.80,
            lat_max: 48.90,
            lon_min: 2.25,
            lon_max: 2.42,
        }
    }
}

impl BoundingBox {
    fn sample(&self, rng: &mut ChaCha8Rng) -> GeoPoint {
        let lat = rng.random_range(self.lat_min..=self.lat_max);
        let lon = rng.random_range(self.lon_min..=self.lon_max);
        GeoPoint::new(lat, lon).expect("bounding box validated").quantized()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub persons: usize,
    pub pois: usize,
    pub days: u32,
    pub seed: u64,
    /// Fraction of persons whose devices report.
    pub participation: f64,
    /// Probability that a device holds back a day's data until the next day.
    pub p_offline: f64,
    pub p_trans: f64,
    pub initial_patients: usize,
    pub report: DeviceReportConfig,
    pub proximity: ProximityConfig,
    pub bbox: BoundingBox,
    /// Radius of the exported point-of-interest areas.
    pub poi_radius_m: f64,
    pub speed_mps: f64,
    /// Midnight of the first simulated day.
    pub start: Timestamp,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            persons: 1_000,
            pois: 30,
            days: 7,
            seed: 7,
            participation: 1.0,
            p_offline: 0.0,
            p_trans: 0.5,
            initial_patients: 3,
            report: DeviceReportConfig::default(),
            proximity: ProximityConfig::default(),
            bbox: BoundingBox::default(),
            poi_radius_m: 25.0,
            speed_mps: 5.0,
            start: Timestamp::new(1_700_006_400).unwrap(),
        }
    }
}

impl SimConfig {
    pub fn participant_count(&self) -> usize {
        (self.participation * self.persons as f64).round() as usize
    }

    pub fn end(&self) -> Timestamp {
        self.start.add_secs(self.days as i64 * DAY_S)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if self.initial_patients < 1 || self.persons < self.initial_patients {
            return Err(Error::invalid("need persons >= initial_patients >= 1"));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(Error::invalid("participation must be in (0, 1]"));
        }
        if self.participant_count() < self.initial_patients {
            return Err(Error::invalid("fewer participants than initial patients"));
        }
        if !prob(self.p_offline) || !prob(self.p_trans) {
            return Err(Error::invalid("probabilities must be in [0, 1]"));
        }
        if self.days < 1 {
            return Err(Error::invalid("days must be >= 1"));
        }
        if self.report.report_period_x_s < 1 {
            return Err(Error::invalid("the simulator needs a report period >= 1 s"));
        }
        let b = &self.bbox;
        if GeoPoint::new(b.lat_min, b.lon_min).is_err()
            || GeoPoint::new(b.lat_max, b.lon_max).is_err()
            || b.lat_min > b.lat_max
            || b.lon_min > b.lon_max
        {
            return Err(Error::invalid("bad bounding box"));
        }
        if !(self.poi_radius_m.is_finite() && self.poi_radius_m > 0.0)
            || !(self.speed_mps > 0.0 && self.speed_mps.is_finite())
        {
            return Err(Error::invalid("poi radius and speed must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stay {
    pub poi: usize,
    pub entry: Timestamp,
    pub exit: Timestamp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub persons: Vec<PersonId>,
    pub homes: Vec<GeoPoint>,
    pub pois: Vec<Area>,
    /// `plans[person][day]`, stays in time order.
    pub plans: Vec<Vec<Vec<Stay>>>,
}

fn person_ids(n: usize) -> Vec<PersonId> {
    let width = (n.saturating_sub(1)).to_string().len().max(4);
    (0..n)
        .map(|i| PersonId::new(format!("p{i:0width$}")).unwrap())
        .collect()
}

fn travel_ticks(from: GeoPoint, to: GeoPoint, cfg: &SimConfig) -> i64 {
    let per_tick = cfg.speed_mps * cfg.report.report_period_x_s as f64;
    ((crate::geo::haversine(from, to) / per_tick).ceil() as i64).max(1)
}

pub fn generate_world(cfg: &SimConfig) -> Result<World> {
    cfg.validate()?;
    let mut r = rng(cfg.seed, STREAM_WORLD);
    let x = cfg.report.report_period_x_s;
    let persons = person_ids(cfg.persons);
    let homes: Vec<GeoPoint> = (0..cfg.persons).map(|_| cfg.bbox.sample(&mut r)).collect();
    let pois: Vec<Area> = (0..cfg.pois)
        .map(|j| Area::new(format!("poi{j:03}"), cfg.bbox.sample(&mut r), cfg.poi_radius_m))
        .collect::<Result<_>>()?;

    let first_dep = (7 * 3_600) / x;
    let last_dep = ((10 * 3_600) / x).max(first_dep);
    let min_stay = (600 + x - 1) / x;
    let max_stay = (7_200 / x).max(min_stay);
    let mut plans = Vec::with_capacity(cfg.persons);
    for home in &homes {
        let mut days = Vec::with_capacity(cfg.days as usize);
        for d in 0..cfg.days as i64 {
            let mut stays = Vec::new();
            if !pois.is_empty() {
                let visits = r.random_range(1..=4usize).min(pois.len());
                let day0 = cfg.start.secs() + d * DAY_S;
                let mut t = day0 + r.random_range(first_dep..=last_dep) * x;
                let mut here = *home;
                let mut prev: Option<usize> = None;
                for _ in 0..visits {
                    let poi = loop {
                        let j = r.random_range(0..pois.len());
                        if Some(j) != prev || pois.len() == 1 {
                            break j;
                        }
                    };
                    if Some(poi) == prev {
                        break;
                    }
                    let entry = t + travel_ticks(here, pois[poi].center, cfg) * x;
                    let exit = entry + r.random_range(min_stay..=max_stay) * x;
                    stays.push(Stay {
                        poi,
                        entry: Timestamp::new(entry)?,
                        exit: Timestamp::new(exit)?,
                    });
                    here = pois[poi].center;
                    prev = Some(poi);
                    t = exit;
                }
            }
            days.push(stays);
        }
        plans.push(days);
    }
    Ok(World {
        persons,
        homes,
        pois,
        plans,
    })
}

/// Positions strictly between leaving `from` at `t0` and arriving at `to`.
fn travel_samples(
    person: &PersonId,
    from: GeoPoint,
    to: GeoPoint,
    t0: i64,
    cfg: &SimConfig,
    out: &mut Vec<TrajectoryPoint>,
) {
    let x = cfg.report.report_period_x_s;
    let n = travel_ticks(from, to, cfg);
    for k in 1..n {
        let f = k as f64 / n as f64;
        let loc = GeoPoint::new(
            from.lat() + f * (to.lat() - from.lat()),
            from.lon() + f * (to.lon() - from.lon()),
        )
        .unwrap()
        .quantized();
        out.push(TrajectoryPoint::new(
            person.clone(),
            loc,
            Timestamp::new(t0 + k * x).unwrap(),
        ));
    }
}

/// What one device logs on one day: filtered travel samples and stays.
#[derive(Clone, Debug, PartialEq)]
struct DayLog {
    points: Vec<TrajectoryPoint>,
    intervals: Vec<IntervalRecord>,
}

fn device_logs(world: &World, cfg: &SimConfig) -> Result<Vec<Vec<DayLog>>> {
    let x = cfg.report.report_period_x_s;
    world
        .persons
        .par_iter()
        .enumerate()
        .map(|(i, person)| {
            let home = world.homes[i];
            let mut stream = Vec::new();
            let mut day_of: BTreeMap<i64, usize> = BTreeMap::new();
            let mut out: Vec<DayLog> = Vec::with_capacity(world.plans[i].len());
            for (d, stays) in world.plans[i].iter().enumerate() {
                let mut travel = Vec::new();
                let mut intervals = Vec::new();
                let mut here = home;
                for s in stays {
                    let area = &world.pois[s.poi];
                    let leg = travel_ticks(here, area.center, cfg);
                    travel_samples(person, here, area.center, s.entry.secs() - leg * x, cfg, &mut travel);
                    intervals.push(IntervalRecord::new(person.clone(), area.clone(), s.entry, s.exit)?);
                    here = area.center;
                }
                if let Some(last) = stays.last() {
                    travel_samples(person, here, home, last.exit.secs(), cfg, &mut travel);
                }
                day_of.extend(travel.iter().map(|p| (p.time.secs(), d)));
                stream.extend(travel);
                out.push(DayLog {
                    points: Vec::new(),
                    intervals,
                });
            }
            // The stationarity filter runs over the device's whole stream.
            for p in dedup_stationary(&stream, &cfg.report)? {
                out[day_of[&p.time.secs()]].points.push(p);
            }
            Ok(out)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transmission {
    pub source: PersonId,
    pub target: PersonId,
    pub loc: GeoPoint,
    pub time: Timestamp,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    /// Ordered by time, then target.
    pub transmissions: Vec<Transmission>,
    pub true_infected: BTreeSet<PersonId>,
    /// Non-seed persons who met an already infected person.
    pub contacts: BTreeSet<PersonId>,
    pub seeds: BTreeSet<PersonId>,
    pub episodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Episode {
    a: usize,
    b: usize,
    start: i64,
    end: i64,
    loc: GeoPoint,
}

/// Co-location episodes over everything the devices log, sorted by
/// `(start, a, b)`.
fn episodes(world: &World, logs: &[Vec<DayLog>], cfg: &SimConfig) -> Result<Vec<Episode>> {
    let dt = cfg.proximity.delta_t_s();
    let mut all = Vec::new();
    for days in logs {
        for day in days {
            all.extend(day.points.iter().cloned());
            for rec in &day.intervals {
                all.extend(expand_interval(rec, dt));
            }
        }
    }
    let end = all.iter().map(|p| p.time).max().unwrap_or(cfg.start);
    let snap = StoreSnapshot::from_points(&all, vec![], end, cfg.proximity)?;
    drop(all);
    let to_world: Vec<usize> = snap
        .persons()
        .iter()
        .map(|p| world.persons.binary_search(p).expect("ids are generated sorted"))
        .collect();

    let raw = snap.raw_points();
    let mut hits: Vec<(usize, usize, i64, GeoPoint)> = (0..snap.persons().len() as u32)
        .into_par_iter()
        .flat_map_iter(|u| {
            let mut found = Vec::new();
            for p in snap.raw_person_points(u) {
                snap.for_each_contact(Some(u), p.lat, p.lon, p.time, &cfg.proximity, |j| {
                    let q = &raw[j as usize];
                    if q.person > u {
                        let loc = if p.time >= q.time { p } else { q };
                        found.push((
                            to_world[u as usize],
                            to_world[q.person as usize],
                            p.time.max(q.time),
                            loc.micro.to_geo(),
                        ));
                    }
                });
            }
            found
        })
        .collect();
    hits.sort_by_key(|x| (x.0, x.1, x.2));
    hits.dedup_by(|x, y| (x.0, x.1, x.2) == (y.0, y.1, y.2));

    let gap = cfg.report.report_period_x_s.max(dt);
    let mut out: Vec<Episode> = Vec::new();
    for (a, b, t, loc) in hits {
        match out.last_mut() {
            Some(e) if e.a == a && e.b == b && t - e.end <= gap => e.end = t,
            _ => out.push(Episode {
                a,
                b,
                start: t,
                end: t,
                loc,
            }),
        }
    }
    out.sort_by_key(|x| (x.start, x.a, x.b));
    Ok(out)
}

/// Earliest-arrival infection times over the successful episodes.
fn transmit(world: &World, eps: &[Episode], seeds: &[usize], cfg: &SimConfig) -> GroundTruth {
    let mut r = rng(cfg.seed, STREAM_TRANSMISSION);
    let n = world.persons.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut all_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in eps.iter().enumerate() {
        all_adj[e.a].push(k);
        all_adj[e.b].push(k);
        if r.random_bool(cfg.p_trans) {
            adj[e.a].push(k);
            adj[e.b].push(k);
        }
    }

    let mut infected_at: Vec<Option<i64>> = vec![None; n];
    let mut source: Vec<Option<(usize, GeoPoint)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let t0 = cfg.start.secs();
    for &s in seeds {
        infected_at[s] = Some(t0);
        heap.push(Reverse((t0, s)));
    }
    while let Some(Reverse((tau, u))) = heap.pop() {
        if infected_at[u] != Some(tau) {
            continue;
        }
        for &k in &adj[u] {
            let e = &eps[k];
            if tau > e.end {
                continue;
            }
            let v = if e.a == u { e.b } else { e.a };
            let arrival = e.start.max(tau);
            if infected_at[v].is_none_or(|cur| arrival < cur) {
                infected_at[v] = Some(arrival);
                source[v] = Some((u, e.loc));
                heap.push(Reverse((arrival, v)));
            }
        }
    }

    let seed_set: BTreeSet<usize> = seeds.iter().copied().collect();
    let mut transmissions: Vec<Transmission> = (0..n)
        .filter_map(|v| {
            let (u, loc) = source[v]?;
            Some(Transmission {
                source: world.persons[u].clone(),
                target: world.persons[v].clone(),
                loc,
                time: Timestamp::new(infected_at[v]?).unwrap(),
            })
        })
        .collect();
    transmissions.sort_by(|a, b| (a.time, &a.target).cmp(&(b.time, &b.target)));

    let mut contacts = BTreeSet::new();
    for e in eps {
        for (u, v) in [(e.a, e.b), (e.b, e.a)] {
            if infected_at[u].is_some_and(|t| t <= e.end) && !seed_set.contains(&v) {
                contacts.insert(world.persons[v].clone());
            }
        }
    }
    GroundTruth {
        transmissions,
        true_infected: (0..n)
            .filter(|&v| infected_at[v].is_some())
            .map(|v| world.persons[v].clone())
            .collect(),
        contacts,
        seeds: seeds.iter().map(|&s| world.persons[s].clone()).collect(),
        episodes: eps.len(),
    }
}

/// One upload from one device.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceBatch {
    /// Day on which the batch reaches the server; `days` is the final flush.
    pub arrival_day: u32,
    pub day: u32,
    pub person: PersonId,
    pub points: Vec<TrajectoryPoint>,
    pub intervals: Vec<IntervalRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub config: SimConfig,
    pub world: World,
    pub participants: BTreeSet<PersonId>,
    /// In arrival order.
    pub batches: Vec<DeviceBatch>,
    /// Initial patients, confirmed at the end of the run.
    pub patients: Vec<PatientRecord>,
    pub ground_truth: GroundTruth,
}

impl SimOutput {
    /// End of the simulated period; the natural investigation date.
    pub fn end(&self) -> Timestamp {
        self.config.end()
    }

    /// Replays every batch in arrival order, then reports the patients.
    pub fn ingest(&self, store: &mut TrajectoryStore) -> Result<AppendReceipt> {
        let mut receipt = AppendReceipt::default();
        for b in &self.batches {
            let mut pts = b.points.clone();
            for rec in &b.intervals {
                pts.extend(expand_interval(rec, self.config.proximity.delta_t_s()));
            }
            receipt += store.append_points(&pts)?;
        }
        for p in &self.patients {
            store.report_patient(p.person.clone(), p.confirmed_at)?;
        }
        Ok(receipt)
    }

    pub fn interval_rows(&self) -> impl Iterator<Item = IntervalRow> + '_ {
        self.batches.iter().flat_map(|b| {
            b.intervals.iter().map(|r| IntervalRow {
                person_id: r.person.to_string(),
                area_id: r.area.area_id.clone(),
                entry_ts: r.entry.secs(),
                exit_ts: r.exit.secs(),
            })
        })
    }

    /// Writes `points.csv`, `intervals.csv`, `areas.csv`, `patients.csv`,
    /// `ground_truth.csv`, `true_contacts.csv` and `world_meta`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_points_csv(
            File::create(dir.join("points.csv"))?,
            self.batches.iter().flat_map(|b| b.points.iter().cloned()),
        )?;
        let rows: Vec<IntervalRow> = self.interval_rows().collect();
        write_intervals_csv(File::create(dir.join("intervals.csv"))?, rows.iter())?;
        write_areas_csv(File::create(dir.join("areas.csv"))?, self.world.pois.iter())?;
        write_patients_csv(File::create(dir.join("patients.csv"))?, self.patients.iter())?;

        let mut w = std::io::BufWriter::new(File::create(dir.join("ground_truth.csv"))?);
        writeln!(w, "{GROUND_TRUTH_HEADER}")?;
        for t in &self.ground_truth.transmissions {
            let m = t.loc.micro();
            writeln!(
                w,
                "{},{},{},{},{}",
                t.source,
                t.target,
                format_micro(m.lat),
                format_micro(m.lon),
                t.time
            )?;
        }
        w.flush()?;

        let mut w = std::io::BufWriter::new(File::create(dir.join("true_contacts.csv"))?);
        writeln!(w, "person_id")?;
        for p in &self.ground_truth.contacts {
            writeln!(w, "{p}")?;
        }
        w.flush()?;

        let c = &self.config;
        let mut w = File::create(dir.join("world_meta"))?;
        writeln!(w, "generator=chacha8")?;
        writeln!(w, "seed={}", c.seed)?;
        writeln!(w, "persons={}", c.persons)?;
        writeln!(w, "pois={}", c.pois)?;
        writeln!(w, "days={}", c.days)?;
        writeln!(w, "participation={}", c.participation)?;
        writeln!(w, "participants={}", self.participants.len())?;
        writeln!(w, "p_offline={}", c.p_offline)?;
        writeln!(w, "p_trans={}", c.p_trans)?;
        writeln!(w, "initial_patients={}", c.initial_patients)?;
        writeln!(w, "report_period_x_s={}", c.report.report_period_x_s)?;
        writeln!(w, "stationary_radius_y_m={}", c.report.stationary_radius_y_m)?;
        writeln!(w, "epsilon={}", c.proximity.epsilon_m())?;
        writeln!(w, "delta_t={}", c.proximity.delta_t_s())?;
        writeln!(w, "bbox_lat_min={}", c.bbox.lat_min)?;
        writeln!(w, "bbox_lat_max={}", c.bbox.lat_max)?;
        writeln!(w, "bbox_lon_min={}", c.bbox.lon_min)?;
        writeln!(w, "bbox_lon_max={}", c.bbox.lon_max)?;
        writeln!(w, "start={}", c.start)?;
        writeln!(w, "end={}", c.end())?;
        writeln!(w, "episodes={}", self.ground_truth.episodes)?;
        writeln!(w, "true_infected={}", self.ground_truth.true_infected.len())?;
        writeln!(w, "true_contacts={}", self.ground_truth.contacts.len())?;
        Ok(())
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    let world = generate_world(cfg)?;
    simulate_world(cfg, world)
}

/// Runs reporting and transmission over a given world.
pub fn simulate_world(cfg: &SimConfig, world: World) -> Result<SimOutput> {
    cfg.validate()?;
    if world.persons.len() != cfg.persons {
        return Err(Error::invalid("world and config disagree on the population"));
    }
    let logs = device_logs(&world, cfg)?;

    // Participants are a prefix of one permutation, so higher rates give
    // supersets; the initial patients are always the first entries.
    let mut order: Vec<usize> = (0..cfg.persons).collect();
    order.shuffle(&mut rng(cfg.seed, STREAM_PARTICIPATION));
    let participating: BTreeSet<usize> = order[..cfg.participant_count()].iter().copied().collect();
    let seeds = &order[..cfg.initial_patients];

    let eps = episodes(&world, &logs, cfg)?;
    let ground_truth = transmit(&world, &eps, seeds, cfg);

    let mut offline = rng(cfg.seed, STREAM_OFFLINE);
    let mut keyed: Vec<((u32, u8, usize), DeviceBatch)> = Vec::new();
    for (i, days) in logs.into_iter().enumerate() {
        for (d, log) in days.into_iter().enumerate() {
            let held = offline.random_bool(cfg.p_offline);
            if !participating.contains(&i) || (log.points.is_empty() && log.intervals.is_empty()) {
                continue;
            }
            let d = d as u32;
            let arrival = if held { d + 1 } else { d };
            keyed.push((
                (arrival, held as u8, i),
                DeviceBatch {
                    arrival_day: arrival,
                    day: d,
                    person: world.persons[i].clone(),
                    points: log.points,
                    intervals: log.intervals,
                },
            ));
        }
    }
    keyed.sort_by_key(|(k, _)| *k);

    let patients = seeds
        .iter()
        .map(|&s| PatientRecord {
            person: world.persons[s].clone(),
            status: PatientStatus::Active,
            confirmed_at: cfg.end(),
        })
        .collect();
    Ok(SimOutput {
        config: *cfg,
        participants: participating.iter().map(|&i| world.persons[i].clone()).collect(),
        world,
        batches: keyed.into_iter().map(|(_, b)| b).collect(),
        patients,
        ground_truth,
    })
}

/// Share of the true contacts that the classification places in a class
/// other than 0. With no true contacts there is nothing to miss.
pub fn measure_recall(cls: &Classification, gt: &GroundTruth) -> f64 {
    if gt.contacts.is_empty() {
        return 1.0;
    }
    let found = gt
        .contacts
        .iter()
        .filter(|p| cls.class_of(p).is_some_and(|d| d > 0))
        .count();
    found as f64 / gt.contacts.len() as f64
}

/// Per-person counts of reported points, for quick inspection.
pub fn points_per_person(out: &SimOutput) -> BTreeMap<&PersonId, usize> {
    let mut m = BTreeMap::new();
    for b in &out.batches {
        *m.entry(&b.person).or_default() += b.points.len() + b.intervals.len();
    }
    m
}
