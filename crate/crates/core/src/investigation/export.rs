//! CSV exports and on-disk layout of investigation results.
//!
//! A saved investigation is a directory holding `config`, `classes.csv`,
//! `black_areas.csv`, `suspects_by_area.csv`, `areas.csv` and
//! `persons.csv`. Every file is a pure function of the snapshot and the
//! configuration, so repeated runs produce identical bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{PersonId, ProximityConfig, Timestamp};
use crate::ingest::{read_areas_file, write_areas_csv};
use crate::store::io::{check_header, parse_field};

use super::{
    AreaCount, AreaSuspects, BlackAreaResult, ClassMember, Classification, Investigation, InvestigationConfig,
    SuspectsByArea,
};

pub const CLASSES_HEADER: [&str; 3] = ["person_id", "distance_class", "contact_ts"];
pub const BLACK_AREAS_HEADER: [&str; 3] = ["area_id", "count", "is_black"];
pub const SUSPECTS_HEADER: [&str; 3] = ["area_id", "person_id", "visit_ts"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_classes_csv(w: impl Write, cls: &Classification) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(CLASSES_HEADER)?;
    for (d, class) in cls.classes().iter().enumerate() {
        for m in class {
            wtr.write_record([m.person.as_str(), &d.to_string(), &m.contact_ts.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_classes_csv(r: impl Read, as_of: Timestamp, path: &str) -> Result<Classification> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &CLASSES_HEADER, path)?;
    let mut classes: Vec<Vec<ClassMember>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let person: PersonId = parse_field(&rec, 0, "person_id", path)?;
        let d: usize = parse_field(&rec, 1, "distance_class", path)?;
        let ts: Timestamp = Timestamp::new(parse_field(&rec, 2, "contact_ts", path)?)?;
        if classes.len() <= d {
            classes.resize_with(d + 1, Vec::new);
        }
        classes[d].push(ClassMember { person, contact_ts: ts });
    }
    Classification::from_classes(as_of, classes)
}

pub fn write_black_areas_csv(w: impl Write, ba: &BlackAreaResult) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(BLACK_AREAS_HEADER)?;
    for a in &ba.areas {
        wtr.write_record([a.area.area_id.as_str(), &a.count.to_string(), &a.is_black.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_suspects_csv(w: impl Write, sba: &SuspectsByArea) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(SUSPECTS_HEADER)?;
    for a in &sba.areas {
        for (p, t) in &a.visitors {
            wtr.write_record([a.area_id.as_str(), p.as_str(), &t.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_config(w: &mut impl Write, cfg: &InvestigationConfig) -> std::io::Result<()> {
    writeln!(w, "current_date={}", cfg.current_date)?;
    writeln!(w, "incubation_period_s={}", cfg.incubation_period_s)?;
    writeln!(w, "epsilon={}", cfg.proximity.epsilon_m())?;
    writeln!(w, "delta_t={}", cfg.proximity.delta_t_s())?;
    writeln!(w, "alpha={}", cfg.alpha)?;
    match cfg.black_area_window_s {
        Some(s) => writeln!(w, "black_area_window_s={s}")?,
        None => writeln!(w, "black_area_window_s=unbounded")?,
    }
    writeln!(w, "causal_ordering={}", cfg.causal_ordering)
}

fn read_config(path: &Path) -> Result<InvestigationConfig> {
    let kv = crate::store::read_key_values(path)?;
    let bad = |k: &str| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: format!("missing or bad {k}"),
    };
    fn get<T: std::str::FromStr>(kv: &BTreeMap<String, String>, k: &str) -> Option<T> {
        kv.get(k).and_then(|v| v.parse().ok())
    }
    let window = match kv.get("black_area_window_s").map(String::as_str) {
        Some("unbounded") => None,
        Some(v) => Some(v.parse().map_err(|_| bad("black_area_window_s"))?),
        None => return Err(bad("black_area_window_s")),
    };
    let cfg = InvestigationConfig {
        current_date: Timestamp::new(get(&kv, "current_date").ok_or_else(|| bad("current_date"))?)?,
        incubation_period_s: get(&kv, "incubation_period_s").ok_or_else(|| bad("incubation_period_s"))?,
        proximity: ProximityConfig::new(
            get(&kv, "epsilon").ok_or_else(|| bad("epsilon"))?,
            get(&kv, "delta_t").ok_or_else(|| bad("delta_t"))?,
        )?,
        alpha: get(&kv, "alpha").ok_or_else(|| bad("alpha"))?,
        black_area_window_s: window,
        causal_ordering: get(&kv, "causal_ordering").ok_or_else(|| bad("causal_ordering"))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl Investigation {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut f = File::create(dir.join("config"))?;
        write_config(&mut f, &self.config)?;
        write_classes_csv(File::create(dir.join("classes.csv"))?, &self.classification)?;
        write_black_areas_csv(File::create(dir.join("black_areas.csv"))?, &self.black_areas)?;
        write_suspects_csv(File::create(dir.join("suspects_by_area.csv"))?, &self.suspects)?;
        write_areas_csv(
            File::create(dir.join("areas.csv"))?,
            self.black_areas.areas.iter().map(|a| &a.area),
        )?;
        let mut wtr = writer(File::create(dir.join("persons.csv"))?);
        wtr.write_record(["person_id"])?;
        for p in &self.known {
            wtr.write_record([p.as_str()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let name = |f: &str| dir.join(f).display().to_string();
        let config = read_config(&dir.join("config"))?;
        let classification = read_classes_csv(
            File::open(dir.join("classes.csv"))?,
            config.current_date,
            &name("classes.csv"),
        )?;

        let areas = read_areas_file(&dir.join("areas.csv"))?;
        let mut counts: HashMap<String, (usize, bool)> = HashMap::new();
        let mut rdr = csv::Reader::from_reader(File::open(dir.join("black_areas.csv"))?);
        check_header(&mut rdr, &BLACK_AREAS_HEADER, &name("black_areas.csv"))?;
        for rec in rdr.records() {
            let rec = rec?;
            let id: String = parse_field(&rec, 0, "area_id", &name("black_areas.csv"))?;
            let count = parse_field(&rec, 1, "count", &name("black_areas.csv"))?;
            let black = parse_field(&rec, 2, "is_black", &name("black_areas.csv"))?;
            counts.insert(id, (count, black));
        }
        let black_areas = BlackAreaResult {
            alpha: config.alpha,
            areas: areas
                .into_iter()
                .map(|area| {
                    let (count, is_black) = counts.get(&area.area_id).copied().unwrap_or((0, false));
                    AreaCount { area, count, is_black }
                })
                .collect(),
        };

        let mut per_area: BTreeMap<String, Vec<(PersonId, Timestamp)>> = BTreeMap::new();
        let mut rdr = csv::Reader::from_reader(File::open(dir.join("suspects_by_area.csv"))?);
        check_header(&mut rdr, &SUSPECTS_HEADER, &name("suspects_by_area.csv"))?;
        for rec in rdr.records() {
            let rec = rec?;
            let n = name("suspects_by_area.csv");
            let id: String = parse_field(&rec, 0, "area_id", &n)?;
            let p: PersonId = parse_field(&rec, 1, "person_id", &n)?;
            let t = Timestamp::new(parse_field(&rec, 2, "visit_ts", &n)?)?;
            per_area.entry(id).or_default().push((p, t));
        }
        let suspects = SuspectsByArea {
            areas: black_areas
                .black_areas()
                .map(|a| AreaSuspects {
                    area_id: a.area.area_id.clone(),
                    visitors: per_area.remove(&a.area.area_id).unwrap_or_default(),
                })
                .collect(),
        };

        let mut known = BTreeSet::new();
        let mut rdr = csv::Reader::from_reader(File::open(dir.join("persons.csv"))?);
        check_header(&mut rdr, &["person_id"], &name("persons.csv"))?;
        for rec in rdr.records() {
            known.insert(parse_field(&rec?, 0, "person_id", &name("persons.csv"))?);
        }

        Ok(Investigation {
            config,
            classification,
            black_areas,
            suspects,
            known,
        })
    }
}
