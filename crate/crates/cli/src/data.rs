//! On-disk layout of a data directory.
//!
//! ```text
//! points.csv            append-only trajectory log
//! patients.csv          health registry
//! areas.csv             public areas checked for black areas
//! zones.csv             exclusion zones applied at ingest (optional)
//! investigations/<id>/  one immutable directory per investigation
//! ```

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use contrace_core::ingest::{read_areas_file, read_zones_file, write_areas_csv, ExclusionZone};
use contrace_core::store::io::{append_points_csv, write_patients_csv, write_points_csv};
use contrace_core::{Area, Error, Investigation, Result, TrajectoryPoint, TrajectoryStore};

pub const DATA_DIR_ENV: &str = "CONTRACE_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "contrace-data";

#[derive(Clone, Debug)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn investigations(&self) -> PathBuf {
        self.root.join("investigations")
    }

    pub fn load_store(&self) -> Result<TrajectoryStore> {
        TrajectoryStore::load(&self.root)
    }

    /// Appends newly stored points to the log.
    pub fn append_points(&self, points: &[TrajectoryPoint]) -> Result<()> {
        if points.is_empty() {
            return Ok(());
        }
        fs::create_dir_all(&self.root)?;
        let path = self.file("points.csv");
        if !path.exists() {
            return write_points_csv(File::create(path)?, points.iter().cloned());
        }
        let f = OpenOptions::new().append(true).open(path)?;
        append_points_csv(f, points.iter().cloned())
    }

    pub fn save_patients(&self, store: &TrajectoryStore) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        let tmp = self.file("patients.csv.tmp");
        write_patients_csv(File::create(&tmp)?, store.patients())?;
        fs::rename(tmp, self.file("patients.csv"))?;
        Ok(())
    }

    pub fn load_areas(&self) -> Result<Vec<Area>> {
        let path = self.file("areas.csv");
        if path.exists() {
            read_areas_file(&path)
        } else {
            Ok(Vec::new())
        }
    }

    pub fn save_areas(&self, areas: &[Area]) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        write_areas_csv(File::create(self.file("areas.csv"))?, areas.iter())
    }

    pub fn load_zones(&self) -> Result<Vec<ExclusionZone>> {
        let path = self.file("zones.csv");
        if path.exists() {
            read_zones_file(&path)
        } else {
            Ok(Vec::new())
        }
    }

    pub fn save_zones_from(&self, src: &Path) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        read_zones_file(src)?;
        fs::copy(src, self.file("zones.csv"))?;
        Ok(())
    }

    /// Ids of all saved investigations, oldest first.
    pub fn investigation_ids(&self) -> Result<Vec<String>> {
        let dir = self.investigations();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut ids: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| parse_id(n).is_some())
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Saves into a fresh sequential id. `extra` may add files before the
    /// directory becomes visible.
    pub fn save_investigation(&self, inv: &Investigation, extra: impl FnOnce(&Path) -> Result<()>) -> Result<String> {
        let next = self
            .investigation_ids()?
            .last()
            .and_then(|id| parse_id(id))
            .map_or(1, |n| n + 1);
        let id = format!("inv-{next:06}");
        let final_dir = self.investigations().join(&id);
        let tmp = self.investigations().join(format!(".{id}.tmp"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        inv.save(&tmp)?;
        extra(&tmp)?;
        fs::rename(tmp, final_dir)?;
        Ok(id)
    }

    pub fn load_investigation(&self, id: &str) -> Result<Investigation> {
        let dir = self.investigations().join(id);
        if parse_id(id).is_none() || !dir.is_dir() {
            return Err(Error::Invalid(format!("no investigation {id}")));
        }
        Investigation::load(&dir)
    }

    /// Path of one export file of an investigation.
    pub fn investigation_file(&self, id: &str, name: &str) -> Result<PathBuf> {
        if parse_id(id).is_none() {
            return Err(Error::Invalid(format!("no investigation {id}")));
        }
        let path = self.investigations().join(id).join(name);
        if !path.exists() {
            return Err(Error::Invalid(format!("no investigation {id}")));
        }
        Ok(path)
    }

    /// The given id, or the latest investigation when `None`.
    pub fn resolve_investigation(&self, id: Option<&str>) -> Result<String> {
        match id {
            Some(id) => Ok(id.to_string()),
            None => self
                .investigation_ids()?
                .pop()
                .ok_or_else(|| Error::Invalid("no investigation has been run yet".into())),
        }
    }
}

fn parse_id(id: &str) -> Option<u64> {
    let n = id.strip_prefix("inv-")?;
    (n.len() == 6 && n.bytes().all(|b| b.is_ascii_digit())).then(|| n.parse().ok())?
}
