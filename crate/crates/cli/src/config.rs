//! `key=value` configuration files. Command-line flags win over the file,
//! the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use contrace_core::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(ConfigFile {
            values: contrace_core::store::read_key_values(path)?,
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Invalid(format!("config: bad value for {key}: {v:?}")))
            })
            .transpose()
    }

    /// `flag`, else the file's `key`, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "alpha=5\n# comment\nepsilon=3.5\n").unwrap();
        let c = ConfigFile::load(&path).unwrap();
        assert_eq!(c.pick(Some(2u32), "alpha", 3).unwrap(), 2);
        assert_eq!(c.pick(None, "alpha", 3u32).unwrap(), 5);
        assert_eq!(c.pick(None, "delta_t", 300i64).unwrap(), 300);
        assert_eq!(c.pick(None, "epsilon", 2.0f64).unwrap(), 3.5);
        std::fs::write(&path, "alpha=x\n").unwrap();
        assert!(ConfigFile::load(&path).unwrap().pick(None, "alpha", 3u32).is_err());
    }
}
