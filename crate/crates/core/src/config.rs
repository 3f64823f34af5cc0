//! Run settings shared by the command line and the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::QuadratureScheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Spatial dimension; only 2 is supported.
    pub n: usize,
    /// Minimum points per axis of a frequency lattice (lattices grow to fit the band).
    pub grid_n: usize,
    pub box_l: f64,
    /// Half-width `W` of the time window `[-W, W]`.
    pub window: f64,
    pub dt: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n: 2,
            grid_n: 256,
            box_l: 64.0,
            window: 16.0,
            dt: 0.25,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl Settings {
    /// Parses `key = value` lines; keys use the flag names with `-` or `_`.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: toml::Table = s.parse().map_err(|e| Error::Format(format!("config: {e}")))?;
        let mut fixed = toml::Table::new();
        for (k, v) in table {
            let key = k.replace('-', "_").to_lowercase();
            let v = match (key.as_str(), v) {
                ("box_l" | "window" | "dt", toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            fixed.insert(key, v);
        }
        fixed
            .try_into()
            .map_err(|e: toml::de::Error| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 2 {
            return Err(Error::UnsupportedDimension(self.n));
        }
        self.scheme()?;
        crate::wavefield::FrequencyLattice::for_band(0, self.box_l, self.grid_n)?;
        Ok(())
    }

    pub fn scheme(&self) -> Result<QuadratureScheme> {
        QuadratureScheme::new(self.dt, self.window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_key_value_lines() {
        let s = Settings::from_toml_str("grid-N = 512\nbox-L = 64\nseed = 9\nout-dir = \"x\"\n").unwrap();
        assert_eq!(s.grid_n, 512);
        assert_eq!(s.box_l, 64.0);
        assert_eq!(s.seed, 9);
        assert_eq!(s.out_dir, PathBuf::from("x"));
        assert_eq!(s.window, 16.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Settings::from_toml_str("colour = 1").is_err());
    }
}
