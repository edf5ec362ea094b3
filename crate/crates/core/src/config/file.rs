//! TOML configuration file.
//!
//! ```toml
//! n = 4
//! k = 2
//! c_a = 2
//! c_b = 2
//! # optional
//! total_subcarriers = 64
//! energy_source = "equalized"      # or "received"
//! mode_a = [[[0.0, 0.0], [0.0, 0.0], [1.2247448713915890, 0.0]],
//!           [[0.0, 0.0], [0.0, 0.0], [-1.2247448713915890, 0.0]]]
//! mode_b = [[[0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0]],
//!           [[-0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0]]]
//! lut = [[1, 2], [2, 3], [3, 4], [1, 4]]
//! ```
//!
//! Each point is three `[re, im]` pairs. Omitted constellations or table fall
//! back to the defaults for `(n, k)`. Unknown keys are rejected.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{
    build_index_lut, default_constellations, ConstellationSet, IndexLookupTable, Point3, Setup,
    SystemConfig,
};
use crate::error::{Error, Result};
use crate::rx::EnergySource;

type PointSpec = [[f64; 2]; 3];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    pub k: usize,
    pub c_a: usize,
    pub c_b: usize,
    #[serde(default)]
    pub total_subcarriers: Option<usize>,
    #[serde(default)]
    pub energy_source: Option<EnergySource>,
    #[serde(default)]
    pub mode_a: Option<Vec<PointSpec>>,
    #[serde(default)]
    pub mode_b: Option<Vec<PointSpec>>,
    #[serde(default)]
    pub lut: Option<Vec<Vec<usize>>>,
}

fn to_points(specs: &[PointSpec]) -> Vec<Point3> {
    specs
        .iter()
        .map(|p| p.map(|[re, im]| Complex64::new(re, im)))
        .collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_owned())
    }

    /// Builds the setup without validating it; see [`Setup::validate`].
    pub fn into_setup(self) -> Result<Setup> {
        let system = SystemConfig::with_frame(
            self.n,
            self.k,
            self.c_a,
            self.c_b,
            self.total_subcarriers.unwrap_or(self.n),
        )?;
        let defaults = default_constellations(&system);
        let constellations = ConstellationSet {
            mode_a: self.mode_a.as_deref().map(to_points).unwrap_or(defaults.mode_a),
            mode_b: self.mode_b.as_deref().map(to_points).unwrap_or(defaults.mode_b),
        };
        let lut = match self.lut {
            Some(entries) => IndexLookupTable::new(entries),
            None => build_index_lut(system.n, system.k)?,
        };
        Ok(Setup {
            system,
            constellations,
            lut,
            energy_source: self.energy_source.unwrap_or_default(),
        })
    }
}

impl Setup {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        ConfigFile::parse(text)
            .map_err(|message| Error::ConfigFile { path: "<string>".into(), message })?
            .into_setup()
    }

    /// Reads and parses a config file. The result is not yet validated.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ConfigFile::parse(&text)
            .map_err(|message| Error::ConfigFile { path: path.to_owned(), message })?
            .into_setup()
    }
}
