//! Config-file plumbing: the `HLSW_CONFIG` defaults file and energy
//! source files (an explicit per-way table or a subarray geometry).
//!
//! Both are TOML. The defaults file carries flat keys that mirror the CLI
//! flags plus an optional `[timing]` section; command-line flags always
//! win. An energy file carries exactly one of a `[table]` or `[geometry]`
//! section.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::energy::{EnergyTable, GeometryModel};
use crate::error::{Error, Result};
use crate::lookup::TimingParams;

/// Environment variable naming the defaults file.
pub const CONFIG_ENV: &str = "HLSW_CONFIG";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingOverrides {
    pub seq_hit: Option<u64>,
    pub par_hit: Option<u64>,
    pub pred_correct_load: Option<u64>,
    pub pred_penalty: Option<u64>,
    pub l0_hit: Option<u64>,
    pub swap_block: Option<u64>,
    pub miss_penalty: Option<u64>,
}

impl TimingOverrides {
    pub fn apply(&self, base: TimingParams) -> TimingParams {
        TimingParams {
            seq_hit: self.seq_hit.unwrap_or(base.seq_hit),
            par_hit: self.par_hit.unwrap_or(base.par_hit),
            pred_correct_load: self.pred_correct_load.unwrap_or(base.pred_correct_load),
            pred_penalty: self.pred_penalty.unwrap_or(base.pred_penalty),
            l0_hit: self.l0_hit.unwrap_or(base.l0_hit),
            swap_block: self.swap_block.unwrap_or(base.swap_block),
            miss_penalty: self.miss_penalty.unwrap_or(base.miss_penalty),
        }
    }
}

/// Defaults loadable from the file named by [`CONFIG_ENV`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileDefaults {
    pub design: Option<String>,
    pub holiswap: Option<bool>,
    pub epoch: Option<u32>,
    pub threshold: Option<u32>,
    pub counters: Option<String>,
    pub seed: Option<u64>,
    pub cache_kb: Option<u64>,
    pub line_bytes: Option<u64>,
    pub assoc: Option<usize>,
    pub geometry: Option<PathBuf>,
    pub format: Option<String>,
    pub filter_l1_parallel: Option<bool>,
    pub timing: Option<TimingOverrides>,
}

impl FileDefaults {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        toml::from_str(&text).map_err(|e| {
            Error::config(format!(
                "defaults file {}: {e}",
                path.as_ref().display()
            ))
        })
    }

    /// Load the file named by `HLSW_CONFIG`, if the variable is set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) => Self::load(path),
            None => Ok(Self::default()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSection {
    total_seq: Vec<f64>,
    wire: Vec<f64>,
    total_par: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    rows: usize,
    cols: usize,
    ways: Option<usize>,
    base_wire: Option<f64>,
    hop_x: Option<f64>,
    hop_y: Option<f64>,
    sram_access: Option<f64>,
    /// Explicit way -> (x, y) placements; defaults to round-robin row-major.
    positions: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyFile {
    table: Option<TableSection>,
    geometry: Option<GeometrySection>,
}

/// Load an energy source file and derive the per-way table it describes.
/// `ways` is the cache associativity the table must cover.
pub fn load_energy_file(path: impl AsRef<Path>, ways: usize) -> Result<EnergyTable> {
    let text = std::fs::read_to_string(&path)?;
    let file: EnergyFile = toml::from_str(&text)
        .map_err(|e| Error::config(format!("energy file {}: {e}", path.as_ref().display())))?;
    let table = match (file.table, file.geometry) {
        (Some(table), None) => EnergyTable::new(table.total_seq, table.wire, table.total_par)?,
        (None, Some(geom)) => {
            let defaults = GeometryModel::default();
            let mut model = GeometryModel::with_grid_and_constants(
                geom.rows,
                geom.cols,
                geom.ways.unwrap_or(ways),
                geom.base_wire.unwrap_or(defaults.base_wire),
                geom.hop_x.unwrap_or(defaults.hop_x),
                geom.hop_y.unwrap_or(defaults.hop_y),
                geom.sram_access.unwrap_or(defaults.sram_access),
            )?;
            if let Some(positions) = geom.positions {
                model.way_position = positions.into_iter().map(|[x, y]| (x, y)).collect();
                model.validate()?;
            }
            model.to_table()?
        }
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "energy file must contain either [table] or [geometry], not both",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                "energy file contains neither [table] nor [geometry]",
            ))
        }
    };
    if table.ways() != ways {
        return Err(Error::config(format!(
            "energy file covers {} ways but the cache has {ways}",
            table.ways()
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn geometry_file_reproduces_the_default_table() {
        let f = temp_file(
            "[geometry]\nrows = 2\ncols = 2\nbase_wire = 1.6\nhop_x = 3.1\nhop_y = 5.2\nsram_access = 4.1\n",
        );
        let table = load_energy_file(f.path(), 4).unwrap();
        let reference = EnergyTable::default();
        for way in 0..4 {
            assert!((table.total_seq(way) - reference.total_seq(way)).abs() < 0.05);
        }
    }

    #[test]
    fn table_file_roundtrips() {
        let f = temp_file(
            "[table]\ntotal_seq = [5.7, 8.8, 10.9, 14.0]\nwire = [1.6, 4.7, 6.8, 9.9]\n",
        );
        let table = load_energy_file(f.path(), 4).unwrap();
        assert!((table.total_par(3) - 26.3).abs() < 0.05);
    }

    #[test]
    fn way_count_mismatch_is_rejected() {
        let f = temp_file("[table]\ntotal_seq = [5.7, 8.8]\nwire = [1.6, 4.7]\n");
        assert!(load_energy_file(f.path(), 4).is_err());
    }

    #[test]
    fn defaults_file_parses_flat_keys_and_timing() {
        let f = temp_file(
            "design = \"parallel\"\nepoch = 64\nholiswap = false\n[timing]\nmiss_penalty = 40\n",
        );
        let defaults = FileDefaults::load(f.path()).unwrap();
        assert_eq!(defaults.design.as_deref(), Some("parallel"));
        assert_eq!(defaults.epoch, Some(64));
        assert_eq!(defaults.holiswap, Some(false));
        let timing = defaults.timing.unwrap().apply(TimingParams::default());
        assert_eq!(timing.miss_penalty, 40);
        assert_eq!(timing.seq_hit, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = temp_file("desing = \"parallel\"\n");
        assert!(FileDefaults::load(f.path()).is_err());
    }
}
