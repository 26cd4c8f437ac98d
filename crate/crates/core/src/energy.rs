//! Per-access and per-swap energy accounting.
//!
//! Energies come either from a measured per-way table (the built-in default
//! describes a 32 KiB 4-way cache) or from a parametric subarray-placement
//! geometry whose output wires route to the way multiplexer near way 0 with
//! Manhattan hop costs. Sequential lookup probes one data array; parallel
//! lookup probes every array but toggles only the selected way's output
//! wire, the others being gated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lookup::DesignKind;
use crate::policy::CounterMode;

/// Tolerance for table self-consistency checks, in pJ.
pub const TABLE_TOLERANCE_PJ: f64 = 0.05;

/// Counter-maintenance energy per access, as a fraction of the mean
/// sequential access energy.
pub const COUNTER_ENERGY_FRACTION: f64 = 0.0062;

/// Per-way access energies in pJ for sequential and parallel lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    total_seq: Vec<f64>,
    wire: Vec<f64>,
    total_par: Vec<f64>,
}

impl Default for EnergyTable {
    /// Measured values for the default 32 KiB 4-way cache, one 8 KiB
    /// subarray per way on a 2x2 grid.
    fn default() -> Self {
        Self {
            total_seq: vec![5.7, 8.8, 10.9, 14.0],
            wire: vec![1.6, 4.7, 6.8, 9.9],
            total_par: vec![18.0, 21.1, 23.2, 26.3],
        }
    }
}

impl EnergyTable {
    /// Build a table from per-way sequential totals and wire energies.
    /// `total_par` may be omitted, in which case it is derived as
    /// `sram_all + wire[w]`; when given, it must agree with that identity
    /// within [`TABLE_TOLERANCE_PJ`].
    pub fn new(total_seq: Vec<f64>, wire: Vec<f64>, total_par: Option<Vec<f64>>) -> Result<Self> {
        if total_seq.is_empty() || total_seq.len() != wire.len() {
            return Err(Error::config(
                "energy table needs equal, non-empty total_seq and wire rows",
            ));
        }
        for (w, (&t, &wi)) in total_seq.iter().zip(&wire).enumerate() {
            if !t.is_finite() || !wi.is_finite() || wi < 0.0 || t < wi {
                return Err(Error::config(format!(
                    "way {w}: need 0 <= wire <= total_seq, got wire={wi}, total_seq={t}"
                )));
            }
        }
        let sram_all: f64 = total_seq.iter().zip(&wire).map(|(t, w)| t - w).sum();
        let derived: Vec<f64> = wire.iter().map(|w| sram_all + w).collect();
        let total_par = match total_par {
            Some(given) => {
                if given.len() != wire.len() {
                    return Err(Error::config("total_par row length mismatch"));
                }
                for (w, (&g, &d)) in given.iter().zip(&derived).enumerate() {
                    if (g - d).abs() > TABLE_TOLERANCE_PJ {
                        return Err(Error::config(format!(
                            "way {w}: total_par {g} inconsistent with sram_all + wire = {d:.3}"
                        )));
                    }
                }
                given
            }
            None => derived,
        };
        Ok(Self {
            total_seq,
            wire,
            total_par,
        })
    }

    pub fn ways(&self) -> usize {
        self.total_seq.len()
    }

    fn check_way(&self, way: usize) -> Result<()> {
        if way < self.ways() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "unknown way {way} for a {}-way energy table",
                self.ways()
            )))
        }
    }

    pub fn total_seq(&self, way: usize) -> f64 {
        self.total_seq[way]
    }

    pub fn wire(&self, way: usize) -> f64 {
        self.wire[way]
    }

    pub fn total_par(&self, way: usize) -> f64 {
        self.total_par[way]
    }

    pub fn wire_energies(&self) -> &[f64] {
        &self.wire
    }

    /// Array energy of one way under sequential lookup.
    pub fn sram_seq(&self, way: usize) -> f64 {
        self.total_seq[way] - self.wire[way]
    }

    /// Array energy of probing every way at once.
    pub fn sram_all(&self) -> f64 {
        self.total_seq
            .iter()
            .zip(&self.wire)
            .map(|(t, w)| t - w)
            .sum()
    }

    /// (array, wire) energy of one access that is served by `way`.
    /// Parallel lookup cycles every array; all other designs probe a single
    /// way at a time.
    pub fn access_energy(&self, design: DesignKind, way: usize) -> Result<(f64, f64)> {
        self.check_way(way)?;
        match design {
            DesignKind::Parallel => Ok((self.sram_all(), self.wire[way])),
            _ => Ok((self.sram_seq(way), self.wire[way])),
        }
    }

    /// Energy of one line swap: two reads and two writes, one of each per
    /// involved way, each charged at that way's sequential total. The swap
    /// is a targeted controller access, so the lookup design does not
    /// change its cost.
    pub fn swap_energy(&self, a: usize, b: usize) -> Result<f64> {
        self.check_way(a)?;
        self.check_way(b)?;
        if a == b {
            return Err(Error::config("swap requires two distinct ways"));
        }
        Ok((self.total_seq[a] + self.total_seq[b]) * 2.0)
    }

    /// Counter-update energy charged on each policy-visible access.
    pub fn counter_energy_per_access(&self) -> f64 {
        let mean = self.total_seq.iter().sum::<f64>() / self.total_seq.len() as f64;
        COUNTER_ENERGY_FRACTION * mean
    }

    /// Total counter-maintenance energy for `events` accesses; zero when the
    /// policy is disabled (`mode` absent). Exact and logarithmic counters
    /// are charged at the same per-access rate.
    pub fn counter_overhead_energy(&self, mode: Option<CounterMode>, events: u64) -> f64 {
        match mode {
            None => 0.0,
            Some(_) => events as f64 * self.counter_energy_per_access(),
        }
    }
}

/// Subarray placement on a grid of (rows x cols) banks, one coordinate per
/// way. Output wire energy grows with Manhattan distance from the way
/// multiplexer at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryModel {
    pub rows: usize,
    pub cols: usize,
    pub base_wire: f64,
    pub hop_x: f64,
    pub hop_y: f64,
    pub sram_access: f64,
    /// (x, y) grid coordinate of each way's subarray.
    pub way_position: Vec<(usize, usize)>,
}

impl Default for GeometryModel {
    /// 2x2 grid of 8 KiB subarrays matching the default energy table.
    fn default() -> Self {
        Self {
            rows: 2,
            cols: 2,
            base_wire: 1.6,
            hop_x: 3.1,
            hop_y: 5.2,
            sram_access: 4.1,
            way_position: vec![(0, 0), (1, 0), (0, 1), (1, 1)],
        }
    }
}

impl GeometryModel {
    /// Place `ways` ways on a rows x cols grid with the default energy
    /// constants, mapping ways to subarrays round-robin in row-major order.
    pub fn with_grid(rows: usize, cols: usize, ways: usize) -> Result<Self> {
        let defaults = GeometryModel::default();
        Self::with_grid_and_constants(
            rows,
            cols,
            ways,
            defaults.base_wire,
            defaults.hop_x,
            defaults.hop_y,
            defaults.sram_access,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_grid_and_constants(
        rows: usize,
        cols: usize,
        ways: usize,
        base_wire: f64,
        hop_x: f64,
        hop_y: f64,
        sram_access: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || ways == 0 {
            return Err(Error::config("geometry needs positive rows, cols and ways"));
        }
        let cells = rows * cols;
        let way_position = (0..ways)
            .map(|w| {
                let cell = w % cells;
                (cell % cols, cell / cols)
            })
            .collect();
        let model = Self {
            rows,
            cols,
            base_wire,
            hop_x,
            hop_y,
            sram_access,
            way_position,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::config("geometry grid must be non-empty"));
        }
        if self.way_position.is_empty() {
            return Err(Error::config("geometry maps no ways"));
        }
        for (way, &(x, y)) in self.way_position.iter().enumerate() {
            if x >= self.cols || y >= self.rows {
                return Err(Error::config(format!(
                    "way {way} position ({x},{y}) outside {}x{} grid",
                    self.rows, self.cols
                )));
            }
        }
        for v in [self.base_wire, self.hop_x, self.hop_y, self.sram_access] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config("geometry energies must be non-negative"));
            }
        }
        Ok(())
    }

    /// Output wire energy of one way: base plus Manhattan hop costs.
    pub fn wire(&self, way: usize) -> Result<f64> {
        let &(x, y) = self.way_position.get(way).ok_or_else(|| {
            Error::config(format!("way {way} has no position in the geometry"))
        })?;
        Ok(self.base_wire + x as f64 * self.hop_x + y as f64 * self.hop_y)
    }

    /// Derive the per-way energy table this placement implies.
    pub fn to_table(&self) -> Result<EnergyTable> {
        self.validate()?;
        let wire: Vec<f64> = (0..self.way_position.len())
            .map(|w| self.wire(w))
            .collect::<Result<_>>()?;
        let total_seq: Vec<f64> = wire.iter().map(|w| self.sram_access + w).collect();
        EnergyTable::new(total_seq, wire, None)
    }
}

/// Accumulated energy by component, in pJ. Components only ever grow while
/// a simulation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyLedger {
    pub sram_pj: f64,
    pub wire_pj: f64,
    pub swap_pj: f64,
    pub counter_pj: f64,
    pub l0_pj: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.sram_pj + self.wire_pj + self.swap_pj + self.counter_pj + self.l0_pj
    }
}
