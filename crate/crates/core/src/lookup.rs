//! The four evaluated lookup designs and their moving parts: latency
//! parameters, way predictors, and the L0 filter cache.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which access flow the simulated cache uses.
///
/// Both prediction variants probe one way at a time; they differ only in
/// the predictor (a constant way-0 guess versus a PC-indexed table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    Sequential,
    Parallel,
    PredictionStatic,
    PredictionPc,
    Filter,
}

impl DesignKind {
    pub fn uses_prediction(self) -> bool {
        matches!(self, DesignKind::PredictionStatic | DesignKind::PredictionPc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::Sequential => "sequential",
            DesignKind::Parallel => "parallel",
            DesignKind::PredictionStatic => "prediction-static",
            DesignKind::PredictionPc => "prediction-pc",
            DesignKind::Filter => "filter",
        }
    }
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(DesignKind::Sequential),
            "parallel" => Ok(DesignKind::Parallel),
            "prediction-static" | "prediction" => Ok(DesignKind::PredictionStatic),
            "prediction-pc" => Ok(DesignKind::PredictionPc),
            "filter" => Ok(DesignKind::Filter),
            other => Err(Error::config(format!("unknown design `{other}`"))),
        }
    }
}

/// Per-access latencies in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Tag-then-data hit.
    pub seq_hit: u64,
    /// Tag and data probed together.
    pub par_hit: u64,
    /// Correctly predicted load hit.
    pub pred_correct_load: u64,
    /// Extra cycle for stores and mispredicted loads.
    pub pred_penalty: u64,
    /// Hit in the L0 filter cache.
    pub l0_hit: u64,
    /// Cycles the cache ports stay blocked per line swap.
    pub swap_block: u64,
    /// Cycles to the next memory level on a miss.
    pub miss_penalty: u64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            seq_hit: 3,
            par_hit: 2,
            pred_correct_load: 2,
            pred_penalty: 1,
            l0_hit: 1,
            swap_block: 4,
            miss_penalty: 20,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.seq_hit,
            self.par_hit,
            self.pred_correct_load,
            self.pred_penalty,
            self.l0_hit,
            self.swap_block,
            self.miss_penalty,
        ];
        if all.iter().any(|&v| v == 0) {
            return Err(Error::config("timing parameters must be positive"));
        }
        Ok(())
    }
}

/// Index bits of the PC-indexed predictor table.
pub const DEFAULT_PREDICTOR_INDEX_BITS: u32 = 10;

/// Way predictor: either the constant way-0 guess or a direct-mapped table
/// of last-seen ways indexed by PC word address.
#[derive(Debug, Clone)]
pub enum PredictorState {
    StaticW0,
    PcTable { index_bits: u32, table: Vec<u8> },
}

impl PredictorState {
    pub fn static_w0() -> Self {
        PredictorState::StaticW0
    }

    /// Fresh PC-indexed table; entries start at way 0.
    pub fn pc_table(index_bits: u32) -> Self {
        PredictorState::PcTable {
            index_bits,
            table: vec![0; 1usize << index_bits],
        }
    }

    pub fn for_design(design: DesignKind) -> Option<Self> {
        match design {
            DesignKind::PredictionStatic => Some(Self::static_w0()),
            DesignKind::PredictionPc => Some(Self::pc_table(DEFAULT_PREDICTOR_INDEX_BITS)),
            _ => None,
        }
    }

    fn slot(index_bits: u32, pc: u64) -> usize {
        ((pc / 4) & ((1u64 << index_bits) - 1)) as usize
    }

    pub fn predict(&self, pc: u64) -> usize {
        match self {
            PredictorState::StaticW0 => 0,
            PredictorState::PcTable { index_bits, table } => {
                table[Self::slot(*index_bits, pc)] as usize
            }
        }
    }

    /// Remember which way served `pc`; the static predictor ignores this.
    pub fn update(&mut self, pc: u64, actual_way: usize) {
        if let PredictorState::PcTable { index_bits, table } = self {
            table[Self::slot(*index_bits, pc)] = actual_way as u8;
        }
    }

    /// Implementation cost of the predictor in bits of state.
    pub fn storage_bits(&self, associativity: usize) -> u64 {
        match self {
            PredictorState::StaticW0 => 0,
            PredictorState::PcTable { table, .. } => {
                let way_bits = usize::BITS - (associativity.max(1) - 1).leading_zeros();
                table.len() as u64 * way_bits as u64
            }
        }
    }
}

/// Capacity of the L0 filter cache.
pub const L0_CAPACITY_BYTES: u64 = 1024;

/// Energy of one L0 probe, in pJ.
pub const L0_ACCESS_ENERGY_PJ: f64 = 4.1;

/// Tiny direct-mapped cache in front of the L1 that absorbs hot references.
/// It holds tags only and never dirty data (stores write through to L1).
#[derive(Debug, Clone)]
pub struct L0Cache {
    line_bytes: u64,
    tags: Vec<Option<u64>>,
    energy_pj: f64,
}

impl L0Cache {
    /// Direct-mapped 1 KiB cache with the L1's line size.
    pub fn new(line_bytes: u64) -> Result<Self> {
        if line_bytes == 0
            || !line_bytes.is_power_of_two()
            || line_bytes > L0_CAPACITY_BYTES
        {
            return Err(Error::config(format!(
                "L0 line size {line_bytes} must be a power of two up to {L0_CAPACITY_BYTES}"
            )));
        }
        let lines = (L0_CAPACITY_BYTES / line_bytes) as usize;
        Ok(Self {
            line_bytes,
            tags: vec![None; lines],
            energy_pj: L0_ACCESS_ENERGY_PJ,
        })
    }

    pub fn line_count(&self) -> usize {
        self.tags.len()
    }

    pub fn energy_pj(&self) -> f64 {
        self.energy_pj
    }

    fn index_tag(&self, addr: u64) -> (usize, u64) {
        let line = addr / self.line_bytes;
        let lines = self.tags.len() as u64;
        ((line % lines) as usize, line / lines)
    }

    /// Tag probe; true on hit.
    pub fn lookup(&self, addr: u64) -> bool {
        let (index, tag) = self.index_tag(addr);
        self.tags[index] == Some(tag)
    }

    /// Install the line that the L1 just served.
    pub fn fill(&mut self, addr: u64) {
        let (index, tag) = self.index_tag(addr);
        self.tags[index] = Some(tag);
    }
}
