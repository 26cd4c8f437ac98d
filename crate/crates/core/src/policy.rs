//! Hot-line detection and migration directives.
//!
//! Each set carries an access counter and one hit counter per line, in
//! exact or logarithmic (exponent-only) form. A line whose hit count first
//! reaches the threshold while outside way 0 triggers a swap directive;
//! when the set's access counter completes an epoch, every counter in the
//! set is cleared. Hit counters belong to a frame's current logical line:
//! they travel with the line on swaps and reset when the frame is refilled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Migration target: the physical way with the cheapest wire distance.
pub const HOME_WAY: usize = 0;

/// Logarithmic counters saturate at this exponent.
pub const MAX_EXPONENT: u8 = 15;

/// Name of the generator behind probabilistic counter updates, echoed in
/// reports so runs can be reproduced.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CounterMode {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "log")]
    Logarithmic,
}

impl std::fmt::Display for CounterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CounterMode::Exact => write!(f, "exact"),
            CounterMode::Logarithmic => write!(f, "log"),
        }
    }
}

impl std::str::FromStr for CounterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CounterMode::Exact),
            "log" | "logarithmic" => Ok(CounterMode::Logarithmic),
            other => Err(Error::config(format!("unknown counter mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Epoch length: set accesses per counter-reset window.
    pub epoch: u32,
    /// Hit count at which a line is considered hot.
    pub threshold: u32,
    pub mode: CounterMode,
    pub seed: u64,
    pub enabled: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            epoch: 256,
            threshold: 128,
            mode: CounterMode::Logarithmic,
            seed: 0,
            enabled: true,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epoch == 0 || self.threshold == 0 {
            return Err(Error::config("epoch and threshold must be positive"));
        }
        if self.mode == CounterMode::Logarithmic {
            if !self.epoch.is_power_of_two() || !self.threshold.is_power_of_two() {
                return Err(Error::config(
                    "logarithmic counters need power-of-two epoch and threshold",
                ));
            }
            if self.epoch.ilog2() > MAX_EXPONENT as u32 || self.threshold.ilog2() > MAX_EXPONENT as u32 {
                return Err(Error::config(format!(
                    "epoch and threshold must be at most 2^{MAX_EXPONENT} in logarithmic mode"
                )));
            }
        }
        Ok(())
    }
}

/// Counter storage cost per set, in bits: one epoch counter plus one hit
/// counter per way, at 8 bits each exact or 4 bits each logarithmic.
pub fn storage_bits(mode: CounterMode, associativity: usize) -> u32 {
    let per_counter = match mode {
        CounterMode::Exact => 8,
        CounterMode::Logarithmic => 4,
    };
    per_counter * (associativity as u32 + 1)
}

/// Approximate event counter holding only a base-2 exponent.
///
/// The first event moves the counter from zero to one deterministically;
/// each later event advances the exponent with probability 2^-e. The
/// represented value 2^e tracks the true event count in expectation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogCounter {
    exponent: Option<u8>,
}

impl LogCounter {
    pub fn zero() -> Self {
        Self { exponent: None }
    }

    pub fn exponent(&self) -> Option<u8> {
        self.exponent
    }

    pub fn increment(&mut self, rng: &mut impl Rng) {
        match self.exponent {
            None => self.exponent = Some(0),
            Some(e) if e >= MAX_EXPONENT => {}
            Some(e) => {
                if rng.random_ratio(1, 1u32 << e) {
                    self.exponent = Some(e + 1);
                }
            }
        }
    }

    /// Estimated event count: 2^e, or 0 before the first event.
    pub fn estimate(&self) -> u64 {
        self.exponent.map_or(0, |e| 1u64 << e)
    }

    #[cfg(test)]
    pub(crate) fn from_exponent(exponent: Option<u8>) -> Self {
        Self { exponent }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyAction {
    None,
    Swap { hot_way: usize },
}

#[derive(Debug, Clone)]
enum SetCounters {
    Exact { accesses: u32, hits: Vec<u32> },
    Log { accesses: LogCounter, hits: Vec<LogCounter> },
}

impl SetCounters {
    fn new(mode: CounterMode, associativity: usize) -> Self {
        match mode {
            CounterMode::Exact => SetCounters::Exact {
                accesses: 0,
                hits: vec![0; associativity],
            },
            CounterMode::Logarithmic => SetCounters::Log {
                accesses: LogCounter::zero(),
                hits: vec![LogCounter::zero(); associativity],
            },
        }
    }
}

/// All per-set counters plus the RNG that drives logarithmic updates.
#[derive(Debug, Clone)]
pub struct PolicyState {
    cfg: PolicyConfig,
    sets: Vec<SetCounters>,
    rng: ChaCha8Rng,
}

impl PolicyState {
    pub fn new(cfg: PolicyConfig, set_count: usize, associativity: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            sets: (0..set_count)
                .map(|_| SetCounters::new(cfg.mode, associativity))
                .collect(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn enabled(&self) -> bool {
        self.cfg.enabled
    }

    /// Account one access to `set` (with the hit way, if any) and return the
    /// swap directive it produces. A directive fires the first time a line's
    /// hit count reaches the threshold while the line sits outside way 0.
    /// The epoch-completion check runs after the hot check.
    pub fn record_access(&mut self, set: usize, hit_way: Option<usize>) -> PolicyAction {
        if !self.cfg.enabled {
            return PolicyAction::None;
        }
        let epoch = self.cfg.epoch;
        let threshold = self.cfg.threshold;
        let rng = &mut self.rng;
        let mut action = PolicyAction::None;

        match &mut self.sets[set] {
            SetCounters::Exact { accesses, hits } => {
                *accesses = (*accesses + 1).min(epoch);
                if let Some(way) = hit_way {
                    let before = hits[way];
                    hits[way] = (before + 1).min(epoch);
                    if before < threshold && hits[way] >= threshold && way != HOME_WAY {
                        action = PolicyAction::Swap { hot_way: way };
                    }
                }
                if *accesses >= epoch {
                    *accesses = 0;
                    hits.fill(0);
                }
            }
            SetCounters::Log { accesses, hits } => {
                let hot_exp = threshold.ilog2() as u8;
                let epoch_exp = epoch.ilog2() as u8;
                accesses.increment(rng);
                if let Some(way) = hit_way {
                    let was_hot = hits[way].exponent().is_some_and(|e| e >= hot_exp);
                    hits[way].increment(rng);
                    let is_hot = hits[way].exponent().is_some_and(|e| e >= hot_exp);
                    if !was_hot && is_hot && way != HOME_WAY {
                        action = PolicyAction::Swap { hot_way: way };
                    }
                }
                if accesses.exponent().is_some_and(|e| e >= epoch_exp) {
                    *accesses = LogCounter::zero();
                    hits.fill(LogCounter::zero());
                }
            }
        }
        action
    }

    /// A frame was refilled: its counter belongs to the new line and starts cold.
    pub fn on_fill(&mut self, set: usize, way: usize) {
        if !self.cfg.enabled {
            return;
        }
        match &mut self.sets[set] {
            SetCounters::Exact { hits, .. } => hits[way] = 0,
            SetCounters::Log { hits, .. } => hits[way] = LogCounter::zero(),
        }
    }

    /// Hit counters follow their lines across a physical way swap.
    pub fn swap_ways(&mut self, set: usize, a: usize, b: usize) {
        if !self.cfg.enabled || a == b {
            return;
        }
        match &mut self.sets[set] {
            SetCounters::Exact { hits, .. } => hits.swap(a, b),
            SetCounters::Log { hits, .. } => hits.swap(a, b),
        }
    }

    /// Estimated hit count of the line currently in `way`.
    pub fn hit_estimate(&self, set: usize, way: usize) -> u64 {
        match &self.sets[set] {
            SetCounters::Exact { hits, .. } => hits[way] as u64,
            SetCounters::Log { hits, .. } => hits[way].estimate(),
        }
    }

    /// Estimated accesses into the current epoch of `set`.
    pub fn epoch_estimate(&self, set: usize) -> u64 {
        match &self.sets[set] {
            SetCounters::Exact { accesses, .. } => *accesses as u64,
            SetCounters::Log { accesses, .. } => accesses.estimate(),
        }
    }
}
