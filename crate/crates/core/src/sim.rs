//! One simulation instance: drives the cache, counters, predictor, and L0
//! through a trace while accumulating energy, latency, and statistics.
//!
//! Swap directives execute as soon as the triggering access completes, so
//! the set is migrated before anything else touches it. The blocked cycles
//! a swap costs are accounted globally: total cycles are the sum of
//! per-access latencies plus `swap_block` per executed swap.

use serde::{Deserialize, Serialize};

use crate::cache::{AccessOutcome, CacheConfig, CacheState};
use crate::energy::{EnergyLedger, EnergyTable};
use crate::error::{Error, Result};
use crate::lookup::{DesignKind, L0Cache, PredictorState, TimingParams};
use crate::policy::{PolicyAction, PolicyConfig, PolicyState, HOME_WAY};
use crate::trace::{Op, TraceRecord};

/// Everything a run needs. Instances are independent, so sweeps may run
/// many of them on separate threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub cache: CacheConfig,
    pub policy: PolicyConfig,
    pub timing: TimingParams,
    pub design: DesignKind,
    pub table: EnergyTable,
    /// Lookup rule of the L1 underneath an L0 filter.
    pub filter_l1_parallel: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            cache: CacheConfig::default(),
            policy: PolicyConfig::default(),
            timing: TimingParams::default(),
            design: DesignKind::Sequential,
            table: EnergyTable::default(),
            filter_l1_parallel: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.cache.validate()?;
        self.policy.validate()?;
        self.timing.validate()?;
        if self.table.ways() != self.cache.associativity {
            return Err(Error::config(format!(
                "energy table covers {} ways but the cache has {}",
                self.table.ways(),
                self.cache.associativity
            )));
        }
        Ok(())
    }
}

/// What one reference cost. `outcome` is `None` when the L0 filter absorbed
/// the reference and the L1 was never touched.
#[derive(Debug, Clone, Copy)]
pub struct StepResult {
    pub outcome: Option<AccessOutcome>,
    pub cycles: u64,
    pub sram_pj: f64,
    pub wire_pj: f64,
    pub swap_pj: f64,
    pub counter_pj: f64,
    pub l0_pj: f64,
    pub predicted_way: Option<usize>,
    pub predicted_correct: Option<bool>,
    pub l0_hit: Option<bool>,
}

impl StepResult {
    fn new() -> Self {
        Self {
            outcome: None,
            cycles: 0,
            sram_pj: 0.0,
            wire_pj: 0.0,
            swap_pj: 0.0,
            counter_pj: 0.0,
            l0_pj: 0.0,
            predicted_way: None,
            predicted_correct: None,
            l0_hit: None,
        }
    }

    pub fn energy_pj(&self) -> f64 {
        self.sram_pj + self.wire_pj + self.swap_pj + self.counter_pj + self.l0_pj
    }
}

/// Raw counters accumulated over a run.
#[derive(Debug, Clone, Default)]
pub struct RunTotals {
    pub loads: u64,
    pub stores: u64,
    /// Accesses that reached the L1 (equals loads + stores except under the
    /// filter design, where the L0 absorbs load hits).
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub swaps: u64,
    pub evicted_dirty: u64,
    pub blocked_cycles: u64,
    /// Sum of per-access latencies, excluding swap blocking.
    pub access_cycles: u64,
    pub way_hits: Vec<u64>,
    pub predictions: u64,
    pub predictions_correct: u64,
    pub l0_hits: u64,
    pub l0_misses: u64,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    cache: CacheState,
    policy: PolicyState,
    predictor: Option<PredictorState>,
    l0: Option<L0Cache>,
    ledger: EnergyLedger,
    totals: RunTotals,
}

enum LookupRule {
    Sequential,
    Parallel,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let cache = CacheState::new(cfg.cache)?;
        let policy = PolicyState::new(
            cfg.policy,
            cfg.cache.set_count() as usize,
            cfg.cache.associativity,
        )?;
        let predictor = PredictorState::for_design(cfg.design);
        let l0 = if cfg.design == DesignKind::Filter {
            Some(L0Cache::new(cfg.cache.line_bytes)?)
        } else {
            None
        };
        let totals = RunTotals {
            way_hits: vec![0; cfg.cache.associativity],
            ..RunTotals::default()
        };
        Ok(Self {
            cache,
            policy,
            predictor,
            l0,
            ledger: EnergyLedger::default(),
            totals,
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn totals(&self) -> &RunTotals {
        &self.totals
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn cache(&self) -> &CacheState {
        &self.cache
    }

    pub fn predictor(&self) -> Option<&PredictorState> {
        self.predictor.as_ref()
    }

    /// Estimated counter values for one set: (epoch accesses, per-way hits).
    pub fn counter_snapshot(&self, set: usize) -> (u64, Vec<u64>) {
        let hits = (0..self.cfg.cache.associativity)
            .map(|w| self.policy.hit_estimate(set, w))
            .collect();
        (self.policy.epoch_estimate(set), hits)
    }

    pub fn total_cycles(&self) -> u64 {
        self.totals.access_cycles + self.totals.blocked_cycles
    }

    fn charge_probe(&mut self, res: &mut StepResult, rule: LookupRule, way: usize) -> Result<()> {
        let design = match rule {
            LookupRule::Sequential => DesignKind::Sequential,
            LookupRule::Parallel => DesignKind::Parallel,
        };
        let (sram, wire) = self.cfg.table.access_energy(design, way)?;
        res.sram_pj += sram;
        res.wire_pj += wire;
        self.ledger.sram_pj += sram;
        self.ledger.wire_pj += wire;
        Ok(())
    }

    fn l1_rule(&self) -> LookupRule {
        match self.cfg.design {
            DesignKind::Parallel => LookupRule::Parallel,
            DesignKind::Filter if self.cfg.filter_l1_parallel => LookupRule::Parallel,
            _ => LookupRule::Sequential,
        }
    }

    /// Run one reference through the L1: cache state, statistics, hot-line
    /// counters, and any swap directive the access triggers.
    fn l1_reference(&mut self, rec: &TraceRecord, res: &mut StepResult) -> Result<AccessOutcome> {
        let (set_u64, _) = self.cfg.cache.index_of(rec.addr);
        let set = set_u64 as usize;
        let outcome = self.cache.access(rec)?;

        self.totals.accesses += 1;
        if outcome.is_hit() {
            self.totals.hits += 1;
            self.totals.way_hits[outcome.way] += 1;
        } else {
            self.totals.misses += 1;
            if outcome.victim_dirty {
                self.totals.evicted_dirty += 1;
            }
        }

        if self.policy.enabled() {
            if !outcome.is_hit() {
                self.policy.on_fill(set, outcome.way);
            }
            let hit_way = outcome.is_hit().then_some(outcome.way);
            let action = self.policy.record_access(set, hit_way);

            let counter_pj = self.cfg.table.counter_energy_per_access();
            res.counter_pj += counter_pj;
            self.ledger.counter_pj += counter_pj;

            if let PolicyAction::Swap { hot_way } = action {
                self.cache.swap_ways(set, hot_way, HOME_WAY);
                self.policy.swap_ways(set, hot_way, HOME_WAY);
                let swap_pj = self.cfg.table.swap_energy(hot_way, HOME_WAY)?;
                res.swap_pj += swap_pj;
                self.ledger.swap_pj += swap_pj;
                self.totals.swaps += 1;
                self.totals.blocked_cycles += self.cfg.timing.swap_block;
            }
        }
        Ok(outcome)
    }

    /// Simulate one reference under the configured design.
    pub fn step(&mut self, rec: &TraceRecord) -> Result<StepResult> {
        match rec.op {
            Op::Load => self.totals.loads += 1,
            Op::Store => self.totals.stores += 1,
        }
        let mut res = StepResult::new();
        let timing = self.cfg.timing;

        match self.cfg.design {
            DesignKind::Sequential => {
                let out = self.l1_reference(rec, &mut res)?;
                self.charge_probe(&mut res, LookupRule::Sequential, out.way)?;
                res.cycles = if out.is_hit() {
                    timing.seq_hit
                } else {
                    timing.seq_hit + timing.miss_penalty
                };
                res.outcome = Some(out);
            }
            DesignKind::Parallel => {
                let out = self.l1_reference(rec, &mut res)?;
                self.charge_probe(&mut res, LookupRule::Parallel, out.way)?;
                res.cycles = if out.is_hit() {
                    timing.par_hit
                } else {
                    timing.par_hit + timing.miss_penalty
                };
                res.outcome = Some(out);
            }
            DesignKind::PredictionStatic | DesignKind::PredictionPc => {
                self.step_prediction(rec, &mut res)?;
            }
            DesignKind::Filter => {
                self.step_filter(rec, &mut res)?;
            }
        }

        self.totals.access_cycles += res.cycles;
        Ok(res)
    }

    /// Loads speculatively probe the predicted way; a wrong guess costs an
    /// extra cycle and a probe of the correct way. Stores go tag-first and
    /// probe only the way that answers.
    fn step_prediction(&mut self, rec: &TraceRecord, res: &mut StepResult) -> Result<()> {
        let timing = self.cfg.timing;
        match rec.op {
            Op::Load => {
                let predicted = self
                    .predictor
                    .as_ref()
                    .expect("prediction design has a predictor")
                    .predict(rec.pc);
                res.predicted_way = Some(predicted);
                let out = self.l1_reference(rec, res)?;
                self.charge_probe(res, LookupRule::Sequential, predicted)?;
                if out.is_hit() {
                    let correct = out.way == predicted;
                    res.predicted_correct = Some(correct);
                    self.totals.predictions += 1;
                    if correct {
                        res.cycles = timing.pred_correct_load;
                        self.totals.predictions_correct += 1;
                    } else {
                        self.charge_probe(res, LookupRule::Sequential, out.way)?;
                        res.cycles = timing.pred_correct_load + timing.pred_penalty;
                    }
                } else {
                    // Fill probe; the miss penalty subsumes the reprobes.
                    self.charge_probe(res, LookupRule::Sequential, out.way)?;
                    res.cycles = timing.pred_correct_load + timing.miss_penalty;
                }
                if let Some(p) = self.predictor.as_mut() {
                    p.update(rec.pc, out.way);
                }
                res.outcome = Some(out);
            }
            Op::Store => {
                let out = self.l1_reference(rec, res)?;
                self.charge_probe(res, LookupRule::Sequential, out.way)?;
                res.cycles = if out.is_hit() {
                    timing.pred_correct_load + timing.pred_penalty
                } else {
                    timing.pred_correct_load + timing.pred_penalty + timing.miss_penalty
                };
                res.outcome = Some(out);
            }
        }
        Ok(())
    }

    /// Load hits in the L0 never reach the L1. Everything else runs the L1
    /// flow underneath: stores write through so the L1 stays the point of
    /// truth for dirtiness, and the L0 fills on every L1-served reference.
    fn step_filter(&mut self, rec: &TraceRecord, res: &mut StepResult) -> Result<()> {
        let timing = self.cfg.timing;
        let l0 = self.l0.as_mut().expect("filter design has an L0");
        let l0_hit = l0.lookup(rec.addr);
        let l0_pj = l0.energy_pj();
        res.l0_hit = Some(l0_hit);
        res.l0_pj += l0_pj;
        self.ledger.l0_pj += l0_pj;
        if l0_hit {
            self.totals.l0_hits += 1;
        } else {
            self.totals.l0_misses += 1;
        }

        if l0_hit && rec.op == Op::Load {
            res.cycles = timing.l0_hit;
            return Ok(());
        }

        let out = self.l1_reference(rec, res)?;
        let rule = self.l1_rule();
        let hit_cycles = match rule {
            LookupRule::Sequential => timing.seq_hit,
            LookupRule::Parallel => timing.par_hit,
        };
        self.charge_probe(res, rule, out.way)?;
        res.cycles = timing.l0_hit
            + if out.is_hit() {
                hit_cycles
            } else {
                hit_cycles + timing.miss_penalty
            };
        if !l0_hit {
            self.l0.as_mut().expect("filter design has an L0").fill(rec.addr);
        }
        res.outcome = Some(out);
        Ok(())
    }

    pub fn run(&mut self, records: &[TraceRecord]) -> Result<()> {
        for rec in records {
            self.step(rec)?;
        }
        Ok(())
    }

    /// Structural invariants checked before a report is emitted.
    pub fn check_invariants(&self) -> Result<()> {
        self.cache.check_invariants()?;
        let t = &self.totals;
        if t.hits + t.misses != t.accesses {
            return Err(Error::internal("hits + misses != accesses"));
        }
        if t.way_hits.iter().sum::<u64>() != t.hits {
            return Err(Error::internal("way histogram does not sum to hits"));
        }
        if t.predictions_correct > t.predictions {
            return Err(Error::internal("correct predictions exceed predictions"));
        }
        if t.blocked_cycles != t.swaps * self.cfg.timing.swap_block {
            return Err(Error::internal("blocked cycles != swap_block x swaps"));
        }
        if self.cfg.design == DesignKind::Filter && t.l0_hits + t.l0_misses != t.loads + t.stores {
            return Err(Error::internal("L0 hits + misses != references"));
        }
        if !self.policy.enabled() && (t.swaps != 0 || self.ledger.swap_pj != 0.0) {
            return Err(Error::internal("disabled policy produced swaps"));
        }
        let l = &self.ledger;
        for (name, v) in [
            ("sram", l.sram_pj),
            ("wire", l.wire_pj),
            ("swap", l.swap_pj),
            ("counter", l.counter_pj),
            ("l0", l.l0_pj),
        ] {
            if !(v >= 0.0) {
                return Err(Error::internal(format!("negative {name} energy")));
            }
        }
        Ok(())
    }
}
