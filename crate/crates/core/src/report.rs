//! Report assembly, the offline hot-line analyzer, epoch sweeps, and the
//! JSON/CSV emitters.
//!
//! Serialization is deterministic: fixed field order, energies rounded to
//! 3 decimals, ratios to 4. Identical runs produce identical bytes.

use serde::{Serialize, Serializer};
use std::collections::{HashMap, HashSet};

use crate::cache::{CacheConfig, CacheState};
use crate::error::{Error, Result};
use crate::lookup::DesignKind;
use crate::policy::RNG_ALGORITHM;
use crate::sim::{SimConfig, Simulator};
use crate::trace::TraceRecord;

/// Schema tag stamped on every emitted document.
pub const REPORT_SCHEMA: &str = "hlsw-report-1";

/// Offline hot-line definition: a line is hot if it collects at least
/// [`HOT_WINDOW_HITS`] hits within any [`HOT_WINDOW_ACCESSES`]-access
/// window of its set.
pub const HOT_WINDOW_ACCESSES: u32 = 128;
pub const HOT_WINDOW_HITS: u32 = 64;

fn round_to(value: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (value * scale).round() / scale
}

fn ser_fixed3<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to(*v, 3))
}

fn ser_fixed4<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to(*v, 4))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub design: String,
    pub holiswap: bool,
    pub epoch: u32,
    pub threshold: u32,
    pub counters: String,
    pub seed: u64,
    pub rng: String,
    pub capacity_bytes: u64,
    pub line_bytes: u64,
    pub associativity: usize,
    pub set_count: u64,
    pub miss_penalty: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictor_table_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0_bytes: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub accesses: u64,
    pub loads: u64,
    pub stores: u64,
    pub hits: u64,
    pub misses: u64,
    pub swaps: u64,
    pub evicted_dirty: u64,
    pub blocked_cycles: u64,
    pub total_cycles: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    #[serde(serialize_with = "ser_fixed3")]
    pub sram_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub wire_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub swap_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub counter_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub l0_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub total_pj: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionStats {
    pub predictions: u64,
    pub correct: u64,
    #[serde(serialize_with = "ser_fixed4")]
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct L0Stats {
    pub hits: u64,
    pub misses: u64,
}

/// Offline hot-line statistics of a trace, independent of the policy.
#[derive(Debug, Clone, Serialize)]
pub struct HotLineStats {
    #[serde(serialize_with = "ser_fixed4")]
    pub hot_access_share: f64,
    #[serde(serialize_with = "ser_fixed4")]
    pub hot_line_share: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub mean_hot_duration: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub mean_cold_duration: f64,
    pub hot_line_count: u64,
    pub line_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub schema: String,
    pub config: ConfigEcho,
    pub totals: Totals,
    pub energy: EnergyBreakdown,
    pub way_histogram: Vec<u64>,
    pub prediction: PredictionStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<L0Stats>,
    pub hot_lines: HotLineStats,
}

impl Simulator {
    /// Assemble the final report, cross-checking every accounting invariant
    /// first. The trace is re-analyzed offline for hot-line statistics.
    pub fn report(&self, trace: &[TraceRecord]) -> Result<SimReport> {
        self.check_invariants()?;
        let cfg = self.config();
        let totals = self.totals();
        let ledger = self.ledger();
        let hot_lines = hot_line_stats(trace, &cfg.cache)?;

        let accuracy = if totals.predictions == 0 {
            0.0
        } else {
            totals.predictions_correct as f64 / totals.predictions as f64
        };
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::internal("prediction accuracy outside [0,1]"));
        }

        Ok(SimReport {
            schema: REPORT_SCHEMA.to_string(),
            config: ConfigEcho {
                design: cfg.design.to_string(),
                holiswap: cfg.policy.enabled,
                epoch: cfg.policy.epoch,
                threshold: cfg.policy.threshold,
                counters: cfg.policy.mode.to_string(),
                seed: cfg.policy.seed,
                rng: RNG_ALGORITHM.to_string(),
                capacity_bytes: cfg.cache.capacity_bytes,
                line_bytes: cfg.cache.line_bytes,
                associativity: cfg.cache.associativity,
                set_count: cfg.cache.set_count(),
                miss_penalty: cfg.timing.miss_penalty,
                predictor_table_bits: self
                    .predictor()
                    .map(|p| p.storage_bits(cfg.cache.associativity)),
                l0_bytes: (cfg.design == DesignKind::Filter)
                    .then_some(crate::lookup::L0_CAPACITY_BYTES),
            },
            totals: Totals {
                accesses: totals.accesses,
                loads: totals.loads,
                stores: totals.stores,
                hits: totals.hits,
                misses: totals.misses,
                swaps: totals.swaps,
                evicted_dirty: totals.evicted_dirty,
                blocked_cycles: totals.blocked_cycles,
                total_cycles: self.total_cycles(),
            },
            energy: EnergyBreakdown {
                sram_pj: ledger.sram_pj,
                wire_pj: ledger.wire_pj,
                swap_pj: ledger.swap_pj,
                counter_pj: ledger.counter_pj,
                l0_pj: ledger.l0_pj,
                total_pj: ledger.total(),
            },
            way_histogram: totals.way_hits.clone(),
            prediction: PredictionStats {
                predictions: totals.predictions,
                correct: totals.predictions_correct,
                accuracy,
            },
            l0: (cfg.design == DesignKind::Filter).then_some(L0Stats {
                hits: totals.l0_hits,
                misses: totals.l0_misses,
            }),
            hot_lines,
        })
    }
}

/// Offline hot-line analysis: replay the trace through a plain LRU cache,
/// slide non-overlapping 128-access windows per set, and mark a line hot
/// once it collects 64 hits inside one window. Durations count accesses to
/// the line's set between fill and eviction, measured per residency;
/// still-resident lines are measured up to the end of the trace.
pub fn hot_line_stats(trace: &[TraceRecord], cfg: &CacheConfig) -> Result<HotLineStats> {
    let mut cache = CacheState::new(*cfg)?;
    let sets = cfg.set_count() as usize;
    let assoc = cfg.associativity;

    let mut window_len = vec![0u32; sets];
    let mut window_hits: Vec<HashMap<u64, u32>> = vec![HashMap::new(); sets];
    let mut set_accesses = vec![0u64; sets];
    // (fill time, tag) of the line currently resident in each frame
    let mut resident: Vec<Option<(u64, u64)>> = vec![None; sets * assoc];
    let mut hot: HashSet<(usize, u64)> = HashSet::new();
    let mut seen: HashSet<(usize, u64)> = HashSet::new();
    let mut residencies: Vec<(usize, u64, u64)> = Vec::new(); // (set, tag, duration)

    for rec in trace {
        let (set_u64, tag) = cfg.index_of(rec.addr);
        let set = set_u64 as usize;
        seen.insert((set, tag));
        set_accesses[set] += 1;
        let out = cache.access(rec)?;

        if out.is_hit() {
            let hits = window_hits[set].entry(tag).or_insert(0);
            *hits += 1;
            if *hits >= HOT_WINDOW_HITS {
                hot.insert((set, tag));
            }
        } else {
            let frame = set * assoc + out.way;
            if let Some((filled_at, old_tag)) = resident[frame] {
                // the eviction happens within this access, before the fill
                residencies.push((set, old_tag, set_accesses[set] - 1 - filled_at));
            }
            resident[frame] = Some((set_accesses[set], tag));
        }

        window_len[set] += 1;
        if window_len[set] >= HOT_WINDOW_ACCESSES {
            window_len[set] = 0;
            window_hits[set].clear();
        }
    }
    for (frame, entry) in resident.iter().enumerate() {
        if let Some((filled_at, tag)) = entry {
            let set = frame / assoc;
            residencies.push((set, *tag, set_accesses[set] - filled_at));
        }
    }

    let total_accesses = trace.len() as u64;
    let hot_accesses = trace
        .iter()
        .filter(|rec| {
            let (set, tag) = cfg.index_of(rec.addr);
            hot.contains(&(set as usize, tag))
        })
        .count() as u64;

    let mut hot_dur = (0u64, 0u64); // (sum, count)
    let mut cold_dur = (0u64, 0u64);
    for &(set, tag, duration) in &residencies {
        let bucket = if hot.contains(&(set, tag)) {
            &mut hot_dur
        } else {
            &mut cold_dur
        };
        bucket.0 += duration;
        bucket.1 += 1;
    }
    let mean = |(sum, n): (u64, u64)| if n == 0 { 0.0 } else { sum as f64 / n as f64 };

    Ok(HotLineStats {
        hot_access_share: if total_accesses == 0 {
            0.0
        } else {
            hot_accesses as f64 / total_accesses as f64
        },
        hot_line_share: if seen.is_empty() {
            0.0
        } else {
            hot.len() as f64 / seen.len() as f64
        },
        mean_hot_duration: mean(hot_dur),
        mean_cold_duration: mean(cold_dur),
        hot_line_count: hot.len() as u64,
        line_count: seen.len() as u64,
    })
}

/// One row of an epoch sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epoch: u32,
    pub threshold: u32,
    pub swaps: u64,
    pub blocked_cycles: u64,
    pub total_cycles: u64,
    #[serde(serialize_with = "ser_fixed4")]
    pub blocked_share: f64,
    pub hits: u64,
    pub misses: u64,
    #[serde(serialize_with = "ser_fixed3")]
    pub sram_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub wire_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub swap_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub counter_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub l0_pj: f64,
    #[serde(serialize_with = "ser_fixed3")]
    pub total_pj: f64,
    /// Total energy relative to the same design with migration disabled.
    #[serde(serialize_with = "ser_fixed4")]
    pub total_vs_baseline: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema: String,
    #[serde(serialize_with = "ser_fixed3")]
    pub baseline_total_pj: f64,
    pub rows: Vec<SweepRow>,
}

/// Run one full simulation per epoch length (threshold fixed at E/2) over
/// the same trace and seed, plus one migration-disabled baseline run for
/// normalization. Rows come back sorted by epoch.
pub fn sweep_epoch(base: &SimConfig, epochs: &[u32], trace: &[TraceRecord]) -> Result<SweepReport> {
    if epochs.is_empty() {
        return Err(Error::config("sweep needs at least one epoch value"));
    }
    let mut sorted: Vec<u32> = epochs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut baseline_cfg = base.clone();
    baseline_cfg.policy.enabled = false;
    let mut baseline = Simulator::new(baseline_cfg)?;
    baseline.run(trace)?;
    baseline.check_invariants()?;
    let baseline_total = baseline.ledger().total();

    let mut rows = Vec::with_capacity(sorted.len());
    for &epoch in &sorted {
        let mut cfg = base.clone();
        cfg.policy.enabled = true;
        cfg.policy.epoch = epoch;
        cfg.policy.threshold = (epoch / 2).max(1);
        let mut sim = Simulator::new(cfg)?;
        sim.run(trace)?;
        sim.check_invariants()?;
        let totals = sim.totals();
        let ledger = sim.ledger();
        let total_cycles = sim.total_cycles();
        rows.push(SweepRow {
            epoch,
            threshold: (epoch / 2).max(1),
            swaps: totals.swaps,
            blocked_cycles: totals.blocked_cycles,
            total_cycles,
            blocked_share: if total_cycles == 0 {
                0.0
            } else {
                totals.blocked_cycles as f64 / total_cycles as f64
            },
            hits: totals.hits,
            misses: totals.misses,
            sram_pj: ledger.sram_pj,
            wire_pj: ledger.wire_pj,
            swap_pj: ledger.swap_pj,
            counter_pj: ledger.counter_pj,
            l0_pj: ledger.l0_pj,
            total_pj: ledger.total(),
            total_vs_baseline: if baseline_total == 0.0 {
                0.0
            } else {
                ledger.total() / baseline_total
            },
        });
    }
    Ok(SweepReport {
        schema: REPORT_SCHEMA.to_string(),
        baseline_total_pj: baseline_total,
        rows,
    })
}

pub fn emit_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serialization");
    out.push('\n');
    out
}

pub fn emit_csv(report: &SimReport) -> String {
    let mut header = vec![
        "design",
        "holiswap",
        "epoch",
        "threshold",
        "counters",
        "seed",
        "accesses",
        "loads",
        "stores",
        "hits",
        "misses",
        "swaps",
        "evicted_dirty",
        "blocked_cycles",
        "total_cycles",
        "sram_pj",
        "wire_pj",
        "swap_pj",
        "counter_pj",
        "l0_pj",
        "total_pj",
        "predictions",
        "correct",
        "accuracy",
        "l0_hits",
        "l0_misses",
        "hot_access_share",
        "hot_line_share",
        "mean_hot_duration",
        "mean_cold_duration",
    ]
    .into_iter()
    .map(str::to_string)
    .collect::<Vec<_>>();
    for way in 0..report.way_histogram.len() {
        header.push(format!("way{way}_hits"));
    }

    let t = &report.totals;
    let e = &report.energy;
    let (l0_hits, l0_misses) = report.l0.as_ref().map_or((0, 0), |l| (l.hits, l.misses));
    let mut row = vec![
        report.config.design.clone(),
        report.config.holiswap.to_string(),
        report.config.epoch.to_string(),
        report.config.threshold.to_string(),
        report.config.counters.clone(),
        report.config.seed.to_string(),
        t.accesses.to_string(),
        t.loads.to_string(),
        t.stores.to_string(),
        t.hits.to_string(),
        t.misses.to_string(),
        t.swaps.to_string(),
        t.evicted_dirty.to_string(),
        t.blocked_cycles.to_string(),
        t.total_cycles.to_string(),
        format!("{:.3}", e.sram_pj),
        format!("{:.3}", e.wire_pj),
        format!("{:.3}", e.swap_pj),
        format!("{:.3}", e.counter_pj),
        format!("{:.3}", e.l0_pj),
        format!("{:.3}", e.total_pj),
        report.prediction.predictions.to_string(),
        report.prediction.correct.to_string(),
        format!("{:.4}", report.prediction.accuracy),
        l0_hits.to_string(),
        l0_misses.to_string(),
        format!("{:.4}", report.hot_lines.hot_access_share),
        format!("{:.4}", report.hot_lines.hot_line_share),
        format!("{:.3}", report.hot_lines.mean_hot_duration),
        format!("{:.3}", report.hot_lines.mean_cold_duration),
    ];
    for &hits in &report.way_histogram {
        row.push(hits.to_string());
    }
    format!("{}\n{}\n", header.join(","), row.join(","))
}

pub fn emit_sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "epoch,threshold,swaps,blocked_cycles,total_cycles,blocked_share,hits,misses,\
         sram_pj,wire_pj,swap_pj,counter_pj,l0_pj,total_pj,total_vs_baseline\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.4},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.4}\n",
            r.epoch,
            r.threshold,
            r.swaps,
            r.blocked_cycles,
            r.total_cycles,
            r.blocked_share,
            r.hits,
            r.misses,
            r.sram_pj,
            r.wire_pj,
            r.swap_pj,
            r.counter_pj,
            r.l0_pj,
            r.total_pj,
            r.total_vs_baseline,
        ));
    }
    out
}

pub fn emit_hot_lines_csv(stats: &HotLineStats) -> String {
    format!(
        "hot_access_share,hot_line_share,mean_hot_duration,mean_cold_duration,hot_line_count,line_count\n\
         {:.4},{:.4},{:.3},{:.3},{},{}\n",
        stats.hot_access_share,
        stats.hot_line_share,
        stats.mean_hot_duration,
        stats.mean_cold_duration,
        stats.hot_line_count,
        stats.line_count,
    )
}
