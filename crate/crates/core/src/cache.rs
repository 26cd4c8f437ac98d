//! Logical set-associative cache with explicit physical way placement,
//! LRU replacement, and a content-preserving way-swap primitive.
//!
//! A line's physical way determines its access energy, never its
//! replacement behavior: recency ranks travel with lines across swaps, so
//! the hit/miss sequence of a trace is identical whether or not lines are
//! ever migrated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Op, TraceRecord};

/// Cache geometry. Set count is derived and must come out a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity_bytes: u64,
    pub line_bytes: u64,
    pub associativity: usize,
}

impl Default for CacheConfig {
    /// 32 KiB, 64 B lines, 4 ways, 128 sets.
    fn default() -> Self {
        Self {
            capacity_bytes: 32 * 1024,
            line_bytes: 64,
            associativity: 4,
        }
    }
}

impl CacheConfig {
    pub fn new(capacity_bytes: u64, line_bytes: u64, associativity: usize) -> Result<Self> {
        let cfg = Self {
            capacity_bytes,
            line_bytes,
            associativity,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity_bytes == 0 || self.line_bytes == 0 || self.associativity == 0 {
            return Err(Error::config("cache dimensions must be positive"));
        }
        if !self.line_bytes.is_power_of_two() {
            return Err(Error::config("line_bytes must be a power of two"));
        }
        let line_ways = self.line_bytes * self.associativity as u64;
        if self.capacity_bytes % line_ways != 0 {
            return Err(Error::config(format!(
                "capacity {} is not line_bytes x associativity x sets",
                self.capacity_bytes
            )));
        }
        let sets = self.capacity_bytes / line_ways;
        if !sets.is_power_of_two() {
            return Err(Error::config(format!(
                "set count {sets} must be a power of two"
            )));
        }
        Ok(())
    }

    pub fn set_count(&self) -> u64 {
        self.capacity_bytes / (self.line_bytes * self.associativity as u64)
    }

    /// Split a byte address into (set index, tag).
    pub fn index_of(&self, addr: u64) -> (u64, u64) {
        let line = addr / self.line_bytes;
        let sets = self.set_count();
        (line % sets, line / sets)
    }
}

/// One line frame: metadata only (this simulator carries no data payload).
/// An invalid frame's tag is meaningless and is never compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheLine {
    pub valid: bool,
    pub tag: u64,
    pub dirty: bool,
}

/// One set: the line frames plus an LRU order over physical way indices,
/// most- to least-recently used.
#[derive(Debug, Clone)]
pub struct CacheSet {
    ways: Vec<CacheLine>,
    lru_order: Vec<usize>,
}

impl CacheSet {
    pub fn new(associativity: usize) -> Self {
        Self {
            ways: vec![CacheLine::default(); associativity],
            lru_order: (0..associativity).collect(),
        }
    }

    pub fn ways(&self) -> &[CacheLine] {
        &self.ways
    }

    pub fn lru_order(&self) -> &[usize] {
        &self.lru_order
    }

    /// Tag probe. At most one valid way may match; two matches mean fill or
    /// swap corrupted the set.
    pub fn lookup(&self, tag: u64) -> Result<Option<usize>> {
        let mut found = None;
        for (way, line) in self.ways.iter().enumerate() {
            if line.valid && line.tag == tag {
                if found.is_some() {
                    return Err(Error::internal(format!(
                        "duplicate valid tag {tag:#x} within one set"
                    )));
                }
                found = Some(way);
            }
        }
        Ok(found)
    }

    fn touch_mru(&mut self, way: usize) {
        let pos = self
            .lru_order
            .iter()
            .position(|&w| w == way)
            .expect("way present in lru order");
        self.lru_order.remove(pos);
        self.lru_order.insert(0, way);
    }

    fn lru_way(&self) -> usize {
        *self.lru_order.last().expect("set has at least one way")
    }

    /// Exchange two physical ways, including valid/dirty bits. Recency ranks
    /// are rewritten so each logical line keeps its rank; swapping twice
    /// restores the original state exactly.
    pub fn swap_ways(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.ways.swap(a, b);
        for slot in self.lru_order.iter_mut() {
            if *slot == a {
                *slot = b;
            } else if *slot == b {
                *slot = a;
            }
        }
    }

    /// Install a tag into a specific way and make it MRU.
    pub(crate) fn install(&mut self, way: usize, tag: u64, dirty: bool) {
        self.ways[way] = CacheLine {
            valid: true,
            tag,
            dirty,
        };
        self.touch_mru(way);
    }

    fn check_invariants(&self) -> Result<()> {
        let assoc = self.ways.len();
        let mut seen = vec![false; assoc];
        for &w in &self.lru_order {
            if w >= assoc || seen[w] {
                return Err(Error::internal("lru order is not a permutation"));
            }
            seen[w] = true;
        }
        if self.lru_order.len() != assoc {
            return Err(Error::internal("lru order is not a permutation"));
        }
        for (i, a) in self.ways.iter().enumerate() {
            for b in self.ways.iter().skip(i + 1) {
                if a.valid && b.valid && a.tag == b.tag {
                    return Err(Error::internal("duplicate valid tags within one set"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Hit,
    Miss,
}

/// What one reference did to the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessOutcome {
    pub kind: AccessKind,
    /// Physical way that served the hit or received the fill.
    pub way: usize,
    pub victim_evicted: bool,
    pub victim_dirty: bool,
    pub victim_tag: Option<u64>,
}

impl AccessOutcome {
    pub fn is_hit(&self) -> bool {
        self.kind == AccessKind::Hit
    }
}

/// The full cache: one [`CacheSet`] per set index.
#[derive(Debug, Clone)]
pub struct CacheState {
    cfg: CacheConfig,
    sets: Vec<CacheSet>,
}

impl CacheState {
    pub fn new(cfg: CacheConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            sets: vec![CacheSet::new(cfg.associativity); cfg.set_count() as usize],
            cfg,
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn set(&self, index: usize) -> &CacheSet {
        &self.sets[index]
    }

    pub fn sets(&self) -> &[CacheSet] {
        &self.sets
    }

    /// Service one reference. Hits refresh recency; misses evict the LRU way
    /// and install the new line as MRU. Stores dirty the line (write-back,
    /// write-allocate).
    pub fn access(&mut self, rec: &TraceRecord) -> Result<AccessOutcome> {
        let (set_idx, tag) = self.cfg.index_of(rec.addr);
        let is_store = rec.op == Op::Store;
        let set = &mut self.sets[set_idx as usize];
        if let Some(way) = set.lookup(tag)? {
            if is_store {
                set.ways[way].dirty = true;
            }
            set.touch_mru(way);
            return Ok(AccessOutcome {
                kind: AccessKind::Hit,
                way,
                victim_evicted: false,
                victim_dirty: false,
                victim_tag: None,
            });
        }
        let way = set.lru_way();
        let victim = set.ways[way];
        set.install(way, tag, is_store);
        Ok(AccessOutcome {
            kind: AccessKind::Miss,
            way,
            victim_evicted: victim.valid,
            victim_dirty: victim.valid && victim.dirty,
            victim_tag: if victim.valid { Some(victim.tag) } else { None },
        })
    }

    /// Exchange two physical ways of one set. A no-op when `a == b`.
    pub fn swap_ways(&mut self, set_index: usize, a: usize, b: usize) {
        self.sets[set_index].swap_ways(a, b);
    }

    /// Validate permutation and unique-tag invariants across all sets.
    pub fn check_invariants(&self) -> Result<()> {
        for set in &self.sets {
            set.check_invariants()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(addr: u64) -> TraceRecord {
        TraceRecord {
            pc: 0x1000,
            addr,
            op: Op::Load,
        }
    }

    fn store(addr: u64) -> TraceRecord {
        TraceRecord {
            pc: 0x1000,
            addr,
            op: Op::Store,
        }
    }

    /// Address of `tag` in `set` under the default config.
    fn addr_of(set: u64, tag: u64) -> u64 {
        let cfg = CacheConfig::default();
        (tag * cfg.set_count() + set) * cfg.line_bytes
    }

    #[test]
    fn default_config_geometry() {
        let cfg = CacheConfig::default();
        assert_eq!(cfg.set_count(), 128);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_dimensions() {
        assert!(CacheConfig::new(0, 64, 4).is_err());
        assert!(CacheConfig::new(32 * 1024, 48, 4).is_err()); // non power-of-two line
        assert!(CacheConfig::new(3 * 1024, 64, 4).is_err()); // 12 sets
    }

    #[test]
    fn index_of_zero_address() {
        let cfg = CacheConfig::default();
        assert_eq!(cfg.index_of(0x0), (0, 0));
    }

    #[test]
    fn index_of_one_line_stride() {
        let cfg = CacheConfig::default();
        assert_eq!(cfg.index_of(0x40), (1, 0));
    }

    #[test]
    fn index_of_full_wrap() {
        // 8192 / 64 = 128 lines: exactly one full index wrap.
        let cfg = CacheConfig::default();
        assert_eq!(cfg.index_of(0x2000), (0, 1));
    }

    #[test]
    fn lookup_on_empty_set_misses() {
        let set = CacheSet::new(4);
        assert_eq!(set.lookup(42).unwrap(), None);
    }

    #[test]
    fn lookup_finds_installed_way() {
        let mut set = CacheSet::new(4);
        set.install(2, 7, false);
        assert_eq!(set.lookup(7).unwrap(), Some(2));
    }

    #[test]
    fn lookup_matches_exactly_one_of_full_set() {
        let mut set = CacheSet::new(4);
        for (way, tag) in [1u64, 2, 3, 4].into_iter().enumerate() {
            set.install(way, tag, false);
        }
        assert_eq!(set.lookup(4).unwrap(), Some(3));
    }

    #[test]
    fn duplicate_tags_are_reported_as_corruption() {
        let mut set = CacheSet::new(4);
        set.install(0, 9, false);
        set.install(3, 9, false);
        assert!(matches!(set.lookup(9), Err(Error::Internal(_))));
        assert!(set.check_invariants().is_err());
    }

    #[test]
    fn cold_access_misses_without_eviction() {
        let mut cache = CacheState::new(CacheConfig::default()).unwrap();
        let out = cache.access(&load(0x1234)).unwrap();
        assert_eq!(out.kind, AccessKind::Miss);
        assert!(!out.victim_evicted);
        assert!(!out.victim_dirty);
    }

    #[test]
    fn repeat_access_hits_same_way() {
        let mut cache = CacheState::new(CacheConfig::default()).unwrap();
        let first = cache.access(&load(0x1234)).unwrap();
        let second = cache.access(&load(0x1234)).unwrap();
        assert_eq!(second.kind, AccessKind::Hit);
        assert_eq!(second.way, first.way);
    }

    #[test]
    fn lru_evicts_oldest_of_five_same_set_tags() {
        // Five distinct tags of one set, then the first again: the fifth fill
        // evicted it, so the re-access must miss.
        let mut cache = CacheState::new(CacheConfig::default()).unwrap();
        for tag in 0..5u64 {
            let out = cache.access(&load(addr_of(3, tag))).unwrap();
            assert_eq!(out.kind, AccessKind::Miss);
            if tag == 4 {
                assert_eq!(out.victim_tag, Some(0));
            }
        }
        let out = cache.access(&load(addr_of(3, 0))).unwrap();
        assert_eq!(out.kind, AccessKind::Miss);
    }

    #[test]
    fn store_dirty_travels_to_eviction() {
        let mut cache = CacheState::new(CacheConfig::default()).unwrap();
        cache.access(&store(addr_of(0, 0))).unwrap();
        for tag in 1..4u64 {
            cache.access(&load(addr_of(0, tag))).unwrap();
        }
        let out = cache.access(&load(addr_of(0, 4))).unwrap();
        assert_eq!(out.victim_tag, Some(0));
        assert!(out.victim_dirty);
    }

    #[test]
    fn swap_exchanges_tags() {
        let mut set = CacheSet::new(4);
        for (way, tag) in [0xA_u64, 0xB, 0xC, 0xD].into_iter().enumerate() {
            set.install(way, tag, false);
        }
        set.swap_ways(0, 3);
        let tags: Vec<u64> = set.ways().iter().map(|l| l.tag).collect();
        assert_eq!(tags, vec![0xD, 0xB, 0xC, 0xA]);
    }

    #[test]
    fn swap_twice_restores_set_state() {
        let mut set = CacheSet::new(4);
        for (way, tag) in [0xA_u64, 0xB, 0xC, 0xD].into_iter().enumerate() {
            set.install(way, tag, way % 2 == 0);
        }
        let ways_before = set.ways().to_vec();
        let order_before = set.lru_order().to_vec();
        set.swap_ways(0, 3);
        set.swap_ways(0, 3);
        assert_eq!(set.ways(), &ways_before[..]);
        assert_eq!(set.lru_order(), &order_before[..]);
    }

    #[test]
    fn swap_to_same_way_is_noop() {
        let mut set = CacheSet::new(4);
        set.install(1, 5, false);
        let before = set.ways().to_vec();
        set.swap_ways(1, 1);
        assert_eq!(set.ways(), &before[..]);
    }

    #[test]
    fn recency_rank_follows_swapped_line() {
        // X made MRU in way 3, then swapped to way 0: a later fill must not
        // evict X because its rank moved with it.
        let mut cache = CacheState::new(CacheConfig::default()).unwrap();
        let x = addr_of(0, 10);
        cache.access(&load(x)).unwrap(); // fills way 3 (initial LRU)
        for tag in 0..3u64 {
            cache.access(&load(addr_of(0, tag))).unwrap();
        }
        let out = cache.access(&load(x)).unwrap();
        assert_eq!(out.kind, AccessKind::Hit);
        assert_eq!(out.way, 3);

        cache.swap_ways(0, 3, 0);
        let fill = cache.access(&load(addr_of(0, 20))).unwrap();
        assert_eq!(fill.kind, AccessKind::Miss);
        assert_eq!(fill.victim_tag, Some(0)); // oldest cold line, not X
        let (_, x_tag) = cache.config().index_of(x);
        assert_eq!(cache.set(0).lookup(x_tag).unwrap(), Some(0));
    }
}
