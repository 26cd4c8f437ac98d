//! Trace-driven simulator of a set-associative L1 cache that migrates hot
//! lines to the cheapest physical way, with per-access data-movement energy
//! accounting across four lookup designs (sequential, parallel, way
//! prediction, and an L0 filter).

pub mod cache;
pub mod config;
pub mod energy;
pub mod error;
pub mod lookup;
pub mod policy;
pub mod report;
pub mod sim;
pub mod trace;

pub use cache::{AccessKind, AccessOutcome, CacheConfig, CacheLine, CacheSet, CacheState};
pub use energy::{EnergyLedger, EnergyTable, GeometryModel};
pub use error::{Error, Result};
pub use lookup::{DesignKind, L0Cache, PredictorState, TimingParams};
pub use policy::{CounterMode, LogCounter, PolicyAction, PolicyConfig, PolicyState};
pub use report::{HotLineStats, SimReport, SweepReport, SweepRow};
pub use sim::{SimConfig, Simulator, StepResult};
pub use trace::{Op, SyntheticSpec, TraceKind, TraceRecord};
