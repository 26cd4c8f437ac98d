//! Python bindings: the energy model, synthetic trace generators, the
//! simulator, and the offline hot-line analyzer.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hlsw_core::report::{emit_json, hot_line_stats};
use hlsw_core::trace::{self, SyntheticSpec, TraceKind};
use hlsw_core::{
    CacheConfig, CounterMode, DesignKind, Op, PolicyConfig, SimConfig, Simulator, TraceRecord,
};

fn value_err(err: hlsw_core::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_design(s: &str) -> PyResult<DesignKind> {
    s.parse().map_err(value_err)
}

fn parse_op(s: &str) -> PyResult<Op> {
    match s {
        "L" | "load" => Ok(Op::Load),
        "S" | "store" => Ok(Op::Store),
        other => Err(PyValueError::new_err(format!("unknown op `{other}`"))),
    }
}

fn record_tuples(records: &[TraceRecord]) -> Vec<(String, u64, u64)> {
    records
        .iter()
        .map(|r| (r.op.letter().to_string(), r.pc, r.addr))
        .collect()
}

fn tuples_to_records(tuples: Vec<(String, u64, u64)>) -> PyResult<Vec<TraceRecord>> {
    tuples
        .into_iter()
        .map(|(op, pc, addr)| {
            Ok(TraceRecord {
                pc,
                addr,
                op: parse_op(&op)?,
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    design: &str,
    holiswap: bool,
    epoch: u32,
    threshold: u32,
    counters: &str,
    seed: u64,
    cache_kb: u64,
    line_bytes: u64,
    assoc: usize,
    miss_penalty: u64,
) -> PyResult<SimConfig> {
    let cache = CacheConfig::new(cache_kb * 1024, line_bytes, assoc).map_err(value_err)?;
    let mode: CounterMode = counters.parse().map_err(value_err)?;
    if assoc != 4 {
        return Err(PyValueError::new_err(
            "the built-in energy table covers 4 ways",
        ));
    }
    let mut timing = hlsw_core::TimingParams::default();
    timing.miss_penalty = miss_penalty;
    let cfg = SimConfig {
        cache,
        policy: PolicyConfig {
            epoch,
            threshold,
            mode,
            seed,
            enabled: holiswap,
        },
        timing,
        design: parse_design(design)?,
        table: hlsw_core::EnergyTable::default(),
        filter_l1_parallel: false,
    };
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

/// Per-way access and swap energies.
#[pyclass(name = "EnergyTable")]
struct PyEnergyTable {
    inner: hlsw_core::EnergyTable,
}

#[pymethods]
impl PyEnergyTable {
    #[new]
    fn new() -> Self {
        Self {
            inner: hlsw_core::EnergyTable::default(),
        }
    }

    #[staticmethod]
    fn from_geometry(geometry: &PyGeometryModel) -> PyResult<Self> {
        Ok(Self {
            inner: geometry.inner.to_table().map_err(value_err)?,
        })
    }

    fn ways(&self) -> usize {
        self.inner.ways()
    }

    fn total_seq(&self, way: usize) -> f64 {
        self.inner.total_seq(way)
    }

    fn total_par(&self, way: usize) -> f64 {
        self.inner.total_par(way)
    }

    fn wire(&self, way: usize) -> f64 {
        self.inner.wire(way)
    }

    /// (sram, wire) energy in pJ of an access served by `way`.
    fn access_energy(&self, design: &str, way: usize) -> PyResult<(f64, f64)> {
        self.inner
            .access_energy(parse_design(design)?, way)
            .map_err(value_err)
    }

    fn swap_energy(&self, a: usize, b: usize) -> PyResult<f64> {
        self.inner.swap_energy(a, b).map_err(value_err)
    }
}

/// Subarray placement grid with Manhattan wire costs.
#[pyclass(name = "GeometryModel")]
struct PyGeometryModel {
    inner: hlsw_core::GeometryModel,
}

#[pymethods]
impl PyGeometryModel {
    #[new]
    #[pyo3(signature = (rows=2, cols=2, ways=4))]
    fn new(rows: usize, cols: usize, ways: usize) -> PyResult<Self> {
        Ok(Self {
            inner: hlsw_core::GeometryModel::with_grid(rows, cols, ways).map_err(value_err)?,
        })
    }

    fn wire(&self, way: usize) -> PyResult<f64> {
        self.inner.wire(way).map_err(value_err)
    }
}

/// Morris-style approximate counter with its own seeded RNG.
#[pyclass(name = "LogCounter")]
struct PyLogCounter {
    inner: hlsw_core::LogCounter,
    rng: rand_chacha::ChaCha8Rng,
}

#[pymethods]
impl PyLogCounter {
    #[new]
    #[pyo3(signature = (seed=0))]
    fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Self {
            inner: hlsw_core::LogCounter::zero(),
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn increment(&mut self) {
        self.inner.increment(&mut self.rng);
    }

    fn estimate(&self) -> u64 {
        self.inner.estimate()
    }

    fn exponent(&self) -> Option<u8> {
        self.inner.exponent()
    }
}

/// One simulation instance over an in-memory trace.
#[pyclass(name = "Simulator")]
struct PySimulator {
    inner: Simulator,
    records: Vec<TraceRecord>,
}

#[pymethods]
impl PySimulator {
    #[new]
    #[pyo3(signature = (
        design="sequential", holiswap=true, epoch=256, threshold=128,
        counters="log", seed=0, cache_kb=32, line_bytes=64, assoc=4,
        miss_penalty=20
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        design: &str,
        holiswap: bool,
        epoch: u32,
        threshold: u32,
        counters: &str,
        seed: u64,
        cache_kb: u64,
        line_bytes: u64,
        assoc: usize,
        miss_penalty: u64,
    ) -> PyResult<Self> {
        let cfg = build_config(
            design,
            holiswap,
            epoch,
            threshold,
            counters,
            seed,
            cache_kb,
            line_bytes,
            assoc,
            miss_penalty,
        )?;
        Ok(Self {
            inner: Simulator::new(cfg).map_err(value_err)?,
            records: Vec::new(),
        })
    }

    /// Simulate one reference; returns (hit, way, cycles) with way = -1
    /// when the L0 filter absorbed the reference.
    fn step(&mut self, op: &str, pc: u64, addr: u64) -> PyResult<(bool, i64, u64)> {
        let rec = TraceRecord {
            pc,
            addr,
            op: parse_op(op)?,
        };
        let res = self.inner.step(&rec).map_err(value_err)?;
        self.records.push(rec);
        Ok(match res.outcome {
            Some(out) => (out.is_hit(), out.way as i64, res.cycles),
            None => (true, -1, res.cycles),
        })
    }

    /// Simulate a list of ("L"|"S", pc, addr) tuples.
    fn run(&mut self, records: Vec<(String, u64, u64)>) -> PyResult<()> {
        let records = tuples_to_records(records)?;
        self.inner.run(&records).map_err(value_err)?;
        self.records.extend(records);
        Ok(())
    }

    fn run_file(&mut self, path: &str) -> PyResult<()> {
        let records = trace::load_trace(path).map_err(value_err)?;
        self.inner.run(&records).map_err(value_err)?;
        self.records.extend(records);
        Ok(())
    }

    fn swaps(&self) -> u64 {
        self.inner.totals().swaps
    }

    fn misses(&self) -> u64 {
        self.inner.totals().misses
    }

    fn hits(&self) -> u64 {
        self.inner.totals().hits
    }

    fn total_energy_pj(&self) -> f64 {
        self.inner.ledger().total()
    }

    fn wire_energy_pj(&self) -> f64 {
        self.inner.ledger().wire_pj
    }

    fn total_cycles(&self) -> u64 {
        self.inner.total_cycles()
    }

    /// Full report as a JSON string (parse with `json.loads`).
    fn report_json(&self) -> PyResult<String> {
        let report = self.inner.report(&self.records).map_err(value_err)?;
        Ok(emit_json(&report))
    }
}

/// Generate a synthetic trace as ("L"|"S", pc, addr) tuples.
#[pyfunction]
#[pyo3(signature = (
    kind, n, seed=0, span=262144, alpha=1.0, hot_lines=1, hot_fraction=0.6,
    store_ratio=0.25, line_bytes=64, sets=128
))]
#[allow(clippy::too_many_arguments)]
fn generate(
    kind: &str,
    n: usize,
    seed: u64,
    span: u64,
    alpha: f64,
    hot_lines: usize,
    hot_fraction: f64,
    store_ratio: f64,
    line_bytes: u64,
    sets: u64,
) -> PyResult<Vec<(String, u64, u64)>> {
    let kind: TraceKind = kind.parse().map_err(value_err)?;
    let spec = SyntheticSpec {
        kind,
        n_records: n,
        address_span: span,
        zipf_alpha: alpha,
        hot_lines,
        hot_fraction,
        store_ratio,
        line_bytes,
        set_count: sets,
    };
    Ok(record_tuples(&trace::generate(&spec, seed).map_err(value_err)?))
}

/// Offline hot-line statistics of a trace file, as a JSON string.
#[pyfunction]
#[pyo3(signature = (path, cache_kb=32, line_bytes=64, assoc=4))]
fn analyze_file(path: &str, cache_kb: u64, line_bytes: u64, assoc: usize) -> PyResult<String> {
    let cache = CacheConfig::new(cache_kb * 1024, line_bytes, assoc).map_err(value_err)?;
    let records = trace::load_trace(path).map_err(value_err)?;
    let stats = hot_line_stats(&records, &cache).map_err(value_err)?;
    Ok(emit_json(&stats))
}

/// Counter storage cost per set in bits.
#[pyfunction]
fn storage_bits(mode: &str, assoc: usize) -> PyResult<u32> {
    let mode: CounterMode = mode.parse().map_err(value_err)?;
    Ok(hlsw_core::policy::storage_bits(mode, assoc))
}

#[pymodule]
fn hlsw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnergyTable>()?;
    m.add_class::<PyGeometryModel>()?;
    m.add_class::<PyLogCounter>()?;
    m.add_class::<PySimulator>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_file, m)?)?;
    m.add_function(wrap_pyfunction!(storage_bits, m)?)?;
    Ok(())
}
