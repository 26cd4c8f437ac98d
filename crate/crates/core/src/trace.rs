//! Trace records, text/binary serialization, and synthetic workload
//! generators.
//!
//! Text format, one reference per line: `<op> <pc-hex> <addr-hex>` with op
//! `L` or `S`; lines starting with `#` are comments, blank lines are
//! skipped. The binary format is the magic `HLSW1` followed by 17-byte
//! records: one op byte (`L`/`S`), then pc and addr as little-endian u64.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Load,
    Store,
}

impl Op {
    pub fn letter(self) -> char {
        match self {
            Op::Load => 'L',
            Op::Store => 'S',
        }
    }
}

/// One memory reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub pc: u64,
    pub addr: u64,
    pub op: Op,
}

pub const BINARY_MAGIC: &[u8; 5] = b"HLSW1";
const BINARY_RECORD_BYTES: usize = 17;

fn parse_hex(field: &str, line: usize, what: &str) -> Result<u64> {
    let digits = field
        .strip_prefix("0x")
        .or_else(|| field.strip_prefix("0X"))
        .unwrap_or(field);
    u64::from_str_radix(digits, 16)
        .map_err(|_| Error::parse(line, format!("bad hex {what} `{field}`")))
}

/// Parse the text trace format. Line numbers in errors are 1-based and
/// count comment and blank lines.
pub fn parse_text(input: &str) -> Result<Vec<TraceRecord>> {
    let mut records = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let op = match fields.next() {
            Some("L") => Op::Load,
            Some("S") => Op::Store,
            Some(other) => {
                return Err(Error::parse(line_no, format!("unknown op `{other}`")))
            }
            None => unreachable!("non-empty line"),
        };
        let pc = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "truncated record: missing pc"))
            .and_then(|f| parse_hex(f, line_no, "pc"))?;
        let addr = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "truncated record: missing addr"))
            .and_then(|f| parse_hex(f, line_no, "addr"))?;
        if fields.next().is_some() {
            return Err(Error::parse(line_no, "trailing fields after addr"));
        }
        records.push(TraceRecord { pc, addr, op });
    }
    Ok(records)
}

pub fn write_text(records: &[TraceRecord], mut out: impl Write) -> Result<()> {
    for rec in records {
        writeln!(out, "{} {:#x} {:#x}", rec.op.letter(), rec.pc, rec.addr)?;
    }
    Ok(())
}

pub fn to_text(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_text(records, &mut buf).expect("infallible vec write");
    String::from_utf8(buf).expect("ascii output")
}

pub fn write_binary(records: &[TraceRecord], mut out: impl Write) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    for rec in records {
        out.write_all(&[rec.op.letter() as u8])?;
        out.write_all(&rec.pc.to_le_bytes())?;
        out.write_all(&rec.addr.to_le_bytes())?;
    }
    Ok(())
}

pub fn parse_binary(bytes: &[u8]) -> Result<Vec<TraceRecord>> {
    let body = bytes
        .strip_prefix(BINARY_MAGIC.as_slice())
        .ok_or_else(|| Error::parse(1, "missing binary trace magic"))?;
    if body.len() % BINARY_RECORD_BYTES != 0 {
        return Err(Error::parse(
            1 + body.len() / BINARY_RECORD_BYTES,
            "truncated binary record",
        ));
    }
    body.chunks_exact(BINARY_RECORD_BYTES)
        .enumerate()
        .map(|(i, chunk)| {
            let op = match chunk[0] {
                b'L' => Op::Load,
                b'S' => Op::Store,
                other => {
                    return Err(Error::parse(i + 1, format!("unknown op byte {other:#x}")))
                }
            };
            let pc = u64::from_le_bytes(chunk[1..9].try_into().expect("8 bytes"));
            let addr = u64::from_le_bytes(chunk[9..17].try_into().expect("8 bytes"));
            Ok(TraceRecord { pc, addr, op })
        })
        .collect()
}

/// Load a trace file, sniffing the binary magic to pick the format.
pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::parse(1, "trace is neither valid UTF-8 nor binary"))?;
        parse_text(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Uniform,
    Zipf,
    Hotset,
}

impl std::str::FromStr for TraceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(TraceKind::Uniform),
            "zipf" => Ok(TraceKind::Zipf),
            "hotset" => Ok(TraceKind::Hotset),
            other => Err(Error::config(format!("unknown trace kind `{other}`"))),
        }
    }
}

/// Recipe for a synthetic trace. `line_bytes` and `set_count` describe the
/// cache geometry the hotset generator lays lines out for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: TraceKind,
    pub n_records: usize,
    pub address_span: u64,
    pub zipf_alpha: f64,
    /// Hot lines per set (hotset kind).
    pub hot_lines: usize,
    /// Fraction of each set's references that go to its hot lines.
    pub hot_fraction: f64,
    pub store_ratio: f64,
    pub line_bytes: u64,
    pub set_count: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            kind: TraceKind::Uniform,
            n_records: 10_000,
            address_span: 256 * 1024,
            zipf_alpha: 1.0,
            hot_lines: 1,
            hot_fraction: 0.6,
            store_ratio: 0.25,
            line_bytes: 64,
            set_count: 128,
        }
    }
}

impl SyntheticSpec {
    fn lines_total(&self) -> u64 {
        self.address_span / self.line_bytes
    }

    pub fn validate(&self) -> Result<()> {
        if self.line_bytes == 0 || !self.line_bytes.is_power_of_two() {
            return Err(Error::config("line_bytes must be a positive power of two"));
        }
        if self.set_count == 0 {
            return Err(Error::config("set_count must be positive"));
        }
        if !(0.0..=1.0).contains(&self.store_ratio) {
            return Err(Error::config("store_ratio must lie in [0,1]"));
        }
        if self.lines_total() == 0 {
            return Err(Error::config("address_span smaller than one line"));
        }
        match self.kind {
            TraceKind::Uniform => Ok(()),
            TraceKind::Zipf => {
                if self.zipf_alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Error::config("zipf_alpha must be positive"))
                }
            }
            TraceKind::Hotset => {
                if !(0.0..=1.0).contains(&self.hot_fraction) {
                    return Err(Error::config("hot_fraction must lie in [0,1]"));
                }
                if self.hot_lines == 0 && self.hot_fraction > 0.0 {
                    return Err(Error::config(
                        "infeasible hotset: hot_fraction > 0 with no hot lines",
                    ));
                }
                let lines_per_set = (self.lines_total() / self.set_count) as usize;
                let needed = self.hot_lines + usize::from(self.hot_fraction < 1.0);
                if lines_per_set < needed.max(1) {
                    return Err(Error::config(format!(
                        "address_span provides {lines_per_set} lines per set, need {needed}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Generate a synthetic trace; a pure function of (spec, seed).
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<Vec<TraceRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec.kind {
        TraceKind::Uniform => Ok(generate_uniform(spec, &mut rng)),
        TraceKind::Zipf => generate_zipf(spec, &mut rng),
        TraceKind::Hotset => Ok(generate_hotset(spec, &mut rng)),
    }
}

fn pick_op(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Op {
    if rng.random_bool(spec.store_ratio) {
        Op::Store
    } else {
        Op::Load
    }
}

/// PCs cycle over a small per-line pool so PC-indexed predictors have
/// learnable structure.
fn line_pc(line: u64) -> u64 {
    0x0040_0000 + (line % 64) * 4
}

fn generate_uniform(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<TraceRecord> {
    let lines = spec.lines_total();
    (0..spec.n_records)
        .map(|_| {
            let line = rng.random_range(0..lines);
            TraceRecord {
                pc: line_pc(line),
                addr: line * spec.line_bytes,
                op: pick_op(spec, rng),
            }
        })
        .collect()
}

fn generate_zipf(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<TraceRecord>> {
    let lines = spec.lines_total();
    let dist = Zipf::new(lines as f64, spec.zipf_alpha)
        .map_err(|e| Error::config(format!("zipf distribution: {e}")))?;
    Ok((0..spec.n_records)
        .map(|_| {
            // Ranks are 1-based; rank 1 is the most popular line.
            let line = (dist.sample(rng) as u64).clamp(1, lines) - 1;
            TraceRecord {
                pc: line_pc(line),
                addr: line * spec.line_bytes,
                op: pick_op(spec, rng),
            }
        })
        .collect())
}

fn generate_hotset(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<TraceRecord> {
    let sets = spec.set_count;
    let lines_per_set = (spec.lines_total() / sets) as usize;
    let mut cold_cursor = 0usize;
    (0..spec.n_records)
        .map(|_| {
            let set = rng.random_range(0..sets);
            let hot = spec.hot_fraction > 0.0 && rng.random_bool(spec.hot_fraction);
            let (line, pc) = if hot {
                let k = rng.random_range(0..spec.hot_lines as u64);
                let line = set + k * sets;
                (line, 0x4000_0000 + line * 4)
            } else {
                let cold_span = (lines_per_set - spec.hot_lines).max(1) as u64;
                let j = spec.hot_lines as u64 + rng.random_range(0..cold_span);
                let line = set + j * sets;
                cold_cursor = (cold_cursor + 1) % 16;
                (line, 0x5000_0000 + cold_cursor as u64 * 4)
            };
            TraceRecord {
                pc,
                addr: line * spec.line_bytes,
                op: pick_op(spec, rng),
            }
        })
        .collect()
}
