//! Fixed-layout fault lookup table: the online-phase artifact.
//!
//! Binary layout (`.flut`, little-endian):
//!
//! ```text
//! magic "FLUT" | version u16 | bucket_count u8 | reserved u8 | entry_count u32
//! entry_count x { category_id u16 | bucket u8 | risk u8 | n u32
//!                 | r2 f32 | rmse f32 | mae f32 | within_010 f32 | within_020 f32 }
//! crc32 u32 over every preceding byte
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use thiserror::Error;

use crate::metrics::MetricsSummary;
use crate::rng::CounterRng;
use crate::scenario::FaultCategory;

pub const MAGIC: [u8; 4] = *b"FLUT";
pub const FORMAT_VERSION: u16 = 1;
pub const DEFAULT_BUCKETS: u8 = 10;
pub const HEADER_BYTES: usize = 12;
pub const ENTRY_BYTES: usize = 28;
pub const CRC_BYTES: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LutError {
    #[error("no summaries to build from")]
    EmptyInput,
    #[error("summary `{group}` is unusable: {reason}")]
    InvalidSummary { group: String, reason: String },
    #[error("bucket count {0} outside [2, 64]")]
    BadBucketCount(u8),
    #[error("bad magic {0:02x?}")]
    Magic([u8; 4]),
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("ChecksumError: checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("truncated or oversized table: expected {expected} bytes, found {found}")]
    Truncation { expected: usize, found: usize },
    #[error("entry {index}: {reason}")]
    InvalidEntry { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Risk {
    Nominal = 0,
    Degraded = 1,
    Critical = 2,
}

impl Risk {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Risk::Nominal),
            1 => Some(Risk::Degraded),
            2 => Some(Risk::Critical),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Risk::Nominal => "nominal",
            Risk::Degraded => "degraded",
            Risk::Critical => "critical",
        }
    }
}

impl fmt::Display for Risk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Alerting thresholds. Defaults put the worst published fault row
/// (within-0.10 = 0.310, R² = 0.755) in `Critical`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskThresholds {
    pub critical_within_010: f64,
    pub critical_r2: f64,
    pub degraded_within_010: f64,
    pub degraded_rmse: f64,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        Self { critical_within_010: 0.35, critical_r2: 0.76, degraded_within_010: 0.50, degraded_rmse: 0.15 }
    }
}

impl RiskThresholds {
    pub fn classify(&self, within_010: f64, r2: f64, rmse: f64) -> Risk {
        if within_010 < self.critical_within_010 || r2 < self.critical_r2 {
            Risk::Critical
        } else if within_010 < self.degraded_within_010 || rmse > self.degraded_rmse {
            Risk::Degraded
        } else {
            Risk::Nominal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LutKey {
    pub category_id: u16,
    pub bucket: u8,
}

impl LutKey {
    fn packed(self) -> u32 {
        (self.category_id as u32) << 8 | self.bucket as u32
    }
}

/// Severity bucket for a strength: `min(B - 1, floor(strength * B))`.
pub fn bucket_for(strength: f64, bucket_count: u8) -> u8 {
    let b = (strength * bucket_count as f64).floor();
    (b.max(0.0) as u32).min(bucket_count as u32 - 1) as u8
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutEntry {
    pub key: LutKey,
    pub n: u32,
    pub r2: f32,
    pub rmse: f32,
    pub mae: f32,
    pub within_010: f32,
    pub within_020: f32,
    pub risk: Risk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultLookupTable {
    version: u16,
    bucket_count: u8,
    entries: Vec<LutEntry>,
}

/// Returned by [`FaultLookupTable::query`] when no entry lies within one bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotCovered;

impl fmt::Display for NotCovered {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("fault condition not covered by the table")
    }
}

impl std::error::Error for NotCovered {}

/// One input row for [`build`].
#[derive(Debug, Clone, PartialEq)]
pub struct LutInput {
    pub category: FaultCategory,
    pub strength: f64,
    pub summary: MetricsSummary,
}

fn canonical_order(a: &LutInput, b: &LutInput) -> Ordering {
    let (sa, sb) = (&a.summary, &b.summary);
    a.category
        .cmp(&b.category)
        .then(a.strength.total_cmp(&b.strength))
        .then_with(|| sa.group.cmp(&sb.group))
        .then(sa.n.cmp(&sb.n))
        .then(sa.r2_overall.unwrap_or(f64::NAN).total_cmp(&sb.r2_overall.unwrap_or(f64::NAN)))
        .then(sa.rmse.total_cmp(&sb.rmse))
        .then(sa.mae.total_cmp(&sb.mae))
        .then(sa.within_010.total_cmp(&sb.within_010))
        .then(sa.within_020.total_cmp(&sb.within_020))
}

/// Buckets summaries by strength and merges each bucket by n-weighted means.
/// The result does not depend on input order.
pub fn build(
    inputs: &[LutInput],
    bucket_count: u8,
    thresholds: &RiskThresholds,
) -> Result<FaultLookupTable, LutError> {
    if !(2..=64).contains(&bucket_count) {
        return Err(LutError::BadBucketCount(bucket_count));
    }
    if inputs.is_empty() {
        return Err(LutError::EmptyInput);
    }
    for i in inputs {
        let invalid = |reason: &str| LutError::InvalidSummary { group: i.summary.group.clone(), reason: reason.into() };
        if i.summary.n == 0 {
            return Err(invalid("zero samples"));
        }
        if !(0.0..=1.0).contains(&i.strength) {
            return Err(invalid("strength outside [0, 1]"));
        }
        if i.summary.r2_overall.is_none() {
            return Err(invalid("degenerate R² (zero truth variance)"));
        }
    }
    let mut sorted: Vec<&LutInput> = inputs.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));

    let mut entries: Vec<LutEntry> = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let key = LutKey {
            category_id: sorted[start].category.id(),
            bucket: bucket_for(sorted[start].strength, bucket_count),
        };
        let mut end = start;
        while end < sorted.len()
            && sorted[end].category.id() == key.category_id
            && bucket_for(sorted[end].strength, bucket_count) == key.bucket
        {
            end += 1;
        }
        entries.push(merge(key, &sorted[start..end], thresholds)?);
        start = end;
    }
    Ok(FaultLookupTable { version: FORMAT_VERSION, bucket_count, entries })
}

fn merge(key: LutKey, group: &[&LutInput], thresholds: &RiskThresholds) -> Result<LutEntry, LutError> {
    let total: u64 = group.iter().map(|i| i.summary.n as u64).sum();
    let n = u32::try_from(total).map_err(|_| LutError::InvalidSummary {
        group: group[0].summary.group.clone(),
        reason: "sample count overflows u32".into(),
    })?;
    let weighted = |f: &dyn Fn(&MetricsSummary) -> f64| -> f32 {
        (group.iter().map(|i| i.summary.n as f64 * f(&i.summary)).sum::<f64>() / total as f64) as f32
    };
    let r2 = weighted(&|s| s.r2_overall.expect("validated"));
    let rmse = weighted(&|s| s.rmse);
    let mae = weighted(&|s| s.mae);
    let within_010 = weighted(&|s| s.within_010);
    let within_020 = weighted(&|s| s.within_020);
    // Classify from the stored f32 values so a reloaded entry is self-consistent.
    let risk = thresholds.classify(within_010 as f64, r2 as f64, rmse as f64);
    Ok(LutEntry { key, n, r2, rmse, mae, within_010, within_020, risk })
}

impl FaultLookupTable {
    /// Assembles a table from raw entries, checking order and key ranges.
    pub fn from_entries(bucket_count: u8, entries: Vec<LutEntry>) -> Result<Self, LutError> {
        if !(2..=64).contains(&bucket_count) {
            return Err(LutError::BadBucketCount(bucket_count));
        }
        validate_entries(bucket_count, &entries)?;
        Ok(Self { version: FORMAT_VERSION, bucket_count, entries })
    }

    pub fn version(&self) -> u16 {
        self.version
    }

    pub fn bucket_count(&self) -> u8 {
        self.bucket_count
    }

    pub fn entries(&self) -> &[LutEntry] {
        &self.entries
    }

    pub fn byte_len(&self) -> usize {
        HEADER_BYTES + ENTRY_BYTES * self.entries.len() + CRC_BYTES
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.push(self.bucket_count);
        out.push(0);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.key.category_id.to_le_bytes());
            out.push(e.key.bucket);
            out.push(e.risk as u8);
            out.extend_from_slice(&e.n.to_le_bytes());
            for v in [e.r2, e.rmse, e.mae, e.within_010, e.within_020] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parses and verifies a `.flut` image. The checksum is checked before
    /// any header field so that every single-byte corruption is reported as
    /// [`LutError::Checksum`].
    pub fn deserialize(bytes: &[u8]) -> Result<Self, LutError> {
        let min = HEADER_BYTES + CRC_BYTES;
        if bytes.len() < min {
            return Err(LutError::Truncation { expected: min, found: bytes.len() });
        }
        let (body, tail) = bytes.split_at(bytes.len() - CRC_BYTES);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(LutError::Checksum { stored, computed });
        }
        let magic: [u8; 4] = body[0..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(LutError::Magic(magic));
        }
        let version = u16::from_le_bytes([body[4], body[5]]);
        if version != FORMAT_VERSION {
            return Err(LutError::Version(version));
        }
        let bucket_count = body[6];
        if !(2..=64).contains(&bucket_count) {
            return Err(LutError::BadBucketCount(bucket_count));
        }
        let count = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes")) as usize;
        let expected = count
            .checked_mul(ENTRY_BYTES)
            .and_then(|v| v.checked_add(min))
            .unwrap_or(usize::MAX);
        if bytes.len() != expected {
            return Err(LutError::Truncation { expected, found: bytes.len() });
        }
        let f32_at = |c: &[u8], off: usize| f32::from_le_bytes(c[off..off + 4].try_into().expect("4 bytes"));
        let mut entries = Vec::with_capacity(count);
        for (index, c) in body[HEADER_BYTES..].chunks_exact(ENTRY_BYTES).enumerate() {
            let risk = Risk::from_u8(c[3])
                .ok_or_else(|| LutError::InvalidEntry { index, reason: format!("risk byte {}", c[3]) })?;
            entries.push(LutEntry {
                key: LutKey { category_id: u16::from_le_bytes([c[0], c[1]]), bucket: c[2] },
                risk,
                n: u32::from_le_bytes(c[4..8].try_into().expect("4 bytes")),
                r2: f32_at(c, 8),
                rmse: f32_at(c, 12),
                mae: f32_at(c, 16),
                within_010: f32_at(c, 20),
                within_020: f32_at(c, 24),
            });
        }
        validate_entries(bucket_count, &entries)?;
        Ok(Self { version, bucket_count, entries })
    }

    /// CRC-32 of the serialized header and entries.
    pub fn checksum(&self) -> u32 {
        let bytes = self.serialize();
        u32::from_le_bytes(bytes[bytes.len() - CRC_BYTES..].try_into().expect("4 bytes"))
    }

    /// Exact bucket hit, else the nearest populated bucket of the same
    /// category at distance 1 (the more severe one on a tie). Never allocates.
    pub fn query(&self, category: FaultCategory, strength: f64) -> Result<&LutEntry, NotCovered> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(NotCovered);
        }
        let bucket = bucket_for(strength, self.bucket_count);
        let find = |b: u8| {
            let key = LutKey { category_id: category.id(), bucket: b }.packed();
            self.entries.binary_search_by_key(&key, |e| e.key.packed()).ok().map(|i| &self.entries[i])
        };
        find(bucket)
            .or_else(|| bucket.checked_add(1).filter(|b| *b < self.bucket_count).and_then(find))
            .or_else(|| bucket.checked_sub(1).and_then(find))
            .ok_or(NotCovered)
    }

    /// CSV export of every entry for audit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,bucket,n,r2,rmse,mae,within_010,within_020,risk\n");
        for e in &self.entries {
            let name = FaultCategory::from_id(e.key.category_id).map(|c| c.name()).unwrap_or("?");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                name, e.key.bucket, e.n, e.r2, e.rmse, e.mae, e.within_010, e.within_020, e.risk
            ));
        }
        out
    }
}

fn validate_entries(bucket_count: u8, entries: &[LutEntry]) -> Result<(), LutError> {
    let capacity = FaultCategory::ALL.len() * bucket_count as usize;
    if entries.len() > capacity {
        return Err(LutError::InvalidEntry {
            index: capacity,
            reason: format!("{} entries exceed capacity {capacity}", entries.len()),
        });
    }
    for (index, e) in entries.iter().enumerate() {
        let bad = |reason: String| LutError::InvalidEntry { index, reason };
        if FaultCategory::from_id(e.key.category_id).is_none() {
            return Err(bad(format!("unknown category id {}", e.key.category_id)));
        }
        if e.key.bucket >= bucket_count {
            return Err(bad(format!("bucket {} >= {bucket_count}", e.key.bucket)));
        }
        if index > 0 && entries[index - 1].key >= e.key {
            return Err(bad("keys not strictly ascending".into()));
        }
    }
    Ok(())
}

/// Query latency distribution in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyReport {
    pub iterations: usize,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
    pub table_bytes: usize,
}

impl fmt::Display for LatencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iterations={} p50={}ns p99={}ns max={}ns table_bytes={}",
            self.iterations, self.p50_ns, self.p99_ns, self.max_ns, self.table_bytes
        )
    }
}

pub const MIN_BENCH_ITERATIONS: usize = 1000;

/// Pre-generated uniform random queries, so the timed loop does no work
/// besides the lookup itself.
pub fn bench_queries(iterations: usize, seed: u64) -> Vec<(FaultCategory, f64)> {
    let rng = CounterRng::new(seed);
    let cats = FaultCategory::ALL;
    (0..iterations as u64)
        .map(|i| {
            let c = cats[(rng.u64_at(0, i) % cats.len() as u64) as usize];
            (c, rng.uniform(1, i))
        })
        .collect()
}

/// Times each query individually with the monotonic clock.
///
/// # Panics
///
/// Panics if `iterations` is below [`MIN_BENCH_ITERATIONS`].
pub fn bench_query(table: &FaultLookupTable, iterations: usize) -> LatencyReport {
    assert!(iterations >= MIN_BENCH_ITERATIONS, "need at least {MIN_BENCH_ITERATIONS} iterations");
    let queries = bench_queries(iterations, 0x5eed);
    let mut timings = vec![0u64; iterations];
    time_queries(table, &queries, &mut timings);
    report_from(&mut timings, table.byte_len())
}

/// The measured loop: writes one latency per query into `timings`.
pub fn time_queries(table: &FaultLookupTable, queries: &[(FaultCategory, f64)], timings: &mut [u64]) {
    for (slot, &(category, strength)) in timings.iter_mut().zip(queries) {
        let t0 = Instant::now();
        let hit = table.query(black_box(category), black_box(strength));
        black_box(&hit);
        *slot = t0.elapsed().as_nanos() as u64;
    }
}

pub fn report_from(timings: &mut [u64], table_bytes: usize) -> LatencyReport {
    timings.sort_unstable();
    let n = timings.len();
    let pct = |q: f64| timings[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
    LatencyReport {
        iterations: n,
        p50_ns: pct(0.50),
        p99_ns: pct(0.99),
        max_ns: timings[n - 1],
        table_bytes,
    }
}
