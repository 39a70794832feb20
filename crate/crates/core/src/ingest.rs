//! Loaders for block, transaction, mempool-delay and sanction-list CSV
//! exports, and the join that turns them into panel rows.
//!
//! | file | columns |
//! |------|---------|
//! | blocks | `number, gas_limit, gas_used, transaction_count, timestamp, base_fee_per_gas` |
//! | transactions | `block_number, hash, from_address, to_address` |
//! | delays | `included_in_block_num, delay, hash` |
//! | sanctions | `address` |
//!
//! Extra columns are ignored. Hashes and addresses are lowercased.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{assemble_panel, BlockObservation, MetricsError, PanelOptions, PanelRow};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("no blocks to join")]
    EmptyPanel,
    #[error("blocks are not strictly increasing at row {0}")]
    NonMonotoneBlocks(usize),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Metrics(MetricsError),
}

impl From<MetricsError> for IngestError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptyPanel => IngestError::EmptyPanel,
            MetricsError::NonMonotoneBlocks(i) => IngestError::NonMonotoneBlocks(i),
            other => IngestError::Metrics(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    /// Fail on the first malformed row.
    #[default]
    Strict,
    /// Skip malformed rows and report them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub rejects: Vec<Reject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub number: u64,
    pub gas_limit: u64,
    pub gas_used: u64,
    pub transaction_count: u64,
    pub timestamp: u64,
    pub base_fee_per_gas: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRecord {
    pub block_number: u64,
    pub hash: String,
    pub from_address: String,
    /// Empty for contract creations.
    pub to_address: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRecord {
    pub included_in_block_num: u64,
    pub delay: f64,
    pub hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanctionList(pub BTreeSet<String>);

impl SanctionList {
    pub fn from_addresses<I, S>(addrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(addrs.into_iter().map(|a| a.as_ref().to_ascii_lowercase()).collect())
    }

    pub fn contains(&self, addr: &str) -> bool {
        self.0.contains(&addr.to_ascii_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TxRecord {
    pub fn is_sanctioned(&self, list: &SanctionList) -> bool {
        list.contains(&self.from_address) || self.to_address.as_deref().is_some_and(|a| list.contains(a))
    }
}

fn is_hex_of_len(s: &str, digits: usize) -> bool {
    s.len() == digits + 2 && s.starts_with("0x") && s[2..].bytes().all(|b| b.is_ascii_hexdigit())
}

pub fn normalize_hash(s: &str) -> Result<String, String> {
    let s = s.trim().to_ascii_lowercase();
    if is_hex_of_len(&s, 64) {
        Ok(s)
    } else {
        Err(format!("bad transaction hash `{s}`"))
    }
}

pub fn normalize_address(s: &str) -> Result<String, String> {
    let s = s.trim().to_ascii_lowercase();
    if is_hex_of_len(&s, 40) {
        Ok(s)
    } else {
        Err(format!("bad address `{s}`"))
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Shared CSV driver: resolves named columns, then parses each record.
fn read_table<R, T, F>(r: R, columns: &[&str], mode: LoadMode, mut parse: F) -> Result<Loaded<T>, IngestError>
where
    R: Read,
    F: FnMut(&[&str]) -> Result<T, String>,
{
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == *c)
                .ok_or_else(|| IngestError::MissingColumn(c.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Loaded {
        records: Vec::new(),
        rejects: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let fields: Result<Vec<&str>, String> = idx
            .iter()
            .map(|&i| rec.get(i).ok_or_else(|| format!("expected {} fields, found {}", headers.len(), rec.len())))
            .collect();
        match fields.and_then(|f| parse(&f)) {
            Ok(v) => out.records.push(v),
            Err(reason) if mode == LoadMode::Lenient => out.rejects.push(Reject { line, reason }),
            Err(reason) => return Err(IngestError::MalformedRow { line, reason }),
        }
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(s: &str, col: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| format!("{col}: {e}"))
}

pub fn read_blocks<R: Read>(r: R, mode: LoadMode) -> Result<Loaded<BlockRecord>, IngestError> {
    const COLS: [&str; 6] = ["number", "gas_limit", "gas_used", "transaction_count", "timestamp", "base_fee_per_gas"];
    read_table(r, &COLS, mode, |f| {
        let b = BlockRecord {
            number: num(f[0], COLS[0])?,
            gas_limit: num(f[1], COLS[1])?,
            gas_used: num(f[2], COLS[2])?,
            transaction_count: num(f[3], COLS[3])?,
            timestamp: num(f[4], COLS[4])?,
            base_fee_per_gas: num(f[5], COLS[5])?,
        };
        if b.gas_used > b.gas_limit {
            return Err(format!("gas_used {} exceeds gas_limit {}", b.gas_used, b.gas_limit));
        }
        if b.timestamp == 0 {
            return Err("timestamp must be positive".into());
        }
        Ok(b)
    })
}

pub fn read_txs<R: Read>(r: R, mode: LoadMode) -> Result<Loaded<TxRecord>, IngestError> {
    const COLS: [&str; 4] = ["block_number", "hash", "from_address", "to_address"];
    read_table(r, &COLS, mode, |f| {
        let to = f[3].trim();
        Ok(TxRecord {
            block_number: num(f[0], COLS[0])?,
            hash: normalize_hash(f[1])?,
            from_address: normalize_address(f[2])?,
            to_address: if to.is_empty() { None } else { Some(normalize_address(to)?) },
        })
    })
}

pub fn read_delays<R: Read>(r: R, mode: LoadMode) -> Result<Loaded<DelayRecord>, IngestError> {
    const COLS: [&str; 3] = ["included_in_block_num", "delay", "hash"];
    read_table(r, &COLS, mode, |f| {
        let delay: f64 = num(f[1], COLS[1])?;
        if !delay.is_finite() || delay < 0.0 {
            return Err(format!("delay must be a non-negative number, got {delay}"));
        }
        Ok(DelayRecord {
            included_in_block_num: num(f[0], COLS[0])?,
            delay,
            hash: normalize_hash(f[2])?,
        })
    })
}

pub fn read_sanctions<R: Read>(r: R, mode: LoadMode) -> Result<(SanctionList, Vec<Reject>), IngestError> {
    let loaded = read_table(r, &["address"], mode, |f| normalize_address(f[0]))?;
    Ok((SanctionList(loaded.records.into_iter().collect()), loaded.rejects))
}

pub fn load_blocks(path: &Path, mode: LoadMode) -> Result<Loaded<BlockRecord>, IngestError> {
    read_blocks(open(path)?, mode)
}

pub fn load_txs(path: &Path, mode: LoadMode) -> Result<Loaded<TxRecord>, IngestError> {
    read_txs(open(path)?, mode)
}

pub fn load_delays(path: &Path, mode: LoadMode) -> Result<Loaded<DelayRecord>, IngestError> {
    read_delays(open(path)?, mode)
}

pub fn load_sanctions(path: &Path, mode: LoadMode) -> Result<(SanctionList, Vec<Reject>), IngestError> {
    read_sanctions(open(path)?, mode)
}

/// Bookkeeping from [`join_panel`] for inputs that could not be attributed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub blocks: usize,
    pub transactions: usize,
    /// Delay rows whose hash matches no transaction; dropped.
    pub unmatched_delays: usize,
    /// Repeated delay rows for one hash; the first is kept.
    pub duplicate_delays: usize,
    /// Delay rows whose block number disagrees with the transaction's block.
    pub delay_block_mismatches: usize,
    /// Transactions pointing at a block outside the block file; dropped.
    pub orphan_transactions: usize,
    /// Blocks whose `transaction_count` differs from attributed transactions.
    pub tx_count_mismatches: usize,
    pub observed: u64,
    pub unobserved: u64,
    pub sanctioned: u64,
}

/// One panel row per block. Delays attach to transactions by hash;
/// transactions without a delay are unobserved, and those with a sanctioned
/// sender or receiver are counted as sanctioned.
pub fn join_panel(
    blocks: &[BlockRecord],
    txs: &[TxRecord],
    delays: &[DelayRecord],
    sanctions: &SanctionList,
    opts: &PanelOptions,
) -> Result<(Vec<PanelRow>, JoinReport), IngestError> {
    if blocks.is_empty() {
        return Err(IngestError::EmptyPanel);
    }
    let mut report = JoinReport {
        blocks: blocks.len(),
        ..Default::default()
    };
    let mut delay_by_hash: HashMap<&str, &DelayRecord> = HashMap::with_capacity(delays.len());
    for d in delays {
        match delay_by_hash.entry(&d.hash) {
            Entry::Occupied(_) => report.duplicate_delays += 1,
            Entry::Vacant(v) => {
                v.insert(d);
            }
        }
    }

    let index: HashMap<u64, usize> = blocks.iter().enumerate().map(|(i, b)| (b.number, i)).collect();
    let mut obs: Vec<BlockObservation> = blocks
        .iter()
        .map(|b| BlockObservation {
            number: b.number,
            timestamp: b.timestamp,
            gas_used: b.gas_used,
            gas_limit: b.gas_limit,
            base_fee: b.base_fee_per_gas,
            ..Default::default()
        })
        .collect();
    let mut matched: HashSet<&str> = HashSet::new();
    for tx in txs {
        let Some(&i) = index.get(&tx.block_number) else {
            report.orphan_transactions += 1;
            continue;
        };
        report.transactions += 1;
        let o = &mut obs[i];
        o.tx_count += 1;
        match delay_by_hash.get(tx.hash.as_str()) {
            Some(d) => {
                matched.insert(tx.hash.as_str());
                if d.included_in_block_num != tx.block_number {
                    report.delay_block_mismatches += 1;
                }
                o.delays.push(d.delay);
            }
            None => o.unobserved += 1,
        }
        if tx.is_sanctioned(sanctions) {
            o.sanctioned += 1;
        }
    }
    report.unmatched_delays = delay_by_hash.keys().filter(|h| !matched.contains(*h)).count();
    report.tx_count_mismatches = blocks
        .iter()
        .zip(&obs)
        .filter(|(b, o)| b.transaction_count != o.tx_count)
        .count();
    report.observed = obs.iter().map(|o| o.delays.len() as u64).sum();
    report.unobserved = obs.iter().map(|o| o.unobserved).sum();
    report.sanctioned = obs.iter().map(|o| o.sanctioned).sum();

    let panel = assemble_panel(&obs, opts)?;
    Ok((panel, report))
}
