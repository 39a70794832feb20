//! Discrete-event simulation of the public-mempool transaction life cycle
//! under a block-interval regime and the EIP-1559 base-fee law.

mod export;
mod pool;

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tfm::{next_base_fee, BaseFee, FeeParams, TfmError};

pub use export::{export_trace, sanctioned_address, tx_from_address, tx_hash, tx_to_address, ExportedFiles};
pub use pool::Mempool;

/// RNG stream used for block intervals (arrivals use stream 0).
pub const INTERVAL_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("arrivals must be sorted by submit time")]
    UnsortedArrivals,
    #[error("duplicate transaction id {0}")]
    DuplicateId(u64),
    #[error(transparent)]
    Fee(#[from] TfmError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    /// Seconds since the start of the simulation.
    pub submit_time: f64,
    pub gas: u64,
    /// Willingness to pay in wei per gas, tip included.
    pub valuation: f64,
    /// Effective priority fee paid at inclusion; zero while pending.
    pub tip: f64,
    /// Sent through a private channel: included on chain, never seen in the
    /// public mempool.
    pub private: bool,
    pub sanctioned: bool,
    pub mined_block: Option<u64>,
    pub mined_time: Option<f64>,
}

impl Transaction {
    pub fn new(id: u64, submit_time: f64, gas: u64, valuation: f64, private: bool, sanctioned: bool) -> Self {
        Self {
            id,
            submit_time,
            gas,
            valuation,
            tip: 0.0,
            private,
            sanctioned,
            mined_block: None,
            mined_time: None,
        }
    }

    pub fn waiting_time(&self) -> Option<f64> {
        self.mined_time.map(|m| m - self.submit_time)
    }

    /// Priority fee offered at a given base fee.
    pub fn effective_tip(&self, base_fee: f64, max_tip: f64) -> f64 {
        (self.valuation - base_fee).min(max_tip).max(0.0)
    }
}

/// How block intervals are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalRegime {
    /// Proof-of-work style: exponential inter-block times.
    Exponential { mean_seconds: f64 },
    /// Slot-based: a block every `slot_seconds`, each slot independently
    /// empty with probability `empty_slot_prob`. The 0.01 default used in
    /// shipped configs stands in for a small share of missed slots.
    Fixed { slot_seconds: f64, empty_slot_prob: f64 },
}

impl IntervalRegime {
    pub fn pre_merge() -> Self {
        IntervalRegime::Exponential { mean_seconds: 14.0 }
    }

    pub fn post_merge() -> Self {
        IntervalRegime::Fixed {
            slot_seconds: 12.0,
            empty_slot_prob: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            IntervalRegime::Exponential { mean_seconds } if !(mean_seconds > 0.0 && mean_seconds.is_finite()) => {
                Err(SimError::ConfigInvalid("exponential mean must be positive".into()))
            }
            IntervalRegime::Fixed {
                slot_seconds,
                empty_slot_prob,
            } if !(slot_seconds > 0.0 && slot_seconds.is_finite()) || !(0.0..1.0).contains(&empty_slot_prob) => Err(
                SimError::ConfigInvalid("fixed regime needs slot_seconds > 0 and empty_slot_prob in [0, 1)".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Expected interval in seconds.
    pub fn mean(&self) -> f64 {
        match *self {
            IntervalRegime::Exponential { mean_seconds } => mean_seconds,
            IntervalRegime::Fixed {
                slot_seconds,
                empty_slot_prob,
            } => slot_seconds / (1.0 - empty_slot_prob),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            IntervalRegime::Exponential { mean_seconds } => format!("exponential({mean_seconds})"),
            IntervalRegime::Fixed {
                slot_seconds,
                empty_slot_prob,
            } => format!("fixed({slot_seconds},{empty_slot_prob})"),
        }
    }
}

/// One draw of the time to the next block, in (real-valued) seconds.
pub fn sample_interval<R: Rng + ?Sized>(regime: &IntervalRegime, rng: &mut R) -> f64 {
    match *regime {
        IntervalRegime::Exponential { mean_seconds } => {
            let u: f64 = rng.gen();
            -mean_seconds * (1.0 - u).ln()
        }
        IntervalRegime::Fixed {
            slot_seconds,
            empty_slot_prob,
        } => {
            let mut slots = 1u32;
            while empty_slot_prob > 0.0 && rng.gen::<f64>() < empty_slot_prob {
                slots += 1;
            }
            slot_seconds * slots as f64
        }
    }
}

/// Block timestamps are whole seconds and strictly increasing, so each
/// sampled interval is rounded and floored at one second.
fn whole_seconds(interval: f64) -> u64 {
    (interval.round() as u64).max(1)
}

fn default_max_tip() -> f64 {
    2e9
}

fn default_start_block() -> u64 {
    crate::metrics::MERGE_BLOCK
}

fn default_start_timestamp() -> u64 {
    1_663_224_162
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub regime: IntervalRegime,
    #[serde(default = "default_fee")]
    pub fee: FeeParams<u64>,
    /// Base fee of the first simulated block, in wei.
    pub initial_base_fee: u64,
    /// Seconds of simulated time; blocks are produced while their timestamp
    /// stays within the horizon.
    pub horizon: f64,
    pub seed: u64,
    /// Cap on the priority fee, in wei per gas.
    #[serde(default = "default_max_tip")]
    pub max_tip: f64,
    #[serde(default = "default_start_block")]
    pub start_block: u64,
    /// Unix timestamp of the parent of the first simulated block.
    #[serde(default = "default_start_timestamp")]
    pub start_timestamp: u64,
}

fn default_fee() -> FeeParams<u64> {
    FeeParams::with_target(15_000_000)
}

impl SimConfig {
    pub fn new(regime: IntervalRegime, initial_base_fee: u64, horizon: f64, seed: u64) -> Self {
        Self {
            regime,
            fee: default_fee(),
            initial_base_fee,
            horizon,
            seed,
            max_tip: default_max_tip(),
            start_block: default_start_block(),
            start_timestamp: default_start_timestamp(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::ConfigInvalid("horizon must be positive".into()));
        }
        if !(self.max_tip >= 0.0) {
            return Err(SimError::ConfigInvalid("max_tip must be non-negative".into()));
        }
        if self.initial_base_fee < self.fee.fee_floor.0 {
            return Err(SimError::ConfigInvalid("initial base fee is below the fee floor".into()));
        }
        self.regime.validate()?;
        self.fee.validate().map_err(|e| SimError::ConfigInvalid(e.to_string()))
    }

    /// Fee parameters widened so that `base_fee * gas` products cannot
    /// overflow.
    pub fn wide_fee_params(&self) -> FeeParams<u128> {
        FeeParams {
            gas_limit: self.fee.gas_limit,
            gas_target: self.fee.gas_target,
            adjustment_quotient: self.fee.adjustment_quotient,
            fee_floor: BaseFee(self.fee.fee_floor.0 as u128),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    /// Unix seconds.
    pub timestamp: u64,
    /// Seconds since the parent block.
    pub interval: u64,
    pub gas_limit: u64,
    pub gas_used: u64,
    /// Wei per gas.
    pub base_fee: u64,
    pub tx_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub config: SimConfig,
    pub blocks: Vec<Block>,
    /// Every arrival submitted within the horizon, mined or still pending.
    pub transactions: Vec<Transaction>,
}

impl SimTrace {
    pub fn mined(&self) -> impl Iterator<Item = &Transaction> {
        self.transactions.iter().filter(|t| t.mined_block.is_some())
    }

    pub fn pending(&self) -> impl Iterator<Item = &Transaction> {
        self.transactions.iter().filter(|t| t.mined_block.is_none())
    }

    pub fn tx_lookup(&self) -> HashMap<u64, &Transaction> {
        self.transactions.iter().map(|t| (t.id, t)).collect()
    }

    /// Seconds since the start of the simulation for a block.
    pub fn block_time(&self, block: &Block) -> f64 {
        (block.timestamp - self.config.start_timestamp) as f64
    }
}

/// Result of packing one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub included: Vec<Transaction>,
    pub remaining: Vec<Transaction>,
}

/// Reference form of the block-building rule on a plain list.
///
/// Eligible transactions (valuation at least the base fee) are ordered by
/// effective tip descending, then submit time, then id, and packed until the
/// next one would overflow the gas limit. The [`Mempool`] used by [`run`]
/// applies the same rule with an index.
pub fn include_transactions(pool: Vec<Transaction>, base_fee: u64, gas_limit: u64, max_tip: f64) -> Inclusion {
    let b = base_fee as f64;
    let (mut eligible, mut remaining): (Vec<_>, Vec<_>) = pool.into_iter().partition(|t| t.valuation >= b);
    eligible.sort_by(|x, y| {
        y.effective_tip(b, max_tip)
            .total_cmp(&x.effective_tip(b, max_tip))
            .then(x.submit_time.total_cmp(&y.submit_time))
            .then(x.id.cmp(&y.id))
    });
    let mut used = 0u64;
    let mut included = Vec::new();
    let mut iter = eligible.into_iter();
    for mut tx in iter.by_ref() {
        if used + tx.gas > gas_limit {
            remaining.push(tx);
            break;
        }
        used += tx.gas;
        tx.tip = tx.effective_tip(b, max_tip);
        included.push(tx);
    }
    remaining.extend(iter);
    Inclusion { included, remaining }
}

/// Runs the event loop: at each block time admit arrivals, build the block,
/// stamp waiting times, then apply the base-fee law with integer wei
/// (floor rounding).
pub fn run(config: &SimConfig, arrivals: Vec<Transaction>) -> Result<SimTrace, SimError> {
    config.validate()?;
    if arrivals.windows(2).any(|w| w[0].submit_time > w[1].submit_time) {
        return Err(SimError::UnsortedArrivals);
    }
    let mut seen = HashSet::with_capacity(arrivals.len());
    if let Some(dup) = arrivals.iter().find(|t| !seen.insert(t.id)) {
        return Err(SimError::DuplicateId(dup.id));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INTERVAL_STREAM);
    let params = config.wide_fee_params();
    let gas_limit = config.fee.gas_limit.0;

    let mut txs: Vec<Transaction> = arrivals.into_iter().filter(|t| t.submit_time <= config.horizon).collect();
    let mut pool = Mempool::new();
    let mut admitted = 0usize;
    let mut blocks = Vec::new();
    let mut now = 0u64;
    let mut base_fee = config.initial_base_fee;

    loop {
        let interval = whole_seconds(sample_interval(&config.regime, &mut rng));
        if (now + interval) as f64 > config.horizon {
            break;
        }
        now += interval;
        let t = now as f64;
        while admitted < txs.len() && txs[admitted].submit_time <= t {
            pool.insert(&txs[admitted], admitted);
            admitted += 1;
        }
        let number = config.start_block + blocks.len() as u64;
        let picked = pool.take_block(&txs, base_fee, gas_limit, config.max_tip);
        let mut gas_used = 0u64;
        let mut tx_ids = Vec::with_capacity(picked.len());
        for (idx, tip) in picked {
            let tx = &mut txs[idx];
            tx.mined_block = Some(number);
            tx.mined_time = Some(t);
            tx.tip = tip;
            gas_used += tx.gas;
            tx_ids.push(tx.id);
        }
        blocks.push(Block {
            number,
            timestamp: config.start_timestamp + now,
            interval,
            gas_limit,
            gas_used,
            base_fee,
            tx_ids,
        });
        let next = next_base_fee(BaseFee(base_fee as u128), gas_used as u128, &params)?;
        base_fee = u64::try_from(next.0).map_err(|_| SimError::ConfigInvalid("base fee overflowed u64".into()))?;
    }

    Ok(SimTrace {
        config: config.clone(),
        blocks,
        transactions: txs,
    })
}
