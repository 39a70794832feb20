use std::cmp::{Ordering, Reverse};
use std::collections::BTreeSet;

use super::Transaction;

/// Pending transactions indexed by valuation, so that the eligible set for a
/// base fee is a prefix of the index.
#[derive(Debug, Default, Clone)]
pub struct Mempool {
    // (valuation bits descending, index into the transaction table)
    by_valuation: BTreeSet<(Reverse<u64>, usize)>,
    min_gas: u64,
    scratch: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    tip: f64,
    submit_time: f64,
    id: u64,
    idx: usize,
    key: u64,
}

fn priority(a: &Candidate, b: &Candidate) -> Ordering {
    b.tip
        .total_cmp(&a.tip)
        .then(a.submit_time.total_cmp(&b.submit_time))
        .then(a.id.cmp(&b.id))
}

// Valuations are non-negative, so IEEE bit patterns sort like the values.
fn valuation_key(v: f64) -> u64 {
    v.max(0.0).to_bits()
}

impl Mempool {
    pub fn new() -> Self {
        Self {
            min_gas: u64::MAX,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.by_valuation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_valuation.is_empty()
    }

    pub fn insert(&mut self, tx: &Transaction, idx: usize) {
        self.min_gas = self.min_gas.min(tx.gas);
        self.by_valuation.insert((Reverse(valuation_key(tx.valuation)), idx));
    }

    /// Removes and returns `(index, effective tip)` for the transactions
    /// that go into the next block, in inclusion order.
    pub fn take_block(&mut self, txs: &[Transaction], base_fee: u64, gas_limit: u64, max_tip: f64) -> Vec<(usize, f64)> {
        let b = base_fee as f64;
        self.scratch.clear();
        for &(Reverse(key), idx) in &self.by_valuation {
            let tx = &txs[idx];
            if tx.valuation < b {
                break;
            }
            self.scratch.push(Candidate {
                tip: tx.effective_tip(b, max_tip),
                submit_time: tx.submit_time,
                id: tx.id,
                idx,
                key,
            });
        }
        if self.scratch.is_empty() {
            return Vec::new();
        }
        // Packing stops at the first misfit, so at most this many candidates
        // can matter.
        let cap = (gas_limit / self.min_gas.max(1)) as usize + 1;
        if self.scratch.len() > cap {
            self.scratch.select_nth_unstable_by(cap, priority);
            self.scratch.truncate(cap);
        }
        self.scratch.sort_unstable_by(priority);

        let mut used = 0u64;
        let mut out = Vec::new();
        for c in &self.scratch {
            let gas = txs[c.idx].gas;
            if used + gas > gas_limit {
                break;
            }
            used += gas;
            out.push((c.idx, c.tip));
            self.by_valuation.remove(&(Reverse(c.key), c.idx));
        }
        out
    }
}
