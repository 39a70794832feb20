use std::io::Write;
use std::path::{Path, PathBuf};

use super::{SimError, SimTrace};

/// Receiver used for sanctioned simulated transactions.
const SANCTIONED_ADDRESS: &str = "0xd90e2f925da726b50c4ed8d0fb90ad053324f31b";
const RECEIVER_POOL: u64 = 1_000;

pub fn sanctioned_address() -> &'static str {
    SANCTIONED_ADDRESS
}

pub fn tx_hash(id: u64) -> String {
    format!("0x{id:064x}")
}

pub fn tx_from_address(id: u64) -> String {
    format!("0x1{id:039x}")
}

pub fn tx_to_address(id: u64, sanctioned: bool) -> String {
    if sanctioned {
        SANCTIONED_ADDRESS.to_string()
    } else {
        format!("0x2{:039x}", id % RECEIVER_POOL)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedFiles {
    pub blocks: PathBuf,
    pub transactions: PathBuf,
    pub delays: PathBuf,
    pub sanctions: PathBuf,
}

impl ExportedFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            blocks: dir.join("blocks.csv"),
            transactions: dir.join("transactions.csv"),
            delays: dir.join("delays.csv"),
            sanctions: dir.join("sanctions.csv"),
        }
    }

    pub fn all(&self) -> [&Path; 4] {
        [&self.blocks, &self.transactions, &self.delays, &self.sanctions]
    }
}

impl SimTrace {
    /// Block table with the chain export column names.
    pub fn write_blocks<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["number", "gas_limit", "gas_used", "transaction_count", "timestamp", "base_fee_per_gas"])?;
        for b in &self.blocks {
            out.write_record([
                b.number.to_string(),
                b.gas_limit.to_string(),
                b.gas_used.to_string(),
                b.tx_ids.len().to_string(),
                b.timestamp.to_string(),
                b.base_fee.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Mined transactions with synthetic hashes and addresses.
    pub fn write_transactions<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["block_number", "hash", "from_address", "to_address"])?;
        let lookup = self.tx_lookup();
        for b in &self.blocks {
            for &id in &b.tx_ids {
                let tx = lookup[&id];
                out.write_record([
                    b.number.to_string(),
                    tx_hash(id),
                    tx_from_address(id),
                    tx_to_address(id, tx.sanctioned),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Mempool observations: mined public transactions and their waiting
    /// times. Private transactions have no row.
    pub fn write_delays<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["included_in_block_num", "delay", "hash"])?;
        let lookup = self.tx_lookup();
        for b in &self.blocks {
            for &id in &b.tx_ids {
                let tx = lookup[&id];
                if tx.private {
                    continue;
                }
                let delay = tx.waiting_time().expect("mined transaction has a mined time");
                out.write_record([b.number.to_string(), delay.to_string(), tx_hash(id)])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_sanctions<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["address"])?;
        out.write_record([SANCTIONED_ADDRESS])?;
        out.flush()?;
        Ok(())
    }
}

/// Writes `blocks.csv`, `transactions.csv`, `delays.csv` and
/// `sanctions.csv` into `dir`, in the same layout the loaders expect.
pub fn export_trace(trace: &SimTrace, dir: &Path) -> Result<ExportedFiles, SimError> {
    std::fs::create_dir_all(dir)?;
    let files = ExportedFiles::in_dir(dir);
    let open = |p: &Path| std::fs::File::create(p).map(std::io::BufWriter::new);
    trace.write_blocks(open(&files.blocks)?)?;
    trace.write_transactions(open(&files.transactions)?)?;
    trace.write_delays(open(&files.delays)?)?;
    trace.write_sanctions(open(&files.sanctions)?)?;
    Ok(files)
}
