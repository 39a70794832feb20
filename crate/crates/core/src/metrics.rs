//! Per-block and per-day outcome variables: waiting-time quantiles, network
//! load (gas per second and its trailing moving averages), market congestion
//! and continued congestion, plus the panel that feeds the regressions.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::sim::SimTrace;
use crate::stats::quantile_sorted;

/// First block produced after the switch to proof of stake.
pub const MERGE_BLOCK: u64 = 15_537_393;
/// Public-mempool arrival rates (tx/s) measured before and after the Merge.
pub const PRE_MERGE_ARRIVAL_RATE: f64 = 12.079;
pub const POST_MERGE_ARRIVAL_RATE: f64 = 12.997;
/// A block is congested when it uses more than this share of its limit.
pub const DEFAULT_CUT: f64 = 0.95;
/// Consecutive congested blocks that make up continued congestion.
pub const DEFAULT_RUN: usize = 5;
pub const SHORT_WINDOW: usize = 5;
pub const LONG_WINDOW: usize = 7_200;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no observations")]
    EmptyInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("zero or negative block interval at position {0}")]
    ZeroInterval(usize),
    #[error("panel is empty")]
    EmptyPanel,
    #[error("time span must be positive")]
    ZeroSpan,
    #[error("cut must lie in (0, 1], got {0}")]
    InvalidCut(f64),
    #[error("run length must be at least 1")]
    InvalidRun,
    #[error("blocks are not strictly increasing in number and timestamp at position {0}")]
    NonMonotoneBlocks(usize),
    #[error("timestamp {0} is out of range")]
    BadTimestamp(u64),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitingStats<T> {
    pub q25: T,
    pub median: T,
    pub q75: T,
    pub iqr: T,
}

/// Quartiles (type-7 interpolation) and interquartile range of delays.
pub fn waiting_stats<T: Real>(delays: &[T]) -> Result<WaitingStats<T>, MetricsError> {
    if delays.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if delays.iter().any(|d| !d.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let mut sorted = delays.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values are ordered"));
    let q25 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q75 = quantile_sorted(&sorted, 0.75);
    Ok(WaitingStats {
        q25,
        median,
        q75,
        iqr: q75 - q25,
    })
}

/// Network load per block: gas used divided by the block interval.
pub fn gas_per_second<T: Real>(gas_used: &[T], intervals: &[T]) -> Result<Vec<T>, MetricsError> {
    assert_eq!(gas_used.len(), intervals.len(), "one interval per block");
    gas_used
        .iter()
        .zip(intervals)
        .enumerate()
        .map(|(i, (&g, &dt))| {
            if dt > T::zero() {
                Ok(g / dt)
            } else {
                Err(MetricsError::ZeroInterval(i))
            }
        })
        .collect()
}

/// Trailing mean over the last `window` values; `None` during warm-up.
pub fn trailing_mean<T: Real>(xs: &[T], window: usize) -> Vec<Option<T>> {
    assert!(window >= 1, "window must be at least 1");
    let w = T::from_count(window as u64);
    // Neumaier-compensated running sum
    let mut sum = T::zero();
    let mut comp = T::zero();
    let add = |sum: &mut T, comp: &mut T, v: T| {
        let t = *sum + v;
        if sum.abs() >= v.abs() {
            *comp = *comp + ((*sum - t) + v);
        } else {
            *comp = *comp + ((v - t) + *sum);
        }
        *sum = t;
    };
    let mut out = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        add(&mut sum, &mut comp, x);
        if i >= window {
            add(&mut sum, &mut comp, -xs[i - window]);
        }
        out.push(if i + 1 >= window { Some((sum + comp) / w) } else { None });
    }
    out
}

fn check_cut(cut: f64) -> Result<(), MetricsError> {
    if cut > 0.0 && cut <= 1.0 {
        Ok(())
    } else {
        Err(MetricsError::InvalidCut(cut))
    }
}

/// `gas_used > cut * gas_limit`, strictly. Products that land within
/// rounding of an integer boundary count as equal.
pub fn is_congested(gas_used: u64, gas_limit: u64, cut: f64) -> bool {
    let threshold = cut * gas_limit as f64;
    gas_used as f64 - threshold > 1e-9 * gas_limit as f64
}

pub fn congestion_flags<I>(usage: I, cut: f64) -> Result<Vec<bool>, MetricsError>
where
    I: IntoIterator<Item = (u64, u64)>,
{
    check_cut(cut)?;
    Ok(usage.into_iter().map(|(g, l)| is_congested(g, l, cut)).collect())
}

/// True at block n when blocks n-k+1..=n are all congested.
pub fn continued_congestion(flags: &[bool], k: usize) -> Result<Vec<bool>, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidRun);
    }
    let mut run = 0usize;
    Ok(flags
        .iter()
        .map(|&f| {
            run = if f { run + 1 } else { 0 };
            run >= k
        })
        .collect())
}

/// Share of blocks congested at each cut.
pub fn congestion_by_cut(usage: &[(u64, u64)], cuts: &[f64]) -> Result<Vec<(f64, f64)>, MetricsError> {
    if usage.is_empty() {
        return Err(MetricsError::EmptyPanel);
    }
    cuts.iter()
        .map(|&cut| {
            check_cut(cut)?;
            let hits = usage.iter().filter(|&&(g, l)| is_congested(g, l, cut)).count();
            Ok((cut, hits as f64 / usage.len() as f64))
        })
        .collect()
}

pub fn arrival_rate(tx_count: u64, span_seconds: f64) -> Result<f64, MetricsError> {
    if span_seconds > 0.0 {
        Ok(tx_count as f64 / span_seconds)
    } else {
        Err(MetricsError::ZeroSpan)
    }
}

mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("expected 0 or 1, got {other}"))),
        }
    }
}

/// One block of the analysis panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub number: u64,
    /// `number - cutoff`.
    pub blockn: i64,
    #[serde(with = "flag")]
    pub merged: bool,
    pub timestamp: u64,
    pub interval: f64,
    pub gas_used: u64,
    pub gas_limit: u64,
    pub base_fee: u64,
    pub delay_median: Option<f64>,
    pub delay_q25: Option<f64>,
    pub delay_q75: Option<f64>,
    pub delay_iqr: Option<f64>,
    pub gps: f64,
    pub gps_ma5: Option<f64>,
    pub gps_ma7200: Option<f64>,
    #[serde(with = "flag")]
    pub congested: bool,
    #[serde(with = "flag")]
    pub continued_congested: bool,
    pub tx_count: u64,
    pub observed_delay_count: u64,
    pub unobserved_delay_count: u64,
    pub sanctioned_count: u64,
}

/// Raw per-block facts from which a [`PanelRow`] is derived.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockObservation {
    pub number: u64,
    pub timestamp: u64,
    pub gas_used: u64,
    pub gas_limit: u64,
    pub base_fee: u64,
    pub tx_count: u64,
    /// Waiting times of the block's transactions seen in the mempool.
    pub delays: Vec<f64>,
    pub unobserved: u64,
    pub sanctioned: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelOptions {
    pub cutoff: u64,
    /// Interval assigned to the first block, which has no parent in range.
    pub first_interval: f64,
    pub cut: f64,
    pub run_length: usize,
}

impl PanelOptions {
    pub fn new(first_interval: f64) -> Self {
        Self {
            cutoff: MERGE_BLOCK,
            first_interval,
            cut: DEFAULT_CUT,
            run_length: DEFAULT_RUN,
        }
    }
}

/// Builds panel rows from time-ordered block observations.
pub fn assemble_panel(obs: &[BlockObservation], opts: &PanelOptions) -> Result<Vec<PanelRow>, MetricsError> {
    if obs.is_empty() {
        return Err(MetricsError::EmptyPanel);
    }
    if let Some(i) = obs
        .windows(2)
        .position(|w| w[1].number <= w[0].number || w[1].timestamp <= w[0].timestamp)
    {
        return Err(MetricsError::NonMonotoneBlocks(i + 1));
    }
    let intervals: Vec<f64> = std::iter::once(opts.first_interval)
        .chain(obs.windows(2).map(|w| (w[1].timestamp - w[0].timestamp) as f64))
        .collect();
    let gas: Vec<f64> = obs.iter().map(|o| o.gas_used as f64).collect();
    let gps = gas_per_second(&gas, &intervals)?;
    let ma5 = trailing_mean(&gps, SHORT_WINDOW);
    let ma7200 = trailing_mean(&gps, LONG_WINDOW);
    let congested = congestion_flags(obs.iter().map(|o| (o.gas_used, o.gas_limit)), opts.cut)?;
    let continued = continued_congestion(&congested, opts.run_length)?;

    obs.iter()
        .enumerate()
        .map(|(i, o)| {
            let stats = if o.delays.is_empty() {
                None
            } else {
                Some(waiting_stats(&o.delays)?)
            };
            Ok(PanelRow {
                number: o.number,
                blockn: o.number as i64 - opts.cutoff as i64,
                merged: o.number >= opts.cutoff,
                timestamp: o.timestamp,
                interval: intervals[i],
                gas_used: o.gas_used,
                gas_limit: o.gas_limit,
                base_fee: o.base_fee,
                delay_median: stats.map(|s| s.median),
                delay_q25: stats.map(|s| s.q25),
                delay_q75: stats.map(|s| s.q75),
                delay_iqr: stats.map(|s| s.iqr),
                gps: gps[i],
                gps_ma5: ma5[i],
                gps_ma7200: ma7200[i],
                congested: congested[i],
                continued_congested: continued[i],
                tx_count: o.tx_count,
                observed_delay_count: o.delays.len() as u64,
                unobserved_delay_count: o.unobserved,
                sanctioned_count: o.sanctioned,
            })
        })
        .collect()
}

/// Panel computed directly from an in-memory simulation trace. The first
/// block's interval is the regime's mean, as for ingested exports.
pub fn panel_from_trace(trace: &SimTrace, cutoff: u64) -> Result<Vec<PanelRow>, MetricsError> {
    let lookup = trace.tx_lookup();
    let obs: Vec<BlockObservation> = trace
        .blocks
        .iter()
        .map(|b| {
            let txs: Vec<_> = b.tx_ids.iter().map(|id| lookup[id]).collect();
            BlockObservation {
                number: b.number,
                timestamp: b.timestamp,
                gas_used: b.gas_used,
                gas_limit: b.gas_limit,
                base_fee: b.base_fee,
                tx_count: txs.len() as u64,
                delays: txs
                    .iter()
                    .filter(|t| !t.private)
                    .map(|t| t.waiting_time().expect("mined"))
                    .collect(),
                unobserved: txs.iter().filter(|t| t.private).count() as u64,
                sanctioned: txs.iter().filter(|t| t.sanctioned).count() as u64,
            }
        })
        .collect();
    let opts = PanelOptions {
        cutoff,
        ..PanelOptions::new(trace.config.regime.mean())
    };
    assemble_panel(&obs, &opts)
}

/// Intraday congestion ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyPoint {
    pub date: NaiveDate,
    pub blocks: u64,
    pub congestion_ratio: f64,
    pub continued_congestion_ratio: f64,
}

/// Groups the panel by UTC calendar day; each day is normalised by its own
/// block count.
pub fn daily_ratios(panel: &[PanelRow]) -> Result<Vec<DailyPoint>, MetricsError> {
    if panel.is_empty() {
        return Err(MetricsError::EmptyPanel);
    }
    let mut days: BTreeMap<NaiveDate, (u64, u64, u64)> = BTreeMap::new();
    for row in panel {
        let date = DateTime::from_timestamp(row.timestamp as i64, 0)
            .ok_or(MetricsError::BadTimestamp(row.timestamp))?
            .date_naive();
        let e = days.entry(date).or_default();
        e.0 += 1;
        e.1 += row.congested as u64;
        e.2 += row.continued_congested as u64;
    }
    Ok(days
        .into_iter()
        .map(|(date, (n, c, cc))| DailyPoint {
            date,
            blocks: n,
            congestion_ratio: c as f64 / n as f64,
            continued_congestion_ratio: cc as f64 / n as f64,
        })
        .collect())
}

/// Aggregates reported by the CLI and used to compare regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub blocks: usize,
    pub mean_interval: f64,
    pub mean_gps: f64,
    pub max_gps_ma5: Option<f64>,
    /// Means of the intrablock quantiles over blocks with observed delays.
    pub mean_delay_q75: Option<f64>,
    pub mean_delay_iqr: Option<f64>,
    /// Medians of the same; robust to the few blocks that flush a long
    /// backlog of underpriced transactions.
    pub median_delay_q75: Option<f64>,
    pub median_delay_iqr: Option<f64>,
    pub congestion_ratio: f64,
    pub continued_congestion_ratio: f64,
    pub transactions: u64,
    pub unobserved: u64,
    pub sanctioned: u64,
}

fn mean_defined(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = xs.flatten().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn median_defined(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = xs.flatten().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

pub fn summarize_panel(panel: &[PanelRow]) -> Result<PanelSummary, MetricsError> {
    if panel.is_empty() {
        return Err(MetricsError::EmptyPanel);
    }
    let n = panel.len() as f64;
    Ok(PanelSummary {
        blocks: panel.len(),
        mean_interval: panel.iter().map(|r| r.interval).sum::<f64>() / n,
        mean_gps: panel.iter().map(|r| r.gps).sum::<f64>() / n,
        max_gps_ma5: panel.iter().filter_map(|r| r.gps_ma5).reduce(f64::max),
        mean_delay_q75: mean_defined(panel.iter().map(|r| r.delay_q75)),
        mean_delay_iqr: mean_defined(panel.iter().map(|r| r.delay_iqr)),
        median_delay_q75: median_defined(panel.iter().map(|r| r.delay_q75)),
        median_delay_iqr: median_defined(panel.iter().map(|r| r.delay_iqr)),
        congestion_ratio: panel.iter().filter(|r| r.congested).count() as f64 / n,
        continued_congestion_ratio: panel.iter().filter(|r| r.continued_congested).count() as f64 / n,
        transactions: panel.iter().map(|r| r.tx_count).sum(),
        unobserved: panel.iter().map(|r| r.unobserved_delay_count).sum(),
        sanctioned: panel.iter().map(|r| r.sanctioned_count).sum(),
    })
}

pub fn write_panel_csv<W: Write>(panel: &[PanelRow], w: W) -> Result<(), MetricsError> {
    let mut out = csv::Writer::from_writer(w);
    for row in panel {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_panel_csv<R: Read>(r: R) -> Result<Vec<PanelRow>, MetricsError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<PanelRow>, _>>()?)
}

pub fn write_daily_csv<W: Write>(days: &[DailyPoint], w: W) -> Result<(), MetricsError> {
    let mut out = csv::Writer::from_writer(w);
    for d in days {
        out.serialize(d)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
