//! Stochastic transaction arrivals and the aggregate demand curves they imply.
//!
//! A scenario file is the JSON form of [`Scenario`]:
//!
//! ```json
//! {
//!   "arrivals": {
//!     "rate_schedule": [{"start": 0.0, "rate": 12.079}],
//!     "gas_per_tx": {"kind": "point", "gas": 150000},
//!     "valuations": {"kind": "lognormal", "mu": 24.124, "sigma": 0.5},
//!     "private_fraction": 0.05,
//!     "sanctioned_fraction": 0.001
//!   },
//!   "surges": [{"start": 3600.0, "end": 4200.0, "multiplier": 3.0}]
//! }
//! ```
//!
//! Times are seconds from the start of the simulation, valuations are wei
//! per gas (`mu` is the log of the median valuation in wei).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::Transaction;
use crate::stats::{erfc, normal_quantile};
use crate::tfm::DemandCurve;

/// RNG stream used for arrivals; the simulator draws block intervals from a
/// different stream of the same seed.
pub const ARRIVAL_STREAM: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemandError {
    #[error("invalid valuation distribution: {0}")]
    InvalidValuation(&'static str),
    #[error("invalid gas distribution: {0}")]
    InvalidGas(&'static str),
    #[error("invalid arrival process: {0}")]
    InvalidProcess(&'static str),
    #[error("invalid surge schedule: {0}")]
    InvalidSurge(&'static str),
    #[error("horizon must be positive")]
    InvalidHorizon,
}

/// Willingness to pay per unit of gas, in wei.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValuationDist {
    Lognormal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    Point { value: f64 },
}

impl ValuationDist {
    pub fn validate(&self) -> Result<(), DemandError> {
        let ok = match *self {
            ValuationDist::Lognormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma >= 0.0,
            ValuationDist::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo,
            ValuationDist::Point { value } => value.is_finite() && value >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(DemandError::InvalidValuation("parameters must give finite non-negative valuations"))
        }
    }

    /// Inverse-CDF sample from a uniform draw in `[0, 1)`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            ValuationDist::Lognormal { mu, sigma } => {
                // u == 0 maps to a zero valuation rather than exp(-inf)
                if u <= 0.0 {
                    0.0
                } else {
                    (mu + sigma * normal_quantile(u)).exp()
                }
            }
            ValuationDist::Uniform { lo, hi } => lo + u * (hi - lo),
            ValuationDist::Point { value } => value,
        }
    }

    /// `P(V >= b)`.
    pub fn survival(&self, b: f64) -> f64 {
        match *self {
            ValuationDist::Lognormal { mu, sigma } => {
                if b <= 0.0 {
                    1.0
                } else if sigma == 0.0 {
                    if b.ln() <= mu {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    0.5 * erfc((b.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            ValuationDist::Uniform { lo, hi } => {
                if b <= lo {
                    1.0
                } else if b > hi {
                    0.0
                } else if hi == lo {
                    1.0
                } else {
                    (hi - b) / (hi - lo)
                }
            }
            ValuationDist::Point { value } => {
                if b <= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Gas consumed per transaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GasDist {
    Point { gas: u64 },
    /// Uniform on the integers `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
}

impl Default for GasDist {
    fn default() -> Self {
        GasDist::Point { gas: 150_000 }
    }
}

impl GasDist {
    pub fn mean(&self) -> f64 {
        match *self {
            GasDist::Point { gas } => gas as f64,
            GasDist::Uniform { lo, hi } => (lo as f64 + hi as f64) / 2.0,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match *self {
            GasDist::Point { gas } => gas,
            GasDist::Uniform { lo, hi } => rng.gen_range(lo..=hi),
        }
    }

    fn validate(&self) -> Result<(), DemandError> {
        match *self {
            GasDist::Point { gas } if gas == 0 => Err(DemandError::InvalidGas("gas per transaction must be positive")),
            GasDist::Uniform { lo, hi } if lo == 0 || hi < lo => {
                Err(DemandError::InvalidGas("uniform gas needs 0 < lo <= hi"))
            }
            _ => Ok(()),
        }
    }
}

/// Arrival rate from `start` until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub start: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    /// Piecewise-constant schedule in transactions per second, sorted by
    /// start. The rate is zero before the first segment.
    pub rate_schedule: Vec<RateSegment>,
    #[serde(default)]
    pub gas_per_tx: GasDist,
    pub valuations: ValuationDist,
    #[serde(default)]
    pub private_fraction: f64,
    #[serde(default)]
    pub sanctioned_fraction: f64,
}

impl ArrivalProcess {
    pub fn constant(rate: f64, valuations: ValuationDist) -> Self {
        Self {
            rate_schedule: vec![RateSegment { start: 0.0, rate }],
            gas_per_tx: GasDist::default(),
            valuations,
            private_fraction: 0.0,
            sanctioned_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        self.valuations.validate()?;
        self.gas_per_tx.validate()?;
        if self.rate_schedule.iter().any(|s| !(s.rate >= 0.0) || !s.rate.is_finite()) {
            return Err(DemandError::InvalidProcess("rates must be finite and non-negative"));
        }
        if self.rate_schedule.windows(2).any(|w| !(w[0].start < w[1].start)) {
            return Err(DemandError::InvalidProcess("rate segments must be sorted by start"));
        }
        for f in [self.private_fraction, self.sanctioned_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(DemandError::InvalidProcess("fractions must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Base rate (before surges) at time `t`.
    pub fn base_rate(&self, t: f64) -> f64 {
        self.rate_schedule
            .iter()
            .take_while(|s| s.start <= t)
            .last()
            .map_or(0.0, |s| s.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surge {
    pub start: f64,
    pub end: f64,
    pub multiplier: f64,
}

/// Demand surges, e.g. NFT drops, as half-open windows `[start, end)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurgeSchedule(pub Vec<Surge>);

impl SurgeSchedule {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        if self.0.iter().any(|s| !(s.multiplier > 0.0) || !(s.end > s.start)) {
            return Err(DemandError::InvalidSurge("each surge needs end > start and multiplier > 0"));
        }
        let mut sorted: Vec<_> = self.0.iter().collect();
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        if sorted.windows(2).any(|w| w[1].start < w[0].end) {
            return Err(DemandError::InvalidSurge("surge windows overlap"));
        }
        Ok(())
    }

    pub fn multiplier_at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map_or(1.0, |s| s.multiplier)
    }

    fn max_multiplier(&self) -> f64 {
        self.0.iter().map(|s| s.multiplier).fold(1.0, f64::max)
    }
}

/// Arrival process plus surges, the contents of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub arrivals: ArrivalProcess,
    #[serde(default)]
    pub surges: SurgeSchedule,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), DemandError> {
        self.arrivals.validate()?;
        self.surges.validate()
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.arrivals.base_rate(t) * self.surges.multiplier_at(t)
    }
}

/// Draws a Poisson arrival stream over `[0, horizon]` by thinning a
/// homogeneous process at the peak rate. Identical inputs give identical
/// output.
pub fn sample_arrivals(
    process: &ArrivalProcess,
    surges: &SurgeSchedule,
    horizon: f64,
    seed: u64,
) -> Result<Vec<Transaction>, DemandError> {
    if !(horizon > 0.0) {
        return Err(DemandError::InvalidHorizon);
    }
    process.validate()?;
    surges.validate()?;
    let peak = process.rate_schedule.iter().map(|s| s.rate).fold(0.0, f64::max) * surges.max_multiplier();
    let mut out = Vec::new();
    if peak == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ARRIVAL_STREAM);
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen();
        t -= (1.0 - u).ln() / peak;
        if t > horizon {
            break;
        }
        let rate = process.base_rate(t) * surges.multiplier_at(t);
        let accept: f64 = rng.gen();
        if accept * peak >= rate {
            continue;
        }
        let gas = process.gas_per_tx.sample(&mut rng);
        let valuation = process.valuations.from_uniform(rng.gen());
        let private = rng.gen::<f64>() < process.private_fraction;
        let sanctioned = rng.gen::<f64>() < process.sanctioned_fraction;
        out.push(Transaction::new(out.len() as u64, t, gas, valuation, private, sanctioned));
    }
    Ok(out)
}

/// `b -> rate * E[gas] * P(valuation >= b)` frozen at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalDemand {
    /// Gas per second at a zero base fee.
    pub gas_rate: f64,
    pub valuations: ValuationDist,
}

impl DemandCurve<f64> for EmpiricalDemand {
    fn gas_per_second(&self, base_fee: f64) -> f64 {
        self.gas_rate * self.valuations.survival(base_fee)
    }
}

pub fn empirical_demand_curve(process: &ArrivalProcess, surges: &SurgeSchedule, at_time: f64) -> EmpiricalDemand {
    EmpiricalDemand {
        gas_rate: process.base_rate(at_time) * surges.multiplier_at(at_time) * process.gas_per_tx.mean(),
        valuations: process.valuations,
    }
}
