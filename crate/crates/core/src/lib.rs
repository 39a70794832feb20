//! Fee-market simulation and Merge analysis toolkit.
//!
//! The crate covers the EIP-1559 base-fee law and its equilibria
//! ([`tfm`]), a mempool and block-production simulator ([`sim`]) driven by
//! stochastic demand ([`demand`]), per-block metrics ([`metrics`]),
//! regression discontinuity estimators ([`causal`]), a decomposable
//! time-series model ([`forecast`]), CSV loaders ([`ingest`]) and a graph of
//! sanctioned transactions ([`txgraph`]).
//!
//! Fee arithmetic is generic over [`Scalar`]; the aliases below fix the
//! common instantiations.

pub mod causal;
pub mod demand;
pub mod experiment;
pub mod forecast;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod tfm;
pub mod txgraph;

use num_rational::Ratio;
use thiserror::Error;

pub use scalar::{Real, Scalar};
pub use tfm::{BaseFee, BlockInterval, FeeParams, Gas, TfmError};

pub type BaseFeeF64 = BaseFee<f64>;
pub type BaseFeeF32 = BaseFee<f32>;
pub type BaseFeeWei = BaseFee<u128>;
/// Exact rational base fee; the update law is closed over rationals.
pub type ExactBaseFee = BaseFee<Ratio<i128>>;
pub type FeeParamsF64 = FeeParams<f64>;
pub type FeeParamsWei = FeeParams<u128>;
pub type ExactFeeParams = FeeParams<Ratio<i128>>;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fee(#[from] TfmError),
    #[error(transparent)]
    Demand(#[from] demand::DemandError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Causal(#[from] causal::CausalError),
    #[error(transparent)]
    Forecast(#[from] forecast::ForecastError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Graph(#[from] txgraph::GraphError),
}

impl Error {
    /// True for failures of a numerical procedure on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Fee(e) => matches!(e, TfmError::NoEquilibrium(_) | TfmError::DivisionByZero),
            Error::Causal(e) => e.is_numerical(),
            Error::Forecast(e) => e.is_numerical(),
            _ => false,
        }
    }
}
