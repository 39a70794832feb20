//! EIP-1559 base-fee update law and the deterministic equilibrium model of
//! base-fee dynamics under a given block interval and demand curve.
//!
//! Everything here is generic over the scalar type. The update law only needs
//! field arithmetic, so it runs on exact rationals as well as floats; the
//! equilibrium solver bisects and therefore needs a [`Real`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Real, Scalar};

/// Gas amount in protocol units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Gas(pub u64);

/// Per-gas base fee in wei.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BaseFee<T>(pub T);

impl<T: Copy> BaseFee<T> {
    pub fn value(self) -> T {
        self.0
    }
}

/// Time between consecutive blocks, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockInterval<T>(T);

impl<T: Scalar> BlockInterval<T> {
    pub fn new(seconds: T) -> Result<Self, TfmError> {
        if seconds > T::zero() {
            Ok(Self(seconds))
        } else {
            Err(TfmError::InvalidInterval)
        }
    }

    pub fn seconds(self) -> T {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfmError {
    #[error("gas used exceeds the block gas limit of {limit}")]
    GasExceedsLimit { limit: u64 },
    #[error("gas used must be non-negative")]
    NegativeGas,
    #[error("no equilibrium base fee: {0}")]
    NoEquilibrium(&'static str),
    #[error("invalid fee parameters: {0}")]
    InvalidParams(&'static str),
    #[error("block interval must be positive")]
    InvalidInterval,
    #[error("division by zero: demand before the surge is zero")]
    DivisionByZero,
}

/// Protocol constants of the update law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeParams<T> {
    pub gas_limit: Gas,
    pub gas_target: Gas,
    pub adjustment_quotient: u32,
    pub fee_floor: BaseFee<T>,
}

impl<T: Scalar> FeeParams<T> {
    /// Mainnet-style parameters: limit is twice the target, quotient 8, and a
    /// floor of 1 wei.
    pub fn with_target(gas_target: u64) -> Self {
        Self {
            gas_limit: Gas(gas_target.saturating_mul(2)),
            gas_target: Gas(gas_target),
            adjustment_quotient: 8,
            fee_floor: BaseFee(T::one()),
        }
    }

    pub fn validate(&self) -> Result<(), TfmError> {
        if self.gas_target.0 == 0 {
            return Err(TfmError::InvalidParams("gas target must be positive"));
        }
        if self.gas_target > self.gas_limit {
            return Err(TfmError::InvalidParams("gas target exceeds gas limit"));
        }
        if self.adjustment_quotient == 0 {
            return Err(TfmError::InvalidParams("adjustment quotient must be at least 1"));
        }
        if self.fee_floor.0 < T::zero() {
            return Err(TfmError::InvalidParams("fee floor must be non-negative"));
        }
        Ok(())
    }

    fn target(&self) -> T {
        T::from_count(self.gas_target.0)
    }

    fn limit(&self) -> T {
        T::from_count(self.gas_limit.0)
    }
}

impl Default for FeeParams<f64> {
    fn default() -> Self {
        Self::with_target(15_000_000)
    }
}

/// Expected gas per second demanded by transactions whose willingness to pay
/// is at least the given base fee. Implementations must be non-increasing.
pub trait DemandCurve<T> {
    fn gas_per_second(&self, base_fee: T) -> T;
}

impl<T, F> DemandCurve<T> for F
where
    F: Fn(T) -> T,
{
    fn gas_per_second(&self, base_fee: T) -> T {
        self(base_fee)
    }
}

/// `max(0, intercept - slope * b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearDemand<T> {
    pub intercept: T,
    pub slope: T,
}

impl<T: Scalar> DemandCurve<T> for LinearDemand<T> {
    fn gas_per_second(&self, base_fee: T) -> T {
        (self.intercept - self.slope * base_fee).max_of(T::zero())
    }
}

/// Constant-elasticity demand `scale * b^(-elasticity)`.
///
/// Under this family `D(b) * I / target` depends on `b` only through
/// `b / b*`, so adjustment paths measured in blocks are the same for every
/// block interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoelasticDemand<T> {
    pub scale: T,
    pub elasticity: T,
}

impl<T: Real> IsoelasticDemand<T> {
    /// Calibrates the scale so that `D(b_eq) * interval == gas_target`.
    pub fn through_equilibrium(b_eq: T, interval: BlockInterval<T>, gas_target: Gas, elasticity: T) -> Self {
        let scale = T::from_count(gas_target.0) / interval.seconds() * b_eq.powf(elasticity);
        Self { scale, elasticity }
    }
}

impl<T: Real> DemandCurve<T> for IsoelasticDemand<T> {
    fn gas_per_second(&self, base_fee: T) -> T {
        self.scale * base_fee.powf(-self.elasticity)
    }
}

/// Demand multiplied pointwise by a constant, e.g. a surge.
#[derive(Debug, Clone, Copy)]
pub struct ScaledDemand<D, T> {
    pub inner: D,
    pub factor: T,
}

impl<T: Scalar, D: DemandCurve<T>> DemandCurve<T> for ScaledDemand<D, T> {
    fn gas_per_second(&self, base_fee: T) -> T {
        self.factor * self.inner.gas_per_second(base_fee)
    }
}

/// One block of an adjustment path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStep<T> {
    pub base_fee: BaseFee<T>,
    pub gas_used: T,
}

/// One application of the update law:
/// `max(floor, b * (1 + (used - target) / (quotient * target)))`.
pub fn next_base_fee<T: Scalar>(
    base_fee: BaseFee<T>,
    gas_used: T,
    params: &FeeParams<T>,
) -> Result<BaseFee<T>, TfmError> {
    if gas_used < T::zero() {
        return Err(TfmError::NegativeGas);
    }
    if gas_used > params.limit() {
        return Err(TfmError::GasExceedsLimit {
            limit: params.gas_limit.0,
        });
    }
    let target = params.target();
    let denom = T::from_count(params.adjustment_quotient as u64) * target;
    let next = base_fee.0 * (denom + gas_used - target) / denom;
    Ok(BaseFee(next.max_of(params.fee_floor.0)))
}

/// Solves `D(b) * I = gas_target` for `b` by bisection.
///
/// The bracket starts at the fee floor and its upper end doubles until demand
/// falls below the target. For discontinuous (step) demand the returned value
/// is the clearing price at the jump.
pub fn equilibrium_base_fee<T: Real, D: DemandCurve<T>>(
    demand: &D,
    interval: BlockInterval<T>,
    params: &FeeParams<T>,
) -> Result<BaseFee<T>, TfmError> {
    const MAX_DOUBLINGS: usize = 2048;
    const MAX_BISECTIONS: usize = 200;
    params.validate()?;
    let target = params.target();
    let excess = |b: T| demand.gas_per_second(b) * interval.seconds() - target;

    let mut lo = params.fee_floor.0;
    if excess(lo) < T::zero() {
        return Err(TfmError::NoEquilibrium(
            "demand at the fee floor is already below the gas target",
        ));
    }
    let mut hi = (lo + lo).max_of(T::one());
    let mut doublings = 0;
    while excess(hi) >= T::zero() {
        lo = hi;
        hi = hi + hi;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(TfmError::NoEquilibrium("demand never falls below the gas target"));
        }
    }

    // bisect down to working precision
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) >= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BaseFee((lo + hi) / T::lit(2.0)))
}

/// Iterates the update law against deterministic demand. Gas used in each
/// block is `min(D(b) * I, gas_limit)`.
pub fn adjustment_path<T: Scalar, D: DemandCurve<T>>(
    demand: &D,
    interval: BlockInterval<T>,
    initial: BaseFee<T>,
    n_blocks: usize,
    params: &FeeParams<T>,
) -> Result<Vec<PathStep<T>>, TfmError> {
    if n_blocks == 0 {
        return Err(TfmError::InvalidParams("path needs at least one block"));
    }
    params.validate()?;
    let limit = params.limit();
    let mut out = Vec::with_capacity(n_blocks);
    let mut b = initial;
    for k in 0..n_blocks {
        let used = (demand.gas_per_second(b.0) * interval.seconds()).min_of(limit);
        out.push(PathStep {
            base_fee: b,
            gas_used: used,
        });
        if k + 1 < n_blocks {
            b = next_base_fee(b, used, params)?;
        }
    }
    Ok(out)
}

/// Base fee that restores target gas usage immediately after switching to a
/// new block interval (or a new demand curve), to be set in advance of the switch.
pub fn compensating_base_fee<T: Real, D: DemandCurve<T>>(
    demand: &D,
    new_interval: BlockInterval<T>,
    params: &FeeParams<T>,
) -> Result<BaseFee<T>, TfmError> {
    equilibrium_base_fee(demand, new_interval, params)
}

/// Relative base-fee change in the first block of a demand surge at
/// equilibrium: `(D' - D) / (quotient * D)`. The block interval cancels out.
pub fn surge_step_ratio<T: Scalar>(demand_before: T, demand_after: T, quotient: u32) -> Result<T, TfmError> {
    if demand_before == T::zero() {
        return Err(TfmError::DivisionByZero);
    }
    if quotient == 0 {
        return Err(TfmError::InvalidParams("adjustment quotient must be at least 1"));
    }
    Ok((demand_after - demand_before) / (demand_before * T::from_count(quotient as u64)))
}

/// Index of the first block whose base fee is within `rel_tol` of `target`.
pub fn blocks_to_converge<T: Scalar>(path: &[PathStep<T>], target: BaseFee<T>, rel_tol: T) -> Option<usize> {
    path.iter().position(|step| {
        let b = step.base_fee.0;
        let diff = if b > target.0 { b - target.0 } else { target.0 - b };
        diff <= rel_tol * target.0
    })
}
