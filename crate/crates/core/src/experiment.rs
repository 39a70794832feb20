//! Paired simulation sweeps comparing two block-interval regimes on a
//! common arrival stream.

use serde::{Deserialize, Serialize};

use crate::demand::{empirical_demand_curve, sample_arrivals, Scenario};
use crate::metrics::{panel_from_trace, summarize_panel, PanelRow, PanelSummary};
use crate::sim::{run, IntervalRegime, SimConfig, SimTrace};
use crate::stats::sign_test_p;
use crate::tfm::{equilibrium_base_fee, BaseFee, BlockInterval, FeeParams};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scenario: Scenario,
    /// Regime expected to perform better (lower is better on every metric).
    pub treatment: IntervalRegime,
    pub control: IntervalRegime,
    pub seeds: Vec<u64>,
    pub horizon: f64,
    /// Starting base fee in wei; defaults to the equilibrium of the
    /// initial demand under the control regime.
    #[serde(default)]
    pub initial_base_fee: Option<u64>,
    #[serde(default)]
    pub max_tip: Option<f64>,
    #[serde(default)]
    pub gas_target: Option<u64>,
}

impl SweepSpec {
    pub fn fee_params(&self) -> FeeParams<u64> {
        FeeParams::with_target(self.gas_target.unwrap_or(15_000_000))
    }

    pub fn start_fee(&self) -> Result<u64, Error> {
        if let Some(b) = self.initial_base_fee {
            return Ok(b);
        }
        let b = initial_equilibrium(&self.scenario, self.control.mean(), self.fee_params().gas_target.0)?;
        Ok(b.value().round().max(1.0) as u64)
    }

    pub fn config(&self, regime: IntervalRegime, seed: u64) -> Result<SimConfig, Error> {
        let mut c = SimConfig::new(regime, self.start_fee()?, self.horizon, seed);
        c.fee = self.fee_params();
        if let Some(t) = self.max_tip {
            c.max_tip = t;
        }
        Ok(c)
    }
}

/// Arrival stream for a seed; the same for every regime.
pub fn simulate(scenario: &Scenario, config: &SimConfig) -> Result<SimTrace, Error> {
    scenario.validate()?;
    let arrivals = sample_arrivals(&scenario.arrivals, &scenario.surges, config.horizon, config.seed)?;
    Ok(run(config, arrivals)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub regime: String,
    #[serde(flatten)]
    pub panel: PanelSummary,
    pub pending_at_end: usize,
    pub final_base_fee: u64,
}

pub fn summarize_run(trace: &SimTrace, panel: &[PanelRow]) -> Result<RunSummary, Error> {
    Ok(RunSummary {
        seed: trace.config.seed,
        regime: trace.config.regime.label(),
        panel: summarize_panel(panel)?,
        pending_at_end: trace.pending().count(),
        final_base_fee: trace.blocks.last().map(|b| b.base_fee).unwrap_or(trace.config.initial_base_fee),
    })
}

pub fn run_one(spec: &SweepSpec, regime: IntervalRegime, seed: u64) -> Result<RunSummary, Error> {
    let config = spec.config(regime, seed)?;
    let trace = simulate(&spec.scenario, &config)?;
    let panel = panel_from_trace(&trace, config.start_block)?;
    summarize_run(&trace, &panel)
}

/// Outcomes compared across regimes; all are "lower is better".
pub const COMPARED: [&str; 5] = [
    "median_delay_q75",
    "median_delay_iqr",
    "congestion_ratio",
    "continued_congestion_ratio",
    "max_gps_ma5",
];

pub fn metric(s: &RunSummary, name: &str) -> Option<f64> {
    match name {
        "mean_delay_q75" => s.panel.mean_delay_q75,
        "mean_delay_iqr" => s.panel.mean_delay_iqr,
        "median_delay_q75" => s.panel.median_delay_q75,
        "median_delay_iqr" => s.panel.median_delay_iqr,
        "congestion_ratio" => Some(s.panel.congestion_ratio),
        "continued_congestion_ratio" => Some(s.panel.continued_congestion_ratio),
        "max_gps_ma5" => s.panel.max_gps_ma5,
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub metric: String,
    /// Pairs where the treatment value is strictly lower.
    pub wins: usize,
    pub losses: usize,
    /// Equal pairs, excluded from the test.
    pub ties: usize,
    /// One-sided `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
    pub p_value: f64,
    pub mean_treatment: f64,
    pub mean_control: f64,
}

pub fn sign_test(metric: &str, pairs: &[(f64, f64)]) -> SignTest {
    let wins = pairs.iter().filter(|(t, c)| t < c).count();
    let losses = pairs.iter().filter(|(t, c)| t > c).count();
    let n = pairs.len().max(1) as f64;
    SignTest {
        metric: metric.to_string(),
        wins,
        losses,
        ties: pairs.len() - wins - losses,
        p_value: sign_test_p(wins, wins + losses),
        mean_treatment: pairs.iter().map(|p| p.0).sum::<f64>() / n,
        mean_control: pairs.iter().map(|p| p.1).sum::<f64>() / n,
    }
}

/// Pairs runs by seed and tests each compared metric. Pairs where a
/// metric is undefined on either side are skipped for that metric.
pub fn compare(treatment: &[RunSummary], control: &[RunSummary]) -> Vec<SignTest> {
    COMPARED
        .iter()
        .map(|&m| {
            let pairs: Vec<(f64, f64)> = treatment
                .iter()
                .filter_map(|t| {
                    let c = control.iter().find(|c| c.seed == t.seed)?;
                    Some((metric(t, m)?, metric(c, m)?))
                })
                .collect();
            sign_test(m, &pairs)
        })
        .collect()
}

/// Runs every (seed, regime) pair sequentially.
pub fn sweep(spec: &SweepSpec) -> Result<(Vec<RunSummary>, Vec<RunSummary>), Error> {
    let mut t = Vec::with_capacity(spec.seeds.len());
    let mut c = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        t.push(run_one(spec, spec.treatment, seed)?);
        c.push(run_one(spec, spec.control, seed)?);
    }
    Ok((t, c))
}

/// Equilibrium base fee of a scenario's initial demand, in wei.
pub fn initial_equilibrium(scenario: &Scenario, interval: f64, gas_target: u64) -> Result<BaseFee<f64>, Error> {
    let d = empirical_demand_curve(&scenario.arrivals, &scenario.surges, 0.0);
    Ok(equilibrium_base_fee(
        &d,
        BlockInterval::new(interval)?,
        &FeeParams::<f64>::with_target(gas_target),
    )?)
}
