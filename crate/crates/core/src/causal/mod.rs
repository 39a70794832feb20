//! Regression discontinuity estimators around a block-number cutoff:
//!
//! `y = a0 + a1·merged + a2·blockn + a3·merged·blockn + e`
//!
//! OLS for continuous outcomes and a logit model for congestion flags.

mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, PivotedCholesky};
use crate::metrics::PanelRow;
use crate::stats::{normal_two_sided_p, t_two_sided_p};

pub use table::{render_json, render_text, stars, Fit};

#[derive(Debug, Error, PartialEq)]
pub enum CausalError {
    #[error("panel has no rows with a defined outcome")]
    EmptyPanel,
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("unknown column spec `{0}`")]
    UnknownSpec(String),
    #[error("design is rank deficient (column `{0}`)")]
    SingularDesign(String),
    #[error("need more observations than the {0} regressors")]
    TooFewObservations(usize),
    #[error("outcome must be 0/1 for a logit fit")]
    NonBinaryOutcome,
    #[error("outcome has a single class")]
    NoVariation,
    #[error("perfect or quasi-complete separation")]
    Separation,
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("fit has no `merged` coefficient")]
    MissingMerged,
}

impl CausalError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Self::SingularDesign(_) | Self::Separation | Self::NonConvergence(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    DelayQ25,
    DelayMedian,
    DelayQ75,
    DelayIqr,
    Gps,
    GpsMa5,
    GpsMa7200,
    Congested,
    ContinuedCongested,
}

impl Outcome {
    pub const ALL: [Outcome; 9] = [
        Outcome::DelayQ25,
        Outcome::DelayMedian,
        Outcome::DelayQ75,
        Outcome::DelayIqr,
        Outcome::Gps,
        Outcome::GpsMa5,
        Outcome::GpsMa7200,
        Outcome::Congested,
        Outcome::ContinuedCongested,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::DelayQ25 => "delay_q25",
            Outcome::DelayMedian => "delay_median",
            Outcome::DelayQ75 => "delay_q75",
            Outcome::DelayIqr => "delay_iqr",
            Outcome::Gps => "gps",
            Outcome::GpsMa5 => "gps_ma5",
            Outcome::GpsMa7200 => "gps_ma7200",
            Outcome::Congested => "congested",
            Outcome::ContinuedCongested => "continued_congested",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, CausalError> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == name)
            .ok_or_else(|| CausalError::UnknownOutcome(name.to_string()))
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Outcome::Congested | Outcome::ContinuedCongested)
    }

    pub fn unit(self) -> &'static str {
        match self {
            Outcome::DelayQ25 | Outcome::DelayMedian | Outcome::DelayQ75 | Outcome::DelayIqr => "s",
            Outcome::Gps | Outcome::GpsMa5 | Outcome::GpsMa7200 => "gas/s",
            Outcome::Congested | Outcome::ContinuedCongested => "",
        }
    }

    pub fn value(self, row: &PanelRow) -> Option<f64> {
        match self {
            Outcome::DelayQ25 => row.delay_q25,
            Outcome::DelayMedian => row.delay_median,
            Outcome::DelayQ75 => row.delay_q75,
            Outcome::DelayIqr => row.delay_iqr,
            Outcome::Gps => Some(row.gps),
            Outcome::GpsMa5 => row.gps_ma5,
            Outcome::GpsMa7200 => row.gps_ma7200,
            Outcome::Congested => Some(row.congested as u8 as f64),
            Outcome::ContinuedCongested => Some(row.continued_congested as u8 as f64),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Nested regressor sets of the three table columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ColumnSpec {
    /// intercept, merged
    One,
    /// + blockn
    Two,
    /// + merged·blockn
    Three,
}

impl ColumnSpec {
    pub const ALL: [ColumnSpec; 3] = [ColumnSpec::One, ColumnSpec::Two, ColumnSpec::Three];

    pub fn columns(self) -> &'static [&'static str] {
        const NAMES: [&str; 4] = ["Intercept", "merged", "blockn", "merged:blockn"];
        &NAMES[..self.width()]
    }

    pub fn width(self) -> usize {
        match self {
            ColumnSpec::One => 2,
            ColumnSpec::Two => 3,
            ColumnSpec::Three => 4,
        }
    }

    pub fn parse(s: &str) -> Result<Self, CausalError> {
        match s {
            "1" => Ok(ColumnSpec::One),
            "2" => Ok(ColumnSpec::Two),
            "3" => Ok(ColumnSpec::Three),
            other => Err(CausalError::UnknownSpec(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub columns: Vec<String>,
    pub x: Matrix<f64>,
    pub y: Vec<f64>,
}

impl DesignMatrix {
    /// Design from raw regressors; `x` is row-major with one row per observation.
    pub fn new(columns: Vec<String>, x: Matrix<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.cols(), columns.len(), "one name per column");
        assert_eq!(x.rows(), y.len(), "one outcome per row");
        Self { columns, x, y }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Regressors for one panel row: `[1, merged, blockn, merged·blockn]` truncated to the spec.
pub fn regressors(row: &PanelRow, spec: ColumnSpec) -> Vec<f64> {
    let merged = if row.merged { 1.0 } else { 0.0 };
    let blockn = row.blockn as f64;
    let mut r = vec![1.0, merged, blockn, merged * blockn];
    r.truncate(spec.width());
    r
}

/// Design for one outcome. Rows whose outcome is undefined are dropped and
/// the remainder is ordered by block number.
pub fn build_design(panel: &[PanelRow], outcome: Outcome, spec: ColumnSpec) -> Result<DesignMatrix, CausalError> {
    let mut rows: Vec<(&PanelRow, f64)> = panel
        .iter()
        .filter_map(|r| outcome.value(r).map(|v| (r, v)))
        .collect();
    if rows.is_empty() {
        return Err(CausalError::EmptyPanel);
    }
    rows.sort_by_key(|(r, _)| r.number);
    let p = spec.width();
    let mut data = Vec::with_capacity(rows.len() * p);
    for (r, _) in &rows {
        data.extend(regressors(r, spec));
    }
    Ok(DesignMatrix::new(
        spec.columns().iter().map(|s| s.to_string()).collect(),
        Matrix::from_rows(rows.len(), p, data),
        rows.iter().map(|(_, v)| *v).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Covariance {
    #[default]
    Classical,
    /// White heteroskedasticity-consistent, with the n/(n-p) correction.
    Hc1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: Option<f64>,
    pub adj_r_squared: Option<f64>,
    pub residual_se: f64,
    pub df_resid: usize,
    pub f_stat: Option<f64>,
    pub f_p_value: Option<f64>,
    pub n: usize,
    pub covariance: Covariance,
}

impl OlsFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == name).map(|i| self.coefficients[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == name).map(|i| self.std_errors[i])
    }
}

fn factor(gram: &Matrix<f64>, columns: &[String]) -> Result<PivotedCholesky<f64>, CausalError> {
    PivotedCholesky::factor(gram).map_err(|e| CausalError::SingularDesign(columns[e.pivot].clone()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn ols_fit(design: &DesignMatrix) -> Result<OlsFit, CausalError> {
    ols_fit_with(design, Covariance::Classical)
}

pub fn ols_fit_with(design: &DesignMatrix, covariance: Covariance) -> Result<OlsFit, CausalError> {
    let (n, p) = (design.n(), design.p());
    if n <= p {
        return Err(CausalError::TooFewObservations(p));
    }
    let x = &design.x;
    let gram = x.weighted_gram(None);
    let chol = factor(&gram, &design.columns)?;
    let xty = x.t_mul_vec(&design.y);
    let mut beta = chol.solve(&xty);
    // one round of iterative refinement on the normal equations
    let g_beta = gram.mul_vec(&beta);
    let r: Vec<f64> = xty.iter().zip(&g_beta).map(|(a, b)| a - b).collect();
    for (b, d) in beta.iter_mut().zip(chol.solve(&r)) {
        *b += d;
    }

    let fitted = x.mul_vec(&beta);
    let resid: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss = dot(&resid, &resid);
    let df_resid = n - p;
    let sigma2 = rss / df_resid as f64;
    let inv = chol.inverse();

    let variances: Vec<f64> = match covariance {
        Covariance::Classical => (0..p).map(|j| sigma2 * inv.get(j, j)).collect(),
        Covariance::Hc1 => {
            let w: Vec<f64> = resid.iter().map(|e| e * e).collect();
            let meat = x.weighted_gram(Some(&w));
            let sandwich = inv.mul(&meat).mul(&inv);
            let scale = n as f64 / df_resid as f64;
            (0..p).map(|j| scale * sandwich.get(j, j)).collect()
        }
    };
    let std_errors: Vec<f64> = variances.iter().map(|v| v.max(0.0).sqrt()).collect();
    let t_values: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values = t_values.iter().map(|&t| t_two_sided_p(t, df_resid as f64)).collect();

    let has_intercept = (0..n).all(|i| x.get(i, 0) == 1.0);
    let (r_squared, adj_r_squared, f_stat, f_p_value) = if has_intercept {
        let mean = design.y.iter().sum::<f64>() / n as f64;
        let tss: f64 = design.y.iter().map(|y| (y - mean) * (y - mean)).sum();
        if tss > 0.0 {
            let r2 = (1.0 - rss / tss).clamp(0.0, 1.0);
            let adj = 1.0 - (1.0 - r2) * (n - 1) as f64 / df_resid as f64;
            let (f, fp) = if p > 1 && rss > 0.0 {
                let df_model = (p - 1) as f64;
                let f = ((tss - rss) / df_model) / sigma2;
                (Some(f), Some(f_upper_tail(f, df_model, df_resid as f64)))
            } else {
                (None, None)
            };
            (Some(r2), Some(adj), f, fp)
        } else {
            (None, None, None, None)
        }
    } else {
        (None, None, None, None)
    };

    Ok(OlsFit {
        columns: design.columns.clone(),
        coefficients: beta,
        std_errors,
        t_values,
        p_values,
        r_squared,
        adj_r_squared,
        residual_se: sigma2.sqrt(),
        df_resid,
        f_stat,
        f_p_value,
        n,
        covariance,
    })
}

/// `P(F > f)` for an F(d1, d2) variate.
fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    crate::stats::inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitOptions {
    pub max_iter: usize,
    /// Bound on the column-scaled mean score at convergence.
    pub tol: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted step, starting from the initial point.
    pub ll_trace: Vec<f64>,
    pub n: usize,
}

impl LogitFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == name).map(|i| self.coefficients[i])
    }

    pub fn aic(&self) -> f64 {
        2.0 * self.coefficients.len() as f64 - 2.0 * self.log_likelihood
    }

    pub fn pseudo_r_squared(&self) -> f64 {
        1.0 - self.log_likelihood / self.null_log_likelihood
    }
}

// log(1 + e^x) without overflow
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood of a logit model at `beta`.
pub fn logit_log_likelihood(x: &Matrix<f64>, y: &[f64], beta: &[f64]) -> f64 {
    let eta = x.mul_vec(beta);
    eta.iter().zip(y).map(|(&e, &yi)| yi * e - softplus(e)).sum()
}

// Linear predictors beyond these bounds mean fitted probabilities of 0 or 1
// at working precision.
const DIVERGED_ETA: f64 = 40.0;
const SEPARATION_ETA: f64 = 15.0;

pub fn logit_fit(design: &DesignMatrix) -> Result<LogitFit, CausalError> {
    logit_fit_with(design, &LogitOptions::default())
}

/// Maximum likelihood by iteratively reweighted least squares with step
/// halving, so the log-likelihood never decreases between iterations by more
/// than rounding.
pub fn logit_fit_with(design: &DesignMatrix, opts: &LogitOptions) -> Result<LogitFit, CausalError> {
    let (n, p) = (design.n(), design.p());
    let x = &design.x;
    let y = &design.y;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(CausalError::NonBinaryOutcome);
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(CausalError::NoVariation);
    }
    if n <= p {
        return Err(CausalError::TooFewObservations(p));
    }
    let scale: Vec<f64> = (0..p)
        .map(|j| (x.column(j).map(|v| v * v).sum::<f64>() / n as f64).sqrt().max(1.0))
        .collect();
    let ybar = ones as f64 / n as f64;
    let null_ll = n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());

    let mut beta = vec![0.0; p];
    let mut ll = logit_log_likelihood(x, y, &beta);
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut grad_norm;
    let mut converged = false;
    loop {
        let eta = x.mul_vec(&beta);
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let grad = x.t_mul_vec(&resid);
        grad_norm = grad
            .iter()
            .zip(&scale)
            .map(|(g, s)| (g / (n as f64 * s)).abs())
            .fold(0.0, f64::max);
        if grad_norm <= opts.tol {
            converged = true;
            break;
        }
        if eta.iter().any(|e| e.abs() > DIVERGED_ETA) || ll > -1e-8 * n as f64 {
            return Err(CausalError::Separation);
        }
        if iterations >= opts.max_iter {
            return Err(CausalError::NonConvergence(iterations));
        }
        let w: Vec<f64> = mu.iter().map(|m| m * (1.0 - m)).collect();
        let info = x.weighted_gram(Some(&w));
        let step = factor(&info, &design.columns)
            .map_err(|_| CausalError::Separation)?
            .solve(&grad);
        // near the optimum the likelihood is flat to a few ulps
        let slack = 16.0 * f64::EPSILON * ll.abs();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let cand_ll = logit_log_likelihood(x, y, &cand);
            if cand_ll >= ll - slack {
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // no ascent direction left at working precision
            break;
        }
        trace.push(ll);
    }
    if !converged && grad_norm > opts.tol.sqrt() {
        return Err(CausalError::NonConvergence(iterations));
    }

    let eta = x.mul_vec(&beta);
    if eta.iter().any(|e| e.abs() > SEPARATION_ETA) {
        return Err(CausalError::Separation);
    }
    let w: Vec<f64> = eta.iter().map(|&e| {
        let m = sigmoid(e);
        m * (1.0 - m)
    }).collect();
    let inv = factor(&x.weighted_gram(Some(&w)), &design.columns)
        .map_err(|_| CausalError::Separation)?
        .inverse();
    let std_errors: Vec<f64> = (0..p).map(|j| inv.get(j, j).max(0.0).sqrt()).collect();
    let z_values: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values = z_values.iter().map(|&z| normal_two_sided_p(z)).collect();

    Ok(LogitFit {
        columns: design.columns.clone(),
        coefficients: beta,
        std_errors,
        z_values,
        p_values,
        log_likelihood: ll,
        null_log_likelihood: null_ll,
        iterations,
        converged,
        gradient_norm: grad_norm,
        ll_trace: trace,
        n,
    })
}

/// Local average treatment effect at the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteReport {
    pub outcome: String,
    pub unit: String,
    /// Level just before the cutoff (the intercept).
    pub pre: f64,
    /// The `merged` coefficient.
    pub effect: f64,
    pub post: f64,
    pub percent_change: f64,
}

impl AteReport {
    pub fn new(outcome: &str, unit: &str, intercept: f64, merged: f64) -> Self {
        Self {
            outcome: outcome.to_string(),
            unit: unit.to_string(),
            pre: intercept,
            effect: merged,
            post: intercept + merged,
            percent_change: 100.0 * merged / intercept,
        }
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

impl fmt::Display for AteReport {
    /// Levels are shown to one decimal; the post level is the displayed
    /// pre level plus the displayed effect.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.effect == 0.0 {
            return write!(f, "{}: no change", self.outcome);
        }
        let unit = if self.unit.is_empty() {
            String::new()
        } else {
            format!(" {}", self.unit)
        };
        write!(
            f,
            "{}: {:.1} → {:.1}{}, {:+.1}%",
            self.outcome,
            round1(self.pre),
            round1(self.pre) + round1(self.effect),
            unit,
            self.percent_change
        )
    }
}

pub fn ate_report(fit: &OlsFit, outcome: Outcome) -> Result<AteReport, CausalError> {
    let intercept = fit.coef("Intercept").ok_or(CausalError::MissingMerged)?;
    let merged = fit.coef("merged").ok_or(CausalError::MissingMerged)?;
    Ok(AteReport::new(outcome.name(), outcome.unit(), intercept, merged))
}

/// Relative reduction in odds implied by a logit coefficient: `1 - e^coef`.
pub fn relative_risk_reduction(coef: f64) -> f64 {
    1.0 - coef.exp()
}

/// Fits all three nested specs for an outcome, choosing OLS or logit by
/// the outcome type.
pub fn fit_nested(panel: &[PanelRow], outcome: Outcome, covariance: Covariance) -> Result<Vec<Fit>, CausalError> {
    ColumnSpec::ALL
        .iter()
        .map(|&spec| {
            let d = build_design(panel, outcome, spec)?;
            if outcome.is_binary() {
                logit_fit(&d).map(Fit::Logit)
            } else {
                ols_fit_with(&d, covariance).map(Fit::Ols)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MERGE_BLOCK;
    use approx::assert_relative_eq;

    fn row(number: u64) -> PanelRow {
        PanelRow {
            number,
            blockn: number as i64 - MERGE_BLOCK as i64,
            merged: number >= MERGE_BLOCK,
            timestamp: 1_000 + number,
            interval: 12.0,
            gas_used: 0,
            gas_limit: 30_000_000,
            base_fee: 1,
            delay_median: None,
            delay_q25: None,
            delay_q75: None,
            delay_iqr: None,
            gps: 0.0,
            gps_ma5: None,
            gps_ma7200: None,
            congested: false,
            continued_congested: false,
            tx_count: 0,
            observed_delay_count: 0,
            unobserved_delay_count: 0,
            sanctioned_count: 0,
        }
    }

    #[test]
    fn design_shapes_and_cutoff() {
        let panel: Vec<_> = (0..10).map(|i| row(MERGE_BLOCK - 5 + i)).collect();
        let d = build_design(&panel, Outcome::Gps, ColumnSpec::One).unwrap();
        assert_eq!((d.n(), d.p()), (10, 2));
        assert_eq!(d.columns, ["Intercept", "merged"]);
        let d = build_design(&panel, Outcome::Gps, ColumnSpec::Three).unwrap();
        assert_eq!(d.x.row(5), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.x.row(4), &[1.0, 0.0, -1.0, -0.0]);
    }

    #[test]
    fn design_drops_undefined_and_sorts() {
        let mut panel: Vec<_> = (0..10).rev().map(|i| row(100 + i)).collect();
        for (k, r) in panel.iter_mut().enumerate() {
            if k % 2 == 0 {
                r.gps_ma5 = Some(r.number as f64);
            }
        }
        let d = build_design(&panel, Outcome::GpsMa5, ColumnSpec::One).unwrap();
        assert_eq!(d.n(), 5);
        assert!(d.y.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(build_design(&panel, Outcome::DelayQ75, ColumnSpec::One), Err(CausalError::EmptyPanel));
        assert_eq!(Outcome::from_name("nope"), Err(CausalError::UnknownOutcome("nope".into())));
        assert_eq!(Outcome::from_name("delay_iqr"), Ok(Outcome::DelayIqr));
    }

    #[test]
    fn constant_outcome_has_zero_slopes() {
        let panel: Vec<_> = (0..20)
            .map(|i| {
                let mut r = row(MERGE_BLOCK - 10 + i);
                r.gps = 10.0;
                r
            })
            .collect();
        for spec in ColumnSpec::ALL {
            let fit = ols_fit(&build_design(&panel, Outcome::Gps, spec).unwrap()).unwrap();
            assert_relative_eq!(fit.coefficients[0], 10.0, max_relative = 1e-12);
            for &c in &fit.coefficients[1..] {
                assert!(c.abs() < 1e-10, "{c}");
            }
            assert!(fit.residual_se < 1e-10);
            assert_eq!(fit.r_squared, None);
        }
    }

    #[test]
    fn tiny_design_matches_hand_solution() {
        // y = 1 + 2 merged exactly, plus a perturbation orthogonal to both columns
        let x = Matrix::from_rows(6, 2, vec![1., 0., 1., 0., 1., 0., 1., 1., 1., 1., 1., 1.]);
        let y = vec![0.5, 1.0, 1.5, 2.5, 3.0, 3.5];
        let fit = ols_fit(&DesignMatrix::new(vec!["Intercept".into(), "merged".into()], x, y)).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(fit.coefficients[1], 2.0, max_relative = 1e-14);
        // rss = 4 * 0.25, df = 4
        assert_relative_eq!(fit.residual_se, 0.5, max_relative = 1e-14);
        assert_relative_eq!(fit.std_errors[0], (0.25f64 / 3.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(fit.std_errors[1], (0.25f64 * 2.0 / 3.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn singular_design_is_reported() {
        let x = Matrix::from_rows(4, 2, vec![1., 1., 1., 1., 1., 1., 1., 1.]);
        let d = DesignMatrix::new(vec!["Intercept".into(), "merged".into()], x, vec![1., 2., 3., 4.]);
        assert!(matches!(ols_fit(&d), Err(CausalError::SingularDesign(_))));
    }

    #[test]
    fn logit_rejects_degenerate_outcomes() {
        let x = Matrix::from_rows(4, 2, vec![1., 0., 1., 0., 1., 1., 1., 1.]);
        let names = vec!["Intercept".to_string(), "merged".to_string()];
        let all = DesignMatrix::new(names.clone(), x.clone(), vec![1.; 4]);
        assert_eq!(logit_fit(&all), Err(CausalError::NoVariation));
        let sep = DesignMatrix::new(names.clone(), x.clone(), vec![0., 0., 1., 1.]);
        assert_eq!(logit_fit(&sep), Err(CausalError::Separation));
        let bad = DesignMatrix::new(names, x, vec![0., 2., 1., 1.]);
        assert_eq!(logit_fit(&bad), Err(CausalError::NonBinaryOutcome));
    }

    #[test]
    fn logit_two_group_closed_form() {
        // MLE of a saturated two-group model is the group log-odds
        let mut data = Vec::new();
        let mut y = Vec::new();
        for (merged, ones, total) in [(0.0, 3, 10), (1.0, 6, 8)] {
            for k in 0..total {
                data.extend([1.0, merged]);
                y.push(if k < ones { 1.0 } else { 0.0 });
            }
        }
        let x = Matrix::from_rows(18, 2, data);
        let fit = logit_fit(&DesignMatrix::new(vec!["Intercept".into(), "merged".into()], x, y)).unwrap();
        let a = (3.0f64 / 7.0).ln();
        let b = (6.0f64 / 2.0).ln() - a;
        assert_relative_eq!(fit.coefficients[0], a, max_relative = 1e-9);
        assert_relative_eq!(fit.coefficients[1], b, max_relative = 1e-9);
        // Var of log-odds = 1/(n p (1-p)) per group
        let v0: f64 = 1.0 / (10.0 * 0.3 * 0.7);
        let v1 = 1.0 / (8.0 * 0.75 * 0.25);
        assert_relative_eq!(fit.std_errors[0], v0.sqrt(), max_relative = 1e-8);
        assert_relative_eq!(fit.std_errors[1], (v0 + v1).sqrt(), max_relative = 1e-8);
        assert!(fit.converged);
        assert!(fit.ll_trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn ate_examples() {
        let r = AteReport::new("delay_q75", "s", 35.039, -13.421);
        let s = r.to_string();
        assert!(s.contains("35.0 → 21.6 s"), "{s}");
        assert!(s.contains("-38.3%"), "{s}");
        assert_eq!(r.percent_change.round(), -38.0);
        let s = AteReport::new("delay_iqr", "s", 54.509, -26.057).to_string();
        assert!(s.contains("54.5 → 28.4 s"), "{s}");
        assert!(s.contains("-47.8%"), "{s}");
        assert_eq!(AteReport::new("gps", "gas/s", 1.0, 0.0).to_string(), "gps: no change");
    }

    #[test]
    fn risk_reduction_examples() {
        assert!((relative_risk_reduction(-0.749) - 0.5272).abs() < 1e-4);
        assert!((relative_risk_reduction(-0.529) - 0.4108).abs() < 1e-4);
        assert_eq!(relative_risk_reduction(0.0), 0.0);
    }
}
