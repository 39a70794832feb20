//! Additive daily time-series model: piecewise-linear trend, weekly Fourier
//! seasonality and holiday effects, fit by ridge least squares.
//!
//! `y(t) = g(t) + s(t) + h(t) + e(t)`

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, PivotedCholesky};
use crate::stats::normal_quantile;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("{n} points cannot support {columns} columns")]
    TooFewPoints { n: usize, columns: usize },
    #[error("dates must be consecutive days (position {0})")]
    NotDaily(usize),
    #[error("design is rank deficient (column `{0}`)")]
    SingularDesign(String),
    #[error("holiday `{name}` lists {date} twice")]
    DuplicateHoliday { name: String, date: NaiveDate },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("bad value on line {line}: {msg}")]
    BadValue { line: u64, msg: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ForecastError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, ForecastError::SingularDesign(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Holiday {
    pub name: String,
    pub date: NaiveDate,
    /// Days on either side of `date` that share the effect.
    #[serde(default)]
    pub window: u32,
}

impl Holiday {
    pub fn new(name: &str, date: NaiveDate) -> Self {
        Self {
            name: name.to_string(),
            date,
            window: 0,
        }
    }

    pub fn covers(&self, d: NaiveDate) -> bool {
        (d - self.date).num_days().unsigned_abs() <= self.window as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HolidaySpec(pub Vec<Holiday>);

impl HolidaySpec {
    pub fn from_json(text: &str) -> Result<Self, ForecastError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        let mut seen = HashSet::new();
        for h in &self.0 {
            if !seen.insert((&h.name, h.date)) {
                return Err(ForecastError::DuplicateHoliday {
                    name: h.name.clone(),
                    date: h.date,
                });
            }
        }
        Ok(())
    }

    /// Distinct names in first-appearance order; one indicator column each.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for h in &self.0 {
            if !out.contains(&h.name) {
                out.push(h.name.clone());
            }
        }
        out
    }

    pub fn active(&self, name: &str, d: NaiveDate) -> bool {
        self.0.iter().any(|h| h.name == name && h.covers(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsConfig {
    /// Weekly Fourier order.
    pub fourier_order: usize,
    pub n_changepoints: usize,
    /// Share of the window, from its start, that may hold changepoints.
    pub changepoint_range: f64,
    /// Ridge penalty on changepoint and Fourier coefficients.
    pub lambda: f64,
}

impl Default for TsConfig {
    fn default() -> Self {
        Self {
            fourier_order: 3,
            n_changepoints: 10,
            changepoint_range: 0.8,
            lambda: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Intercept,
    Slope,
    Hinge(usize),
    Sin(usize),
    Cos(usize),
    Holiday(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub names: Vec<String>,
    pub x: Matrix<f64>,
    pub changepoints: Vec<f64>,
    kinds: Vec<ColumnKind>,
}

fn check_daily(dates: &[NaiveDate]) -> Result<(), ForecastError> {
    match dates.windows(2).position(|w| (w[1] - w[0]).num_days() != 1) {
        Some(i) => Err(ForecastError::NotDaily(i + 1)),
        None => Ok(()),
    }
}

/// Changepoints on a uniform grid over the leading part of the window,
/// excluding its first day.
fn changepoint_grid(n: usize, config: &TsConfig) -> Vec<f64> {
    if config.n_changepoints == 0 || n < 3 {
        return Vec::new();
    }
    let last = (config.changepoint_range * (n - 1) as f64).floor();
    let mut out: Vec<f64> = (1..=config.n_changepoints)
        .map(|j| (j as f64 * last / config.n_changepoints as f64).round())
        .filter(|&c| c > 0.0)
        .collect();
    out.dedup();
    out
}

fn row_values(t: f64, d: NaiveDate, kinds: &[ColumnKind], cps: &[f64], holidays: &HolidaySpec, names: &[String]) -> Vec<f64> {
    kinds
        .iter()
        .map(|k| match *k {
            ColumnKind::Intercept => 1.0,
            ColumnKind::Slope => t,
            ColumnKind::Hinge(j) => (t - cps[j]).max(0.0),
            ColumnKind::Sin(k) => (2.0 * PI * k as f64 * t / 7.0).sin(),
            ColumnKind::Cos(k) => (2.0 * PI * k as f64 * t / 7.0).cos(),
            ColumnKind::Holiday(h) => holidays.active(&names[h], d) as u8 as f64,
        })
        .collect()
}

/// Columns `[1, t, max(0, t - c_j)..., sin/cos(2πkt/7)..., holiday indicators...]`
/// with `t` in days since the first date.
pub fn build_features(dates: &[NaiveDate], holidays: &HolidaySpec, config: &TsConfig) -> Result<Features, ForecastError> {
    check_daily(dates)?;
    holidays.validate()?;
    let n = dates.len();
    let cps = changepoint_grid(n, config);
    let hnames = holidays.names();
    let mut kinds = vec![ColumnKind::Intercept, ColumnKind::Slope];
    kinds.extend((0..cps.len()).map(ColumnKind::Hinge));
    for k in 1..=config.fourier_order {
        kinds.push(ColumnKind::Sin(k));
        kinds.push(ColumnKind::Cos(k));
    }
    kinds.extend((0..hnames.len()).map(ColumnKind::Holiday));
    if n <= kinds.len() {
        return Err(ForecastError::TooFewPoints { n, columns: kinds.len() });
    }
    let names = kinds
        .iter()
        .map(|k| match *k {
            ColumnKind::Intercept => "intercept".to_string(),
            ColumnKind::Slope => "t".to_string(),
            ColumnKind::Hinge(j) => format!("cp_{}", cps[j]),
            ColumnKind::Sin(k) => format!("sin_{k}"),
            ColumnKind::Cos(k) => format!("cos_{k}"),
            ColumnKind::Holiday(h) => format!("holiday:{}", hnames[h]),
        })
        .collect();
    let mut data = Vec::with_capacity(n * kinds.len());
    for (i, &d) in dates.iter().enumerate() {
        data.extend(row_values(i as f64, d, &kinds, &cps, holidays, &hnames));
    }
    Ok(Features {
        names,
        x: Matrix::from_rows(n, kinds.len(), data),
        changepoints: cps,
        kinds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolidayEffect {
    pub name: String,
    pub effect: f64,
    pub std_error: f64,
    /// False when no fit date fell on the holiday; the effect is then 0.
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsModel {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub config: TsConfig,
    pub intercept: f64,
    pub slope: f64,
    pub changepoints: Vec<f64>,
    /// Slope changes at each changepoint.
    pub deltas: Vec<f64>,
    /// `(sin, cos)` coefficients for k = 1..K.
    pub fourier: Vec<(f64, f64)>,
    pub holidays: HolidaySpec,
    pub holiday_effects: Vec<HolidayEffect>,
    pub residual_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub date: NaiveDate,
    pub trend: f64,
    pub weekly: f64,
    pub holiday: f64,
    pub yhat: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TsModel {
    pub fn t_of(&self, d: NaiveDate) -> f64 {
        (d - self.start).num_days() as f64
    }

    pub fn trend_at(&self, t: f64) -> f64 {
        self.intercept
            + self.slope * t
            + self
                .changepoints
                .iter()
                .zip(&self.deltas)
                .map(|(c, d)| d * (t - c).max(0.0))
                .sum::<f64>()
    }

    pub fn weekly_at(&self, t: f64) -> f64 {
        self.fourier
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let w = 2.0 * PI * (i + 1) as f64 * t / 7.0;
                a * w.sin() + b * w.cos()
            })
            .sum()
    }

    pub fn holiday_at(&self, d: NaiveDate) -> f64 {
        self.holiday_effects
            .iter()
            .filter(|h| self.holidays.active(&h.name, d))
            .map(|h| h.effect)
            .sum()
    }

    pub fn effect(&self, name: &str) -> Option<&HolidayEffect> {
        self.holiday_effects.iter().find(|h| h.name == name)
    }

    /// Mean trend slope over the fit window.
    pub fn average_slope(&self) -> f64 {
        let span = self.t_of(self.end);
        if span <= 0.0 {
            return self.slope;
        }
        (self.trend_at(span) - self.trend_at(0.0)) / span
    }
}

pub fn fit_ts(dates: &[NaiveDate], values: &[f64], holidays: &HolidaySpec, config: &TsConfig) -> Result<TsModel, ForecastError> {
    assert_eq!(dates.len(), values.len(), "one value per date");
    let full = build_features(dates, holidays, config)?;
    let n = dates.len();
    // Holidays that never occur in the window are left out and get effect 0.
    let keep: Vec<usize> = (0..full.kinds.len())
        .filter(|&j| match full.kinds[j] {
            ColumnKind::Holiday(_) => full.x.column(j).any(|v| v != 0.0),
            _ => true,
        })
        .collect();
    let p = keep.len();
    if n < p + 2 {
        return Err(ForecastError::TooFewPoints { n, columns: p });
    }
    let mut data = Vec::with_capacity(n * p);
    for i in 0..n {
        data.extend(keep.iter().map(|&j| full.x.get(i, j)));
    }
    let x = Matrix::from_rows(n, p, data);
    let kinds: Vec<ColumnKind> = keep.iter().map(|&j| full.kinds[j]).collect();

    let gram = x.weighted_gram(None);
    let mut penalised = gram.clone();
    for (j, k) in kinds.iter().enumerate() {
        if matches!(k, ColumnKind::Hinge(_) | ColumnKind::Sin(_) | ColumnKind::Cos(_)) {
            penalised.set(j, j, penalised.get(j, j) + config.lambda);
        }
    }
    let chol = PivotedCholesky::factor(&penalised)
        .map_err(|e| ForecastError::SingularDesign(full.names[keep[e.pivot]].clone()))?;
    let beta = chol.solve(&x.t_mul_vec(values));

    let fitted = x.mul_vec(&beta);
    let rss: f64 = values.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum();
    let sigma2 = rss / (n - p) as f64;
    // Cov(beta) = sigma^2 A^-1 X'X A^-1 with A the penalised Gram matrix.
    let a_inv = chol.inverse();
    let cov = a_inv.mul(&gram).mul(&a_inv);

    let hnames = holidays.names();
    let mut effects: Vec<HolidayEffect> = hnames
        .iter()
        .map(|name| HolidayEffect {
            name: name.clone(),
            effect: 0.0,
            std_error: f64::NAN,
            in_window: false,
        })
        .collect();
    let mut deltas = vec![0.0; full.changepoints.len()];
    let mut fourier = vec![(0.0, 0.0); config.fourier_order];
    let (mut intercept, mut slope) = (0.0, 0.0);
    for (j, k) in kinds.iter().enumerate() {
        match *k {
            ColumnKind::Intercept => intercept = beta[j],
            ColumnKind::Slope => slope = beta[j],
            ColumnKind::Hinge(c) => deltas[c] = beta[j],
            ColumnKind::Sin(f) => fourier[f - 1].0 = beta[j],
            ColumnKind::Cos(f) => fourier[f - 1].1 = beta[j],
            ColumnKind::Holiday(h) => {
                effects[h].effect = beta[j];
                effects[h].std_error = (sigma2 * cov.get(j, j)).max(0.0).sqrt();
                effects[h].in_window = true;
            }
        }
    }

    Ok(TsModel {
        start: dates[0],
        end: dates[n - 1],
        config: *config,
        intercept,
        slope,
        changepoints: full.changepoints,
        deltas,
        fourier,
        holidays: holidays.clone(),
        holiday_effects: effects,
        residual_std: sigma2.sqrt(),
    })
}

/// Two-sided 80% band multiplier.
pub fn interval_z() -> f64 {
    normal_quantile(0.9)
}

pub fn predict_components(model: &TsModel, dates: &[NaiveDate]) -> Vec<Components> {
    let z = interval_z();
    dates
        .iter()
        .map(|&date| {
            let t = model.t_of(date);
            let trend = model.trend_at(t);
            let weekly = model.weekly_at(t);
            let holiday = model.holiday_at(date);
            let yhat = trend + weekly + holiday;
            Components {
                date,
                trend,
                weekly,
                holiday,
                yhat,
                lo: yhat - z * model.residual_std,
                hi: yhat + z * model.residual_std,
            }
        })
        .collect()
}

pub fn write_components_csv<W: Write>(rows: &[Components], w: W) -> Result<(), ForecastError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads `date` and one value column from a daily CSV, ordered by date.
pub fn read_daily_series<R: Read>(r: R, column: &str) -> Result<(Vec<NaiveDate>, Vec<f64>), ForecastError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ForecastError::MissingColumn(name.to_string()))
    };
    let (di, vi) = (find("date")?, find(column)?);
    let mut series = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| ForecastError::BadValue { line, msg };
        let date: NaiveDate = rec[di].parse().map_err(|e| bad(format!("date: {e}")))?;
        let v: f64 = rec[vi].parse().map_err(|e| bad(format!("{column}: {e}")))?;
        if series.insert(date, v).is_some() {
            return Err(bad(format!("duplicate date {date}")));
        }
    }
    Ok(series.into_iter().unzip())
}
