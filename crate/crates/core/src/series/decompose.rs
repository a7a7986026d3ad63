//! Additive decomposition `y(t) = trend(t) + seasonal(t) + holiday(t) + error`.
//!
//! The trend is piecewise linear in the hinge basis
//! `m + k·t + Σ_j δ_j·(t − s_j)₊`, seasonality is a weekly (period 7) plus yearly
//! (period 365.25) Fourier series, and each named holiday gets an indicator
//! column. Coefficients come from a ridge-penalised least-squares fit on the
//! populated days.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::daily::DailySeries;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};

pub const WEEKLY_PERIOD: f64 = 7.0;
pub const YEARLY_PERIOD: f64 = 365.25;

/// Named holidays, each with the dates it falls on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HolidayCalendar {
    pub holidays: BTreeMap<String, BTreeSet<NaiveDate>>,
}

impl HolidayCalendar {
    pub fn from_pairs<I: IntoIterator<Item = (String, NaiveDate)>>(pairs: I) -> Self {
        let mut holidays: BTreeMap<String, BTreeSet<NaiveDate>> = BTreeMap::new();
        for (name, date) in pairs {
            holidays.entry(name).or_default().insert(date);
        }
        Self { holidays }
    }

    pub fn len(&self) -> usize {
        self.holidays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holidays.is_empty()
    }
}

fn d_n_changepoints() -> usize {
    25
}
fn d_changepoint_range() -> f64 {
    0.8
}
fn d_weekly() -> usize {
    3
}
fn d_yearly() -> usize {
    10
}
fn d_lambda_trend() -> f64 {
    0.5
}
fn d_lambda_small() -> f64 {
    0.1
}
fn d_level() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    #[serde(default = "d_n_changepoints")]
    pub n_changepoints: usize,
    /// Fraction of the populated history over which changepoints are placed.
    #[serde(default = "d_changepoint_range")]
    pub changepoint_range: f64,
    #[serde(default = "d_weekly")]
    pub weekly_order: usize,
    #[serde(default = "d_yearly")]
    pub yearly_order: usize,
    #[serde(default)]
    pub holidays: HolidayCalendar,
    #[serde(default = "d_lambda_trend")]
    pub lambda_trend: f64,
    #[serde(default = "d_lambda_small")]
    pub lambda_seasonal: f64,
    #[serde(default = "d_lambda_small")]
    pub lambda_holiday: f64,
    #[serde(default = "d_level")]
    pub interval_level: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            n_changepoints: d_n_changepoints(),
            changepoint_range: d_changepoint_range(),
            weekly_order: d_weekly(),
            yearly_order: d_yearly(),
            holidays: HolidayCalendar::default(),
            lambda_trend: d_lambda_trend(),
            lambda_seasonal: d_lambda_small(),
            lambda_holiday: d_lambda_small(),
            interval_level: d_level(),
        }
    }
}

impl DecompositionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.weekly_order == 0 || self.yearly_order == 0 {
            return bad("Fourier orders must be at least 1".into());
        }
        if !(self.changepoint_range > 0.0 && self.changepoint_range <= 1.0) {
            return bad(format!("changepoint_range {} outside (0, 1]", self.changepoint_range));
        }
        for (name, l) in [
            ("lambda_trend", self.lambda_trend),
            ("lambda_seasonal", self.lambda_seasonal),
            ("lambda_holiday", self.lambda_holiday),
        ] {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("{name} {l} must be finite and >= 0"));
            }
        }
        if !(self.interval_level > 0.0 && self.interval_level < 1.0) {
            return bad(format!("interval_level {} outside (0, 1)", self.interval_level));
        }
        Ok(())
    }

    pub fn n_columns(&self) -> usize {
        2 + self.n_changepoints + 2 * (self.weekly_order + self.yearly_order) + self.holidays.len()
    }
}

/// `[sin(2π·1·t/P), cos(2π·1·t/P), …, sin(2π·N·t/P), cos(2π·N·t/P)]`.
pub fn fourier_features(t: f64, period: f64, order: usize) -> Vec<f64> {
    assert!(period > 0.0, "period must be positive");
    let mut out = Vec::with_capacity(2 * order);
    for n in 1..=order {
        let x = 2.0 * PI * n as f64 * t / period;
        out.push(x.sin());
        out.push(x.cos());
    }
    out
}

/// Two-sided standard-normal quantile: the `z` with `P(|Z| ≤ z) = level`.
pub fn normal_quantile(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Column layout shared by the design matrix and prediction.
#[derive(Debug, Clone)]
struct Layout<'a> {
    changepoints: &'a [f64],
    weekly_order: usize,
    yearly_order: usize,
    holidays: &'a HolidayCalendar,
}

impl Layout<'_> {
    fn row(&self, t: f64, date: NaiveDate) -> Vec<f64> {
        let mut row = Vec::with_capacity(2 + self.changepoints.len());
        row.push(1.0);
        row.push(t);
        row.extend(self.changepoints.iter().map(|s| (t - s).max(0.0)));
        row.extend(fourier_features(t, WEEKLY_PERIOD, self.weekly_order));
        row.extend(fourier_features(t, YEARLY_PERIOD, self.yearly_order));
        row.extend(
            self.holidays
                .holidays
                .values()
                .map(|dates| if dates.contains(&date) { 1.0 } else { 0.0 }),
        );
        row
    }
}

/// Design matrix over every calendar day of the series (populated or not).
#[derive(Debug, Clone)]
pub struct Design {
    pub matrix: Matrix,
    /// Changepoint locations as day indices.
    pub changepoints: Vec<f64>,
}

/// Changepoints spread uniformly over the first `changepoint_range` of the
/// populated days (same placement rule as the reference decomposition tool).
fn place_changepoints(populated: &[usize], cfg: &DecompositionConfig) -> Vec<f64> {
    if cfg.n_changepoints == 0 || populated.is_empty() {
        return vec![0.0; cfg.n_changepoints];
    }
    let hist = ((populated.len() as f64 * cfg.changepoint_range).floor() as usize).max(1);
    (1..=cfg.n_changepoints)
        .map(|j| {
            let pos = (j as f64 * (hist - 1) as f64 / cfg.n_changepoints as f64).round() as usize;
            populated[pos] as f64
        })
        .collect()
}

pub fn design_matrix(series: &DailySeries, cfg: &DecompositionConfig) -> Result<Design> {
    cfg.validate()?;
    let populated: Vec<usize> = series.populated().collect();
    if populated.is_empty() {
        return Err(Error::Input("series has no populated days".into()));
    }
    let changepoints = place_changepoints(&populated, cfg);
    let layout = Layout {
        changepoints: &changepoints,
        weekly_order: cfg.weekly_order,
        yearly_order: cfg.yearly_order,
        holidays: &cfg.holidays,
    };
    let cols = cfg.n_columns();
    let mut data = Vec::with_capacity(series.len() * cols);
    for (i, date) in series.dates().enumerate() {
        data.extend(layout.row(i as f64, date));
    }
    Ok(Design {
        matrix: Matrix::from_vec(series.len(), cols, data)?,
        changepoints,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolidayEffect {
    pub name: String,
    pub coefficient: f64,
    pub dates: BTreeSet<NaiveDate>,
}

/// Fitted coefficients. `t` is the day index from `start_date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFit {
    pub start_date: NaiveDate,
    /// Base slope per day.
    pub k: f64,
    /// Offset at `t = 0`.
    pub m: f64,
    pub changepoints: Vec<f64>,
    /// Slope change at each changepoint, per day.
    pub delta: Vec<f64>,
    pub weekly_order: usize,
    pub beta_weekly: Vec<f64>,
    pub yearly_order: usize,
    pub beta_yearly: Vec<f64>,
    pub holidays: Vec<HolidayEffect>,
    /// Standard deviation of in-sample residuals.
    pub sigma: f64,
    pub interval_level: f64,
    pub n_observations: usize,
}

/// Additive parts of one fitted value; `mean()` sums them in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    pub trend: f64,
    pub weekly: f64,
    pub yearly: f64,
    pub holiday: f64,
}

impl Components {
    pub fn seasonal(&self) -> f64 {
        self.weekly + self.yearly
    }

    pub fn mean(&self) -> f64 {
        self.trend + self.seasonal() + self.holiday
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub date: NaiveDate,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Ridge least squares on populated days via the normal equations
/// `(XᵀX + Λ)β = Xᵀy`. Intercept and base slope are unpenalised; changepoint
/// slopes take `λ_trend` in history-scaled units, Fourier and holiday
/// coefficients `λ_seasonal` and `λ_holiday`.
pub fn fit_decomposition(series: &DailySeries, cfg: &DecompositionConfig) -> Result<DecompositionFit> {
    let design = design_matrix(series, cfg)?;
    let populated: Vec<usize> = series.populated().collect();
    let cols = cfg.n_columns();
    if 2 * populated.len() < cols {
        log::warn!(
            "{} populated days for {cols} coefficients; the fit leans on the ridge penalty",
            populated.len()
        );
    }

    let mut x = Matrix::zeros(populated.len(), cols);
    let mut y = Vec::with_capacity(populated.len());
    for (r, &i) in populated.iter().enumerate() {
        x.row_mut(r).copy_from_slice(design.matrix.row(i));
        y.push(series.values[i]);
    }

    let t_scale = (populated[populated.len() - 1] - populated[0]).max(1) as f64;
    let n_cp = cfg.n_changepoints;
    let n_seasonal = 2 * (cfg.weekly_order + cfg.yearly_order);
    let mut gram = x.gram();
    for c in 0..cols {
        let penalty = if c < 2 {
            0.0
        } else if c < 2 + n_cp {
            cfg.lambda_trend * t_scale * t_scale
        } else if c < 2 + n_cp + n_seasonal {
            cfg.lambda_seasonal
        } else {
            cfg.lambda_holiday
        };
        gram[(c, c)] += penalty;
    }
    let beta = solve_spd(&gram, &x.tr_mul_vec(&y))?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numeric("non-finite coefficients".into()));
    }

    let mut at = 0;
    let mut take = |n: usize| {
        let block = beta[at..at + n].to_vec();
        at += n;
        block
    };
    let head = take(2);
    let delta = take(n_cp);
    let beta_weekly = take(2 * cfg.weekly_order);
    let beta_yearly = take(2 * cfg.yearly_order);
    let kappa = take(cfg.holidays.len());
    let holidays = cfg
        .holidays
        .holidays
        .iter()
        .zip(kappa)
        .map(|((name, dates), coefficient)| HolidayEffect {
            name: name.clone(),
            coefficient,
            dates: dates.clone(),
        })
        .collect();

    let mut fit = DecompositionFit {
        start_date: series.start,
        k: head[1],
        m: head[0],
        changepoints: design.changepoints,
        delta,
        weekly_order: cfg.weekly_order,
        beta_weekly,
        yearly_order: cfg.yearly_order,
        beta_yearly,
        holidays,
        sigma: 0.0,
        interval_level: cfg.interval_level,
        n_observations: populated.len(),
    };
    let residuals: Vec<f64> = populated
        .iter()
        .map(|&i| series.values[i] - fit.components(series.date(i)).mean())
        .collect();
    let n = residuals.len() as f64;
    let mean_r = residuals.iter().sum::<f64>() / n;
    fit.sigma = (residuals.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / n).sqrt();
    Ok(fit)
}

impl DecompositionFit {
    pub fn t_of(&self, date: NaiveDate) -> f64 {
        (date - self.start_date).num_days() as f64
    }

    pub fn trend_at(&self, t: f64) -> f64 {
        self.m
            + self.k * t
            + self
                .changepoints
                .iter()
                .zip(&self.delta)
                .map(|(s, d)| d * (t - s).max(0.0))
                .sum::<f64>()
    }

    pub fn weekly_at(&self, t: f64) -> f64 {
        crate::linalg::dot(&fourier_features(t, WEEKLY_PERIOD, self.weekly_order), &self.beta_weekly)
    }

    pub fn yearly_at(&self, t: f64) -> f64 {
        crate::linalg::dot(&fourier_features(t, YEARLY_PERIOD, self.yearly_order), &self.beta_yearly)
    }

    pub fn holiday_at(&self, date: NaiveDate) -> f64 {
        self.holidays
            .iter()
            .filter(|h| h.dates.contains(&date))
            .map(|h| h.coefficient)
            .sum()
    }

    pub fn components(&self, date: NaiveDate) -> Components {
        let t = self.t_of(date);
        Components {
            trend: self.trend_at(t),
            weekly: self.weekly_at(t),
            yearly: self.yearly_at(t),
            holiday: self.holiday_at(date),
        }
    }

    pub fn z(&self) -> f64 {
        normal_quantile(self.interval_level)
    }

    /// Same fit with a different interval level.
    pub fn with_level(&self, level: f64) -> Result<DecompositionFit> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!("interval level {level} outside (0, 1)")));
        }
        Ok(DecompositionFit {
            interval_level: level,
            ..self.clone()
        })
    }

    /// Ordered coefficient vector matching the design-matrix columns.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = vec![self.m, self.k];
        c.extend(&self.delta);
        c.extend(&self.beta_weekly);
        c.extend(&self.beta_yearly);
        c.extend(self.holidays.iter().map(|h| h.coefficient));
        c
    }

    pub fn predict(&self, dates: &[NaiveDate]) -> Vec<Prediction> {
        let half = self.z() * self.sigma;
        dates
            .iter()
            .map(|&date| {
                let mean = self.components(date).mean();
                Prediction {
                    date,
                    mean,
                    lower: mean - half,
                    upper: mean + half,
                }
            })
            .collect()
    }

    /// Weekly component for Monday through Sunday.
    pub fn weekly_profile(&self) -> [f64; 7] {
        let start_wd = self.start_date.weekday().num_days_from_monday() as i64;
        let mut out = [0.0; 7];
        for (wd, slot) in out.iter_mut().enumerate() {
            let t = (wd as i64 - start_wd).rem_euclid(7) as f64;
            *slot = self.weekly_at(t);
        }
        out
    }

    /// Mean yearly component per calendar month (January first).
    ///
    /// One full period is sampled at 365 evenly spaced phases starting on
    /// 1 January of the start year; sample `d` belongs to the month containing
    /// day-of-year `d` in a non-leap year.
    pub fn yearly_profile(&self) -> [f64; 12] {
        let (sums, counts) = self.yearly_samples();
        let mut out = [0.0; 12];
        for m in 0..12 {
            out[m] = sums[m] / counts[m] as f64;
        }
        out
    }

    /// Days per month used by [`Self::yearly_profile`] (non-leap calendar).
    pub fn yearly_profile_weights() -> [usize; 12] {
        [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]
    }

    fn yearly_samples(&self) -> ([f64; 12], [usize; 12]) {
        let jan1 = NaiveDate::from_ymd_opt(self.start_date.year(), 1, 1).expect("valid year");
        let t0 = self.t_of(jan1);
        let ref_year = NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid date");
        let mut sums = [0.0; 12];
        let mut counts = [0usize; 12];
        for d in 0..365 {
            let month = (ref_year + Duration::days(d)).month0() as usize;
            let t = t0 + d as f64 * YEARLY_PERIOD / 365.0;
            sums[month] += self.yearly_at(t);
            counts[month] += 1;
        }
        (sums, counts)
    }
}
