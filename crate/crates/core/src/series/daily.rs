use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Mean topic probability per calendar day, with the number of documents
/// behind each mean. Days without documents carry value 0 and count 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if values.len() != counts.len() {
            return Err(Error::Shape(format!("{} values but {} counts", values.len(), counts.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value on day {i}")));
        }
        Ok(Self { start, values, counts })
    }

    /// Every day populated with one observation.
    pub fn from_values(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let counts = vec![1; values.len()];
        Self::new(start, values, counts)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start + Duration::days(index as i64)
    }

    pub fn end(&self) -> NaiveDate {
        self.date(self.len().saturating_sub(1))
    }

    /// Day index of `date`, which may fall outside the series.
    pub fn index_of(&self, date: NaiveDate) -> i64 {
        (date - self.start).num_days()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len()).map(|i| self.date(i))
    }

    pub fn populated(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, c)| **c > 0).map(|(i, _)| i)
    }

    pub fn n_populated(&self) -> usize {
        self.populated().count()
    }

    /// Multiplies every value by `c` (counts unchanged).
    pub fn scaled(&self, c: f64) -> DailySeries {
        DailySeries {
            start: self.start,
            values: self.values.iter().map(|v| v * c).collect(),
            counts: self.counts.clone(),
        }
    }
}

/// Per-day arithmetic mean of document probabilities over the contiguous
/// calendar span of the input.
pub fn build_daily_series(scored: &[(NaiveDate, f64)]) -> Result<DailySeries> {
    let (Some(start), Some(end)) = (
        scored.iter().map(|(d, _)| *d).min(),
        scored.iter().map(|(d, _)| *d).max(),
    ) else {
        return Err(Error::Input("cannot build a series from no documents".into()));
    };
    if let Some((d, p)) = scored.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
        return Err(Error::Input(format!("probability {p} on {d} outside [0, 1]")));
    }
    let n = (end - start).num_days() as usize + 1;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for (d, p) in scored {
        let i = (*d - start).num_days() as usize;
        sums[i] += p;
        counts[i] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    DailySeries::new(start, values, counts)
}

pub fn build_daily_series_from_documents(docs: &[Document], probs: &[f64]) -> Result<DailySeries> {
    if docs.len() != probs.len() {
        return Err(Error::Shape(format!("{} documents but {} probabilities", docs.len(), probs.len())));
    }
    let pairs: Vec<(NaiveDate, f64)> = docs.iter().map(|d| d.published_at).zip(probs.iter().copied()).collect();
    build_daily_series(&pairs)
}

/// Centered moving average over populated days; windows are truncated at the
/// edges. A window with no populated day yields NaN.
pub fn moving_average(series: &DailySeries, window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 || window > series.len() {
        return Err(Error::Config(format!(
            "window {window} must be odd and between 1 and the series length {}",
            series.len()
        )));
    }
    let half = window / 2;
    let n = series.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let (sum, k) = (lo..=hi)
                .filter(|&j| series.counts[j] > 0)
                .fold((0.0, 0usize), |(s, k), j| (s + series.values[j], k + 1));
            if k == 0 {
                f64::NAN
            } else {
                sum / k as f64
            }
        })
        .collect())
}
