use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::daily::DailySeries;
use super::decompose::DecompositionFit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    High,
    Low,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::High => "high",
            Side::Low => "low",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(Side::High),
            "low" => Ok(Side::Low),
            other => Err(Error::Config(format!("unknown side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub date: NaiveDate,
    pub observed: f64,
    pub predicted: f64,
    pub lower: f64,
    pub upper: f64,
    pub side: Side,
}

impl Anomaly {
    /// Distance outside the band in units of band width (0 for a zero-width band).
    pub fn severity(&self) -> f64 {
        let width = self.upper - self.lower;
        let excess = match self.side {
            Side::High => self.observed - self.upper,
            Side::Low => self.lower - self.observed,
        };
        if width > 0.0 {
            excess / width
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnomalyReport {
    pub anomalies: Vec<Anomaly>,
}

impl AnomalyReport {
    pub fn len(&self) -> usize {
        self.anomalies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anomalies.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.anomalies.iter().map(|a| a.date).collect()
    }

    /// Only the anomalies on the given sides.
    pub fn restricted_to(&self, sides: &[Side]) -> AnomalyReport {
        AnomalyReport {
            anomalies: self
                .anomalies
                .iter()
                .filter(|a| sides.contains(&a.side))
                .cloned()
                .collect(),
        }
    }
}

/// Populated days outside the fitted interval, in date order.
///
/// A day only counts when it clears the band by more than a tiny tolerance
/// scaled to the series magnitude, so round-off on a perfectly fitted series
/// never produces flags.
pub fn detect_anomalies(series: &DailySeries, fit: &DecompositionFit) -> AnomalyReport {
    let scale = series
        .populated()
        .map(|i| series.values[i].abs())
        .fold(0.0, f64::max);
    let tol = 1e-9 * scale;
    let populated: Vec<usize> = series.populated().collect();
    let dates: Vec<NaiveDate> = populated.iter().map(|&i| series.date(i)).collect();
    let anomalies = fit
        .predict(&dates)
        .into_iter()
        .zip(&populated)
        .filter_map(|(p, &i)| {
            let observed = series.values[i];
            let side = if observed > p.upper + tol {
                Side::High
            } else if observed < p.lower - tol {
                Side::Low
            } else {
                return None;
            };
            Some(Anomaly {
                date: p.date,
                observed,
                predicted: p.mean,
                lower: p.lower,
                upper: p.upper,
                side,
            })
        })
        .collect();
    AnomalyReport { anomalies }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{fit_decomposition, DecompositionConfig};

    #[test]
    fn zero_noise_has_no_anomalies() {
        let values: Vec<f64> = (0..300)
            .map(|t| 0.3 + 0.0005 * t as f64 + 0.05 * (2.0 * std::f64::consts::PI * t as f64 / 7.0).sin())
            .collect();
        let s = DailySeries::from_values("2019-01-01".parse().unwrap(), values).unwrap();
        let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
        assert!(detect_anomalies(&s, &fit).is_empty());
    }

    #[test]
    fn spike_is_high_with_severity() {
        let mut values = vec![0.2; 120];
        for (i, v) in values.iter_mut().enumerate() {
            *v += if i % 2 == 0 { 0.001 } else { -0.001 };
        }
        values[60] = 0.5;
        let s = DailySeries::from_values("2019-01-01".parse().unwrap(), values).unwrap();
        let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
        let report = detect_anomalies(&s, &fit);
        let hit = report.anomalies.iter().find(|a| a.date == s.date(60)).unwrap();
        assert_eq!(hit.side, Side::High);
        assert!(hit.observed > hit.upper && hit.severity() > 0.0);
        assert!(report.dates().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn side_parsing() {
        assert_eq!("high".parse::<Side>().unwrap(), Side::High);
        assert_eq!(Side::Low.to_string(), "low");
        assert!("up".parse::<Side>().is_err());
    }
}
