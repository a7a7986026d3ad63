use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};
use topicpulse::corpus::{synthesize_corpus, GeneratorConfig};
use topicpulse::linalg::dot;
use topicpulse::series::{
    build_daily_series_from_documents, design_matrix, detect_anomalies, fit_decomposition, DailySeries,
    DecompositionConfig, DecompositionFit, HolidayCalendar, Side,
};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Trend with one slope change plus a weekly sinusoid and Gaussian noise.
struct Synthetic {
    start: NaiveDate,
    values: Vec<f64>,
    weekly_truth: [f64; 7],
    slopes: (f64, f64),
    changepoint: usize,
}

fn synthetic(days: usize, noise: f64, seed: u64) -> Synthetic {
    let start = d("2017-01-01");
    let (k1, k2, tc) = (0.0004, -0.0003, days * 11 / 20);
    let amp = 0.05;
    let weekly = |t: usize| amp * (2.0 * PI * t as f64 / 7.0).sin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..days)
        .map(|t| {
            let trend = if t <= tc {
                0.3 + k1 * t as f64
            } else {
                0.3 + k1 * tc as f64 + k2 * (t - tc) as f64
            };
            trend + weekly(t) + noise * gaussian(&mut rng)
        })
        .collect();
    let start_wd = start.weekday().num_days_from_monday() as i64;
    let mut weekly_truth = [0.0; 7];
    for (wd, slot) in weekly_truth.iter_mut().enumerate() {
        *slot = weekly((wd as i64 - start_wd).rem_euclid(7) as usize);
    }
    Synthetic {
        start,
        values,
        weekly_truth,
        slopes: (k1, k2),
        changepoint: tc,
    }
}

fn secant(fit: &DecompositionFit, a: usize, b: usize) -> f64 {
    (fit.trend_at(b as f64) - fit.trend_at(a as f64)) / (b - a) as f64
}

#[test]
fn recovers_weekly_profile_and_slopes() {
    let syn = synthetic(1096, 0.01, 7);
    let s = DailySeries::from_values(syn.start, syn.values.clone()).unwrap();
    let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
    let r = pearson(&fit.weekly_profile(), &syn.weekly_truth);
    assert!(r > 0.95, "weekly correlation {r}");
    let before = secant(&fit, 0, syn.changepoint);
    let after = secant(&fit, syn.changepoint, s.len() - 1);
    assert!((before / syn.slopes.0 - 1.0).abs() < 0.2, "before {before}");
    assert!((after / syn.slopes.1 - 1.0).abs() < 0.2, "after {after}");
}

#[test]
fn pure_weekly_sinusoid() {
    let start = d("2019-03-06");
    let values: Vec<f64> = (0..365).map(|t| 0.4 + 0.1 * (2.0 * PI * t as f64 / 7.0).cos()).collect();
    let s = DailySeries::from_values(start, values).unwrap();
    let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
    let truth: Vec<f64> = (0..7)
        .map(|wd| {
            let t = (wd - start.weekday().num_days_from_monday() as i64).rem_euclid(7);
            0.1 * (2.0 * PI * t as f64 / 7.0).cos()
        })
        .collect();
    assert!(pearson(&fit.weekly_profile(), &truth) > 0.99);
    let slope = secant(&fit, 0, 364);
    assert!(slope.abs() < 1e-5, "trend slope {slope}");
}

#[test]
fn profiles_sum_to_zero() {
    let syn = synthetic(800, 0.02, 3);
    let s = DailySeries::from_values(syn.start, syn.values).unwrap();
    let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
    assert!(fit.weekly_profile().iter().sum::<f64>().abs() < 1e-9);
    let weights = DecompositionFit::yearly_profile_weights();
    let weighted: f64 = fit.yearly_profile().iter().zip(weights).map(|(m, w)| m * w as f64).sum();
    assert!(weighted.abs() < 1e-9, "weighted yearly sum {weighted}");
}

#[test]
fn prediction_is_design_row_times_coefficients() {
    let syn = synthetic(500, 0.01, 1);
    let mut cfg = DecompositionConfig::default();
    cfg.holidays = HolidayCalendar::from_pairs([("fiesta".to_string(), d("2017-05-01")), ("fiesta".to_string(), d("2018-05-01"))]);
    let s = DailySeries::from_values(syn.start, syn.values).unwrap();
    let fit = fit_decomposition(&s, &cfg).unwrap();
    let design = design_matrix(&s, &cfg).unwrap();
    let beta = fit.coefficients();
    let dates: Vec<NaiveDate> = s.dates().collect();
    for (i, p) in fit.predict(&dates).iter().enumerate() {
        let c = fit.components(p.date);
        assert_eq!(p.mean, c.trend + c.seasonal() + c.holiday);
        assert!((dot(design.matrix.row(i), &beta) - p.mean).abs() < 1e-12);
    }
}

#[test]
fn holiday_effect_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = d("2017-01-01");
    let holidays: Vec<NaiveDate> = (0..3).map(|y| NaiveDate::from_ymd_opt(2017 + y, 12, 25).unwrap()).collect();
    let values: Vec<f64> = (0..1000)
        .map(|t| {
            let date = start + Duration::days(t);
            0.3 + if holidays.contains(&date) { 0.2 } else { 0.0 } + 0.005 * gaussian(&mut rng)
        })
        .collect();
    let cfg = DecompositionConfig {
        holidays: HolidayCalendar::from_pairs(holidays.iter().map(|h| ("navidad".to_string(), *h))),
        ..Default::default()
    };
    let fit = fit_decomposition(&DailySeries::from_values(start, values).unwrap(), &cfg).unwrap();
    assert!((fit.holidays[0].coefficient - 0.2).abs() < 0.03, "{}", fit.holidays[0].coefficient);
}

#[test]
fn injected_spikes_are_high_anomalies() {
    let syn = synthetic(1096, 0.01, 21);
    let mut values = syn.values.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut spikes: Vec<usize> = Vec::new();
    while spikes.len() < 10 {
        let t = rng.gen_range(30..1066);
        if spikes.iter().all(|s| s.abs_diff(t) > 7) {
            spikes.push(t);
        }
    }
    for &t in &spikes {
        values[t] += 6.0 * 0.01;
    }
    let s = DailySeries::from_values(syn.start, values).unwrap();
    let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
    let report = detect_anomalies(&s, &fit);
    let hits = spikes
        .iter()
        .filter(|&&t| report.anomalies.iter().any(|a| a.date == s.date(t) && a.side == Side::High))
        .count();
    assert!(hits >= 9, "{hits} of 10 spikes found");
}

#[test]
fn null_false_flag_rate_is_calibrated() {
    let binom = Binomial::new(0.01, 1000).unwrap();
    let (lo, hi) = (binom.inverse_cdf(0.005), binom.inverse_cdf(0.995));
    let mut rates = Vec::new();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let values: Vec<f64> = (0..1000).map(|_| 0.2 + 0.01 * gaussian(&mut rng)).collect();
        let s = DailySeries::from_values(d("2015-06-01"), values).unwrap();
        let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
        let flagged = detect_anomalies(&s, &fit).len() as u64;
        assert!(flagged >= lo && flagged <= hi, "seed {seed}: {flagged} outside [{lo}, {hi}]");
        rates.push(flagged);
    }
}

#[test]
fn weekend_boost_tops_weekly_profile() {
    let lexicons: BTreeMap<String, Vec<String>> = [
        ("suicidio", vec!["suicidio", "suicida", "quitarse"]),
        ("deportes", vec!["futbol", "gol", "liga"]),
        ("politica", vec!["congreso", "ley", "voto"]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
    .collect();
    let mut cfg = GeneratorConfig::new(d("2017-01-01"), d("2018-12-31"), 30, lexicons, "suicidio", 0.2);
    cfg.weekend_boost = 1.6;
    let (corpus, _) = synthesize_corpus(&cfg, 4).unwrap();
    let truth: Vec<f64> = corpus
        .documents()
        .iter()
        .map(|doc| if doc.has_tag("suicidio") { 1.0 } else { 0.0 })
        .collect();
    let s = build_daily_series_from_documents(corpus.documents(), &truth).unwrap();
    let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
    let profile = fit.weekly_profile();
    let mut order: Vec<usize> = (0..7).collect();
    order.sort_by(|a, b| profile[*b].total_cmp(&profile[*a]));
    let top: Vec<Weekday> = order[..2].iter().map(|&i| Weekday::try_from(i as u8).unwrap()).collect();
    assert!(top.contains(&Weekday::Sat) && top.contains(&Weekday::Sun), "{profile:?}");
}

#[test]
fn empty_days_are_skipped() {
    let syn = synthetic(400, 0.01, 5);
    let mut counts = vec![1; 400];
    let mut values = syn.values.clone();
    for t in (0..400).step_by(5) {
        counts[t] = 0;
        values[t] = 0.0;
    }
    let s = DailySeries::new(syn.start, values, counts).unwrap();
    let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
    assert_eq!(fit.n_observations, 320);
    assert!(detect_anomalies(&s, &fit).anomalies.iter().all(|a| a.observed != 0.0));
}

#[test]
fn fit_json_round_trip() {
    let syn = synthetic(300, 0.01, 8);
    let fit = fit_decomposition(&DailySeries::from_values(syn.start, syn.values).unwrap(), &DecompositionConfig::default()).unwrap();
    let json = serde_json::to_string(&fit).unwrap();
    let back: DecompositionFit = serde_json::from_str(&json).unwrap();
    assert_eq!(back, fit);
    for key in ["\"k\"", "\"m\"", "\"delta\"", "\"beta_weekly\"", "\"beta_yearly\"", "\"holidays\"", "\"sigma\""] {
        assert!(json.contains(key), "{key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ridge_shrinks_changepoint_slopes(seed in 0u64..1000, l1 in 0.01f64..1.0, factor in 1.5f64..20.0) {
        let syn = synthetic(250, 0.02, seed);
        let s = DailySeries::from_values(syn.start, syn.values).unwrap();
        let norm = |lambda: f64| {
            let cfg = DecompositionConfig { lambda_trend: lambda, yearly_order: 2, ..Default::default() };
            let fit = fit_decomposition(&s, &cfg).unwrap();
            fit.delta.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        let (a, b) = (norm(l1), norm(l1 * factor));
        prop_assert!(b <= a * (1.0 + 1e-9) + 1e-15, "{} then {}", a, b);
    }

    #[test]
    fn anomaly_set_shrinks_with_level(seed in 0u64..1000) {
        let syn = synthetic(300, 0.02, seed);
        let s = DailySeries::from_values(syn.start, syn.values).unwrap();
        let fit = fit_decomposition(&s, &DecompositionConfig::default()).unwrap();
        let mut prev: Option<Vec<NaiveDate>> = None;
        for level in [0.8, 0.9, 0.95, 0.99, 0.999] {
            let dates = detect_anomalies(&s, &fit.with_level(level).unwrap()).dates();
            if let Some(p) = &prev {
                prop_assert!(dates.iter().all(|x| p.contains(x)));
            }
            prev = Some(dates);
        }
    }

    #[test]
    fn scaling_scales_fit_not_anomalies(seed in 0u64..1000, c in 0.2f64..5.0) {
        let syn = synthetic(300, 0.02, seed);
        let s = DailySeries::from_values(syn.start, syn.values).unwrap();
        let cfg = DecompositionConfig { interval_level: 0.9, ..Default::default() };
        let base = fit_decomposition(&s, &cfg).unwrap();
        let scaled = fit_decomposition(&s.scaled(c), &cfg).unwrap();
        prop_assert!((scaled.sigma - c * base.sigma).abs() <= 1e-9 * c * base.sigma.max(1e-12));
        let dates: Vec<NaiveDate> = s.dates().collect();
        for (p, q) in base.predict(&dates).iter().zip(scaled.predict(&dates)) {
            prop_assert!((q.mean - c * p.mean).abs() < 1e-9 * c);
        }
        // Anomaly sets agree away from the band edge (round-off can move a
        // point sitting exactly on it).
        let a = detect_anomalies(&s, &base);
        let b = detect_anomalies(&s.scaled(c), &scaled);
        let margin = |x: &topicpulse::series::Anomaly| x.severity().abs() > 1e-6;
        let da: Vec<_> = a.anomalies.iter().filter(|x| margin(x)).map(|x| x.date).collect();
        let db: Vec<_> = b.anomalies.iter().filter(|x| margin(x)).map(|x| x.date).collect();
        prop_assert_eq!(da, db);
    }
}
