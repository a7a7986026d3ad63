use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use serde_json::json;
use topicpulse::nn::{topic_filter, DEFAULT_TOPIC_THRESHOLD};
use topicpulse::series::{
    build_daily_series, detect_anomalies, fit_decomposition, heatmap_svg, moving_average, DecompositionConfig,
    HolidayCalendar, Side,
};
use topicpulse::tda::{export_graph, mapper as build_mapper, tag_vectors, CoverConfig, GraphFormat, DEFAULT_LENS_DIM};

use crate::commands::{load_model, read_corpus};
use crate::error::{CliError, Result};
use crate::output::{Inputs, Staged};
use crate::{load_config, to_value, Cli, MapperArgs, SeriesArgs, SidesFlag};

#[derive(Debug, Deserialize)]
struct ScoreRow {
    published_at: NaiveDate,
    probability: f64,
}

#[derive(Debug, Deserialize)]
struct HolidayRow {
    name: String,
    date: NaiveDate,
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CliError::data(path, format!("row {}: {e}", i + 1))))
        .collect()
}

/// Shortest round-trip form; switches to exponent notation for tiny values.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn series(cli: &Cli, args: &SeriesArgs) -> Result<Vec<PathBuf>> {
    let mut inputs = Inputs::default();
    let mut cfg: DecompositionConfig = load_config(cli.config.as_deref(), &mut inputs)?;
    if let Some(path) = &args.holidays {
        let rows: Vec<HolidayRow> = read_csv(path, &inputs.read(path)?)?;
        let extra = HolidayCalendar::from_pairs(rows.into_iter().map(|r| (r.name, r.date)));
        for (name, dates) in extra.holidays {
            cfg.holidays.holidays.entry(name).or_default().extend(dates);
        }
    }
    cfg.validate()?;

    let rows: Vec<ScoreRow> = read_csv(&args.scores, &inputs.read(&args.scores)?)?;
    let pairs: Vec<(NaiveDate, f64)> = rows.iter().map(|r| (r.published_at, r.probability)).collect();
    let series = build_daily_series(&pairs).map_err(|e| CliError::data(&args.scores, e))?;
    let fit = fit_decomposition(&series, &cfg)?;
    let sides: &[Side] = match args.sides {
        SidesFlag::High => &[Side::High],
        SidesFlag::Low => &[Side::Low],
        SidesFlag::Both => &[Side::High, Side::Low],
    };
    let report = detect_anomalies(&series, &fit).restricted_to(sides);

    if args.window % 2 == 0 || args.window == 0 {
        return Err(CliError::Usage(format!("--window {} must be odd", args.window)));
    }
    // Short series get the widest odd window that fits.
    let window = args.window.min(series.len() - (1 - series.len() % 2));
    let smoothed = moving_average(&series, window)?;

    let mut staged = Staged::default();
    staged.add(
        "series.csv",
        csv_bytes(
            &["date", "value", "count"],
            series
                .dates()
                .zip(series.values.iter().zip(&series.counts))
                .map(|(d, (v, c))| vec![d.to_string(), num(*v), c.to_string()]),
        ),
    );
    staged.add(
        "smoothed.csv",
        csv_bytes(
            &["date", "value"],
            series.dates().zip(&smoothed).map(|(d, v)| {
                vec![d.to_string(), if v.is_nan() { String::new() } else { num(*v) }]
            }),
        ),
    );
    let mut fj = serde_json::to_string_pretty(&fit).expect("fit serializes");
    fj.push('\n');
    staged.add("fit.json", fj);
    staged.add(
        "anomalies.csv",
        csv_bytes(
            &["date", "observed", "predicted", "lower", "upper", "side"],
            report.anomalies.iter().map(|a| {
                vec![
                    a.date.to_string(),
                    num(a.observed),
                    num(a.predicted),
                    num(a.lower),
                    num(a.upper),
                    a.side.to_string(),
                ]
            }),
        ),
    );
    staged.add(
        "weekly.csv",
        csv_bytes(
            &["weekday", "value"],
            fit.weekly_profile()
                .iter()
                .enumerate()
                .map(|(i, v)| vec![Weekday::try_from(i as u8).expect("0..7").to_string(), num(*v)]),
        ),
    );
    staged.add(
        "yearly.csv",
        csv_bytes(
            &["month", "value"],
            fit.yearly_profile()
                .iter()
                .enumerate()
                .map(|(i, v)| vec![(i + 1).to_string(), num(*v)]),
        ),
    );
    let years = (series.start.year(), series.end().year());
    staged.add("heatmap.svg", heatmap_svg(&series, years)?);

    let config = json!({
        "decomposition": to_value(&cfg),
        "sides": format!("{:?}", args.sides).to_lowercase(),
        "window": window,
    });
    staged.commit(&cli.out_dir, "series", "series", cli.seed, config, inputs)
}

/// Mapper settings from `--config`; flags override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MapperConfig {
    pub threshold: f64,
    pub cover: CoverConfig,
    pub lens_dim: usize,
    pub year: Option<i32>,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_TOPIC_THRESHOLD,
            cover: CoverConfig::default(),
            lens_dim: DEFAULT_LENS_DIM,
            year: None,
        }
    }
}

pub fn mapper(cli: &Cli, args: &MapperArgs) -> Result<Vec<PathBuf>> {
    let mut inputs = Inputs::default();
    let mut cfg: MapperConfig = load_config(cli.config.as_deref(), &mut inputs)?;
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if let Some(n) = args.intervals {
        cfg.cover.intervals_per_dim = n;
    }
    if let Some(o) = args.overlap {
        cfg.cover.overlap_fraction = o;
    }
    if let Some(k) = args.lens_dim {
        cfg.lens_dim = k;
    }
    if args.year.is_some() {
        cfg.year = args.year;
    }
    cfg.cover.validate()?;
    if cfg.lens_dim == 0 {
        return Err(CliError::Usage("lens dimension must be at least 1".into()));
    }

    let corpus = read_corpus(&args.corpus, &mut inputs)?;
    let model_a = load_model(&args.model_a, args.vocab_a.as_deref(), &mut inputs)?;
    let model_b = load_model(&args.model_b, args.vocab_b.as_deref(), &mut inputs)?;
    let corpus = match cfg.year {
        Some(y) => corpus.filter(|d| d.published_at.year() == y),
        None => corpus,
    };
    let kept = topic_filter(&corpus, &model_b, cfg.threshold)?;
    let cloud = tag_vectors(&kept, &model_a, &model_b)?;
    let graph = build_mapper(&cloud, &cfg.cover, cfg.lens_dim)?;

    let mut staged = Staged::default();
    staged.add("mapper.dot", export_graph(&graph, GraphFormat::Dot));
    staged.add("mapper.json", export_graph(&graph, GraphFormat::Json));
    staged.commit(&cli.out_dir, "mapper", "mapper", cli.seed, to_value(&cfg), inputs)
}
