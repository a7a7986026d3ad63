use std::fmt::Write;

use chrono::{Datelike, Duration, NaiveDate};

use super::daily::DailySeries;
use crate::error::{Error, Result};

pub const RAMP_LOW: (u8, u8, u8) = (0xff, 0xff, 0xcc);
pub const RAMP_HIGH: (u8, u8, u8) = (0xbd, 0x00, 0x26);
pub const EMPTY_COLOR: &str = "#ebedf0";

const CELL: i64 = 12;
const GAP: i64 = 2;
const LEFT: i64 = 40;
const TOP: i64 = 20;
const YEAR_GAP: i64 = 30;

pub fn hex_color((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Linear RGB interpolation between two colours, `t` clamped to [0, 1].
pub fn lerp_color(from: (u8, u8, u8), to: (u8, u8, u8), t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    (mix(from.0, to.0), mix(from.1, to.1), mix(from.2, to.2))
}

/// Calendar heatmap of the years `first..=last`: one block per year, columns
/// are weeks, rows are weekdays (Monday on top). Every calendar day in the
/// range gets one `rect` with class `day`; days without documents (or outside
/// the series) are drawn in a neutral grey.
pub fn heatmap_svg(series: &DailySeries, years: (i32, i32)) -> Result<String> {
    let (first, last) = years;
    if first > last {
        return Err(Error::Config(format!("year range {first}..{last} is empty")));
    }
    let lo = NaiveDate::from_ymd_opt(first, 1, 1).ok_or_else(|| Error::Config(format!("bad year {first}")))?;
    let hi = NaiveDate::from_ymd_opt(last, 12, 31).ok_or_else(|| Error::Config(format!("bad year {last}")))?;

    let in_range: Vec<(NaiveDate, f64)> = series
        .populated()
        .map(|i| (series.date(i), series.values[i]))
        .filter(|(d, _)| *d >= lo && *d <= hi)
        .collect();
    if in_range.is_empty() {
        return Err(Error::Input(format!(
            "series {}..{} has no populated day in {first}..{last}",
            series.start,
            series.end()
        )));
    }
    let vmin = in_range.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let vmax = in_range.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let color_of = |v: f64| {
        let t = if vmax > vmin { (v - vmin) / (vmax - vmin) } else { 1.0 };
        hex_color(lerp_color(RAMP_LOW, RAMP_HIGH, t))
    };

    let n_years = (last - first + 1) as i64;
    let block_h = 7 * (CELL + GAP) + YEAR_GAP;
    let width = LEFT + 54 * (CELL + GAP) + 10;
    let height = TOP + n_years * block_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<desc>daily topic probability, min {vmin:.6} max {vmax:.6}</desc>"#
    );
    for (yi, year) in (first..=last).enumerate() {
        let y0 = TOP + yi as i64 * block_h;
        let _ = writeln!(
            svg,
            r#"<text x="0" y="{}" font-family="sans-serif" font-size="11">{year}</text>"#,
            y0 + CELL
        );
        let jan1 = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        let offset = jan1.weekday().num_days_from_monday() as i64;
        let mut day = jan1;
        while day.year() == year {
            let ordinal = day.ordinal0() as i64;
            let week = (ordinal + offset) / 7;
            let wd = day.weekday().num_days_from_monday() as i64;
            let x = LEFT + week * (CELL + GAP);
            let y = y0 + wd * (CELL + GAP);
            let i = series.index_of(day);
            let populated = i >= 0 && (i as usize) < series.len() && series.counts[i as usize] > 0;
            if populated {
                let v = series.values[i as usize];
                let _ = writeln!(
                    svg,
                    r#"<rect class="day" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" data-date="{day}" data-value="{v}"><title>{day}: {v:.4}</title></rect>"#,
                    color_of(v)
                );
            } else {
                let _ = writeln!(
                    svg,
                    r#"<rect class="day empty" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{EMPTY_COLOR}" data-date="{day}"><title>{day}: no documents</title></rect>"#
                );
            }
            day += Duration::days(1);
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
