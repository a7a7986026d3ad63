//! Daily topic-probability series, additive decomposition, anomaly detection
//! and calendar heatmaps.

mod anomaly;
mod daily;
mod decompose;
mod heatmap;

pub use anomaly::{detect_anomalies, Anomaly, AnomalyReport, Side};
pub use daily::{build_daily_series, build_daily_series_from_documents, moving_average, DailySeries};
pub use decompose::{
    design_matrix, fit_decomposition, fourier_features, normal_quantile, Components, DecompositionConfig,
    DecompositionFit, Design, HolidayCalendar, HolidayEffect, Prediction, WEEKLY_PERIOD, YEARLY_PERIOD,
};
pub use heatmap::{heatmap_svg, hex_color, lerp_color, EMPTY_COLOR, RAMP_HIGH, RAMP_LOW};
