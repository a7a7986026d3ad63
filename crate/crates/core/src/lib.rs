//! Topic-prevalence mining over timestamped text corpora.
//!
//! The pipeline has five stages, each usable on its own:
//!
//! * [`corpus`]: JSONL ingestion, partitioning and a seeded synthetic generator.
//! * [`text`]: tokenizer, vocabulary and fixed-length encoding.
//! * [`nn`]: from-scratch 1-D convolutional classifiers (multilabel tagger and
//!   binary topic detector) with analytic gradients and Adam training.
//! * [`series`]: daily topic-probability series, additive trend/seasonality/holiday
//!   decomposition, interval-based anomaly detection and calendar heatmaps.
//! * [`tda`]: Mapper graphs over PCA-reduced tag-probability vectors.

pub mod corpus;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod series;
pub mod tda;
pub mod text;

pub use error::{Error, Result};
