//! Timestamped document corpora: JSONL ingestion, partitioning and a seeded
//! synthetic generator with known ground truth.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    News,
    #[serde(alias = "tweet")]
    Microtext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub published_at: NaiveDate,
    pub source: String,
    pub text: String,
    pub tags: BTreeSet<String>,
    pub origin: Origin,
}

impl Document {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }
}

/// Lowercases and strips leading `#` characters, the hashtag-to-tag rule.
pub fn normalize_tag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').trim().to_lowercase()
}

/// An immutable, canonically ordered document collection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    date_range: Option<(NaiveDate, NaiveDate)>,
    tag_universe: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, sorting by `(published_at, id)` and validating ids, text and
    /// dates. When `date_range` is `None` it is the span of the documents.
    pub fn new(
        mut documents: Vec<Document>,
        date_range: Option<(NaiveDate, NaiveDate)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &mut documents {
            if !seen.insert(doc.id.clone()) {
                return Err(Error::Input(format!("duplicate document id {:?}", doc.id)));
            }
            if doc.text.trim().is_empty() {
                return Err(Error::Input(format!("document {:?} has empty text", doc.id)));
            }
            doc.tags = doc.tags.iter().map(|t| normalize_tag(t)).collect();
        }
        documents.sort_by(|a, b| (a.published_at, &a.id).cmp(&(b.published_at, &b.id)));

        let span = match (documents.first(), documents.last()) {
            (Some(first), Some(last)) => Some((first.published_at, last.published_at)),
            _ => None,
        };
        let date_range = match (date_range, span) {
            (Some((start, end)), _) if start > end => {
                return Err(Error::Input(format!("date range {start}..{end} is reversed")))
            }
            (Some((start, end)), Some((lo, hi))) if lo < start || hi > end => {
                return Err(Error::Input(format!(
                    "documents span {lo}..{hi}, outside declared range {start}..{end}"
                )))
            }
            (Some(range), _) => Some(range),
            (None, span) => span,
        };

        let tag_universe = documents
            .iter()
            .flat_map(|d| d.tags.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        Ok(Self {
            documents,
            date_range,
            tag_universe,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        self.date_range
    }

    pub fn tag_universe(&self) -> &[String] {
        &self.tag_universe
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Sub-corpus of the documents matching `keep`, preserving canonical order and
    /// the tag universe of the parent.
    pub fn filter(&self, mut keep: impl FnMut(&Document) -> bool) -> Corpus {
        Corpus {
            documents: self.documents.iter().filter(|d| keep(d)).cloned().collect(),
            date_range: self.date_range,
            tag_universe: self.tag_universe.clone(),
        }
    }

    /// One JSON object per line, canonical order, trailing newline after each record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            // Document serialization cannot fail: all fields are plain data.
            let line = serde_json::to_string(doc).expect("document serializes");
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Reads a JSONL corpus. Blank lines are skipped; line numbers in errors are 1-based.
pub fn load_jsonl(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_jsonl(reader: impl BufRead) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if doc.text.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("document {:?} has empty text", doc.id),
            });
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId {
                id: doc.id,
                line: line_no,
            });
        }
        documents.push(doc);
    }
    Corpus::new(documents, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub date: NaiveDate,
    /// Fraction of that day's documents forced to the target topic, in (0, 1].
    pub magnitude: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog {
    pub events: Vec<Event>,
}

fn default_filler() -> Vec<String> {
    [
        "el", "la", "de", "que", "en", "los", "se", "del", "las", "un", "por", "con", "una",
        "para", "hoy", "ayer", "dia", "segun", "tras", "sobre", "nuevo", "gran", "caso",
        "ciudad", "pais", "gente", "tiempo", "semana", "anos", "hora",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_micro_words() -> (usize, usize) {
    (6, 14)
}

fn default_news_words() -> (usize, usize) {
    (20, 40)
}

fn default_topical_fraction() -> f64 {
    0.5
}

fn default_microtext_fraction() -> f64 {
    0.5
}

fn default_weekend_boost() -> f64 {
    1.0
}

/// Synthetic corpus generator settings (serialized as the generator config JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub docs_per_day: usize,
    /// Tag → word list. Lexicons must be pairwise disjoint.
    pub topic_lexicons: BTreeMap<String, Vec<String>>,
    pub target_topic: String,
    pub base_topic_rate: f64,
    #[serde(default)]
    pub injected_events: EventLog,
    /// Non-target tags attached as a co-tag to target documents (one each, uniform).
    #[serde(default)]
    pub target_cotags: Vec<String>,
    /// Multiplier on `base_topic_rate` for Saturdays and Sundays.
    #[serde(default = "default_weekend_boost")]
    pub weekend_boost: f64,
    #[serde(default = "default_filler")]
    pub filler_words: Vec<String>,
    #[serde(default = "default_topical_fraction")]
    pub topical_fraction: f64,
    #[serde(default = "default_microtext_fraction")]
    pub microtext_fraction: f64,
    #[serde(default = "default_micro_words")]
    pub microtext_words: (usize, usize),
    #[serde(default = "default_news_words")]
    pub news_words: (usize, usize),
}

impl GeneratorConfig {
    /// A config with default text-shape settings.
    pub fn new(
        start: NaiveDate,
        end: NaiveDate,
        docs_per_day: usize,
        topic_lexicons: BTreeMap<String, Vec<String>>,
        target_topic: impl Into<String>,
        base_topic_rate: f64,
    ) -> Self {
        Self {
            start,
            end,
            docs_per_day,
            topic_lexicons,
            target_topic: target_topic.into(),
            base_topic_rate,
            injected_events: EventLog::default(),
            target_cotags: Vec::new(),
            weekend_boost: default_weekend_boost(),
            filler_words: default_filler(),
            topical_fraction: default_topical_fraction(),
            microtext_fraction: default_microtext_fraction(),
            microtext_words: default_micro_words(),
            news_words: default_news_words(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.start > self.end {
            return bad(format!("start {} after end {}", self.start, self.end));
        }
        if self.topic_lexicons.len() < 2 {
            return bad("at least two topic lexicons are required".into());
        }
        if !self.topic_lexicons.contains_key(&self.target_topic) {
            return bad(format!("target topic {:?} has no lexicon", self.target_topic));
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (tag, words) in &self.topic_lexicons {
            if words.is_empty() {
                return bad(format!("lexicon {tag:?} is empty"));
            }
            if normalize_tag(tag) != *tag {
                return bad(format!("tag {tag:?} must be lowercase without '#'"));
            }
            for w in words {
                if let Some(prev) = owner.insert(w.as_str(), tag.as_str()) {
                    if prev != tag {
                        return bad(format!("word {w:?} appears in lexicons {prev:?} and {tag:?}"));
                    }
                }
            }
        }
        if self.filler_words.is_empty() {
            return bad("filler word list is empty".into());
        }
        if let Some(w) = self.filler_words.iter().find(|w| owner.contains_key(w.as_str())) {
            return bad(format!("filler word {w:?} overlaps a topic lexicon"));
        }
        for cotag in &self.target_cotags {
            if cotag == &self.target_topic || !self.topic_lexicons.contains_key(cotag) {
                return bad(format!("co-tag {cotag:?} must be a non-target lexicon tag"));
            }
        }
        for (name, p) in [
            ("base_topic_rate", self.base_topic_rate),
            ("topical_fraction", self.topical_fraction),
            ("microtext_fraction", self.microtext_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if !(self.weekend_boost >= 0.0) || self.base_topic_rate * self.weekend_boost > 1.0 {
            return bad(format!("weekend_boost {} gives a rate above 1", self.weekend_boost));
        }
        for (name, (lo, hi)) in [("microtext_words", self.microtext_words), ("news_words", self.news_words)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} range ({lo}, {hi}) is invalid"));
            }
        }
        for ev in &self.injected_events.events {
            if ev.date < self.start || ev.date > self.end {
                return bad(format!("event {:?} on {} is outside the date range", ev.label, ev.date));
            }
            if !(ev.magnitude > 0.0 && ev.magnitude <= 1.0) {
                return bad(format!("event {:?} magnitude {} outside (0, 1]", ev.label, ev.magnitude));
            }
        }
        Ok(())
    }
}

/// Generates a bag-of-words corpus with known topic assignment.
///
/// Each day has exactly `docs_per_day` documents. A document is target-topic with
/// probability `base_topic_rate` (times `weekend_boost` on weekends); on an event
/// day the first `ceil(magnitude * docs_per_day)` documents are forced target.
/// Non-target documents get a uniform non-target tag. Text mixes words from the
/// assigned lexicon(s) with filler and always contains at least one lexicon word
/// per assigned tag.
pub fn synthesize_corpus(cfg: &GeneratorConfig, seed: u64) -> Result<(Corpus, EventLog)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let non_target: Vec<&String> = cfg
        .topic_lexicons
        .keys()
        .filter(|t| **t != cfg.target_topic)
        .collect();

    let mut forced: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for ev in &cfg.injected_events.events {
        let m = forced.entry(ev.date).or_insert(0.0);
        *m = m.max(ev.magnitude);
    }

    let n_days = (cfg.end - cfg.start).num_days() + 1;
    let mut documents = Vec::with_capacity(n_days as usize * cfg.docs_per_day);
    for day in 0..n_days {
        let date = cfg.start + Duration::days(day);
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let rate = if weekend {
            cfg.base_topic_rate * cfg.weekend_boost
        } else {
            cfg.base_topic_rate
        };
        let n_forced = forced
            .get(&date)
            .map(|m| (m * cfg.docs_per_day as f64).ceil() as usize)
            .unwrap_or(0);

        for idx in 0..cfg.docs_per_day {
            let is_target = idx < n_forced || rng.gen_bool(rate);
            let mut tags: Vec<&String> = Vec::with_capacity(2);
            if is_target {
                tags.push(&cfg.target_topic);
                if !cfg.target_cotags.is_empty() {
                    tags.push(cfg.target_cotags.choose(&mut rng).expect("non-empty"));
                }
            } else {
                tags.push(non_target.choose(&mut rng).expect("at least one non-target tag"));
            }

            let origin = if rng.gen_bool(cfg.microtext_fraction) {
                Origin::Microtext
            } else {
                Origin::News
            };
            let (lo, hi) = match origin {
                Origin::Microtext => cfg.microtext_words,
                Origin::News => cfg.news_words,
            };
            let n_words = rng.gen_range(lo..=hi).max(tags.len());

            let mut words: Vec<&str> = Vec::with_capacity(n_words);
            for tag in &tags {
                words.push(cfg.topic_lexicons[*tag].choose(&mut rng).expect("non-empty"));
            }
            while words.len() < n_words {
                if rng.gen_bool(cfg.topical_fraction) {
                    let tag = tags.iter().choose(&mut rng).expect("non-empty");
                    words.push(cfg.topic_lexicons[*tag].choose(&mut rng).expect("non-empty"));
                } else {
                    words.push(cfg.filler_words.choose(&mut rng).expect("non-empty"));
                }
            }
            words.shuffle(&mut rng);

            let text = match origin {
                Origin::Microtext => words
                    .iter()
                    .enumerate()
                    .map(|(i, w)| if i == 0 { format!("#{w}") } else { w.to_string() })
                    .collect::<Vec<_>>()
                    .join(" "),
                Origin::News => words.join(" "),
            };
            documents.push(Document {
                id: format!("{date}-{idx:05}"),
                published_at: date,
                source: match origin {
                    Origin::Microtext => "synthetic-microtext".into(),
                    Origin::News => "synthetic-news".into(),
                },
                text,
                tags: tags.into_iter().cloned().collect(),
                origin,
            });
        }
    }

    let corpus = Corpus::new(documents, Some((cfg.start, cfg.end)))?;
    Ok((corpus, cfg.injected_events.clone()))
}

/// Splits into `(train, validation)` with `round(val_fraction * N)` validation documents.
pub fn partition(corpus: &Corpus, val_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Config(format!("val_fraction {val_fraction} outside (0, 1)")));
    }
    if corpus.is_empty() {
        return Err(Error::Input("cannot partition an empty corpus".into()));
    }
    let n = corpus.len();
    let n_val = (val_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let split = |want: bool| Corpus {
        documents: corpus
            .documents
            .iter()
            .zip(&is_val)
            .filter(|(_, v)| **v == want)
            .map(|(d, _)| d.clone())
            .collect(),
        date_range: corpus.date_range,
        tag_universe: corpus.tag_universe.clone(),
    };
    Ok((split(false), split(true)))
}
