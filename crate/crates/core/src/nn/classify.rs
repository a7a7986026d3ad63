//! Applying trained networks to documents.

use rayon::prelude::*;

use super::checkpoint::CheckpointFile;
use super::network::{Arch, Network};
use super::train::LabeledSet;
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::text::{encode_text, Vocabulary};

/// Documents count as on-topic only when the binary model is strictly more
/// confident than this.
pub const DEFAULT_TOPIC_THRESHOLD: f64 = 0.999;

/// Largest f64 below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Forward pass on one document. For model B the vector has one entry, the
/// topic probability.
///
/// A sigmoid of a large logit rounds to exactly 0 or 1 in f64; reported
/// probabilities are kept inside the open interval.
pub fn score(net: &Network, doc: &Document, vocab: &Vocabulary, seq_len: usize) -> Result<Vec<f64>> {
    let mut p = net.predict(&encode_text(&doc.text, vocab, seq_len))?;
    for v in &mut p {
        *v = v.clamp(f64::MIN_POSITIVE, BELOW_ONE);
    }
    Ok(p)
}

/// Targets for a corpus: model B gets `[has target tag]`, model A a multi-hot
/// vector over `tags`.
pub fn labeled_set(corpus: &Corpus, vocab: &Vocabulary, seq_len: usize, tags: &[String]) -> LabeledSet {
    let mut set = LabeledSet::default();
    for doc in corpus.documents() {
        set.inputs.push(encode_text(&doc.text, vocab, seq_len));
        set.labels
            .push(tags.iter().map(|t| if doc.has_tag(t) { 1.0 } else { 0.0 }).collect());
    }
    set
}

/// A network bundled with what is needed to feed it raw documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub network: Network,
    pub vocab: Vocabulary,
    pub seq_len: usize,
    /// Output names: the tag universe for model A, the target tag for model B.
    pub labels: Vec<String>,
}

impl TopicModel {
    pub fn new(network: Network, vocab: Vocabulary, seq_len: usize, labels: Vec<String>) -> Result<Self> {
        if labels.len() != network.output_width() {
            return Err(Error::Shape(format!(
                "{} labels for a head of width {}",
                labels.len(),
                network.output_width()
            )));
        }
        if vocab.len() != network.vocab_size() {
            return Err(Error::Shape(format!(
                "vocabulary has {} entries, network expects {}",
                vocab.len(),
                network.vocab_size()
            )));
        }
        if seq_len == 0 {
            return Err(Error::Config("seq_len must be positive".into()));
        }
        Ok(Self {
            network,
            vocab,
            seq_len,
            labels,
        })
    }

    pub fn arch(&self) -> Arch {
        self.network.arch()
    }

    pub fn score(&self, doc: &Document) -> Result<Vec<f64>> {
        score(&self.network, doc, &self.vocab, self.seq_len)
    }

    /// Scores every document. Work fans out across threads; results are
    /// collected in corpus order, so output never depends on scheduling.
    pub fn score_corpus(&self, corpus: &Corpus) -> Result<Vec<Vec<f64>>> {
        corpus.documents().par_iter().map(|d| self.score(d)).collect()
    }

    /// Single topic probability per document; model B only.
    pub fn topic_probabilities(&self, corpus: &Corpus) -> Result<Vec<f64>> {
        if self.arch() != Arch::ModelB {
            return Err(Error::Input("topic probabilities need a binary (modelB) network".into()));
        }
        Ok(self.score_corpus(corpus)?.into_iter().map(|v| v[0]).collect())
    }

    pub fn labeled_set(&self, corpus: &Corpus) -> LabeledSet {
        labeled_set(corpus, &self.vocab, self.seq_len, &self.labels)
    }

    /// Checkpoint JSON with `labels` and `seq_len` filled in.
    pub fn to_checkpoint_json(&self) -> String {
        let mut file = self.network.to_checkpoint();
        file.labels = self.labels.clone();
        file.seq_len = Some(self.seq_len);
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(json: &str, vocab: Vocabulary) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(json)?;
        let network = Network::from_checkpoint(&file)?;
        let seq_len = file
            .seq_len
            .ok_or_else(|| Error::Input("checkpoint has no seq_len".into()))?;
        Self::new(network, vocab, seq_len, file.labels)
    }
}

/// Documents whose topic probability is strictly greater than `threshold`, in
/// canonical order.
pub fn topic_filter(corpus: &Corpus, model: &TopicModel, threshold: f64) -> Result<Corpus> {
    let probs = model.topic_probabilities(corpus)?;
    let mut it = probs.into_iter();
    Ok(corpus.filter(|_| it.next().is_some_and(|p| p > threshold)))
}
