use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use topicpulse::corpus::{parse_jsonl, partition, synthesize_corpus, Corpus, GeneratorConfig, Origin};
use topicpulse::nn::{evaluate, init_network_with, labeled_set, train as fit_network, Arch, ArchConfig, EpochRecord, Metrics, TopicModel, TrainConfig};
use topicpulse::text::{build_vocabulary, Vocabulary, DEFAULT_MAX_VOCAB, DEFAULT_MIN_FREQ, DEFAULT_SEQ_LEN};

use crate::error::{CliError, Result};
use crate::output::{Inputs, RunManifest, Staged};
use crate::{load_config, parse_config, to_value, ArchFlag, Cli, ScoreArgs, TrainArgs};

pub(crate) fn read_corpus(path: &Path, inputs: &mut Inputs) -> Result<Corpus> {
    let text = inputs.read(path)?;
    parse_jsonl(text.as_bytes()).map_err(|e| CliError::data(path, e))
}

pub fn synth(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut inputs = Inputs::default();
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("synth needs --config <generator config JSON>".into()))?;
    let cfg: GeneratorConfig = parse_config(path, &inputs.read_config(path)?)?;
    let (corpus, events) = synthesize_corpus(&cfg, cli.seed)?;

    let mut staged = Staged::default();
    staged.add("corpus.jsonl", corpus.to_jsonl());
    let mut ev = serde_json::to_string_pretty(&events).expect("event log serializes");
    ev.push('\n');
    staged.add("events.json", ev);
    staged.commit(&cli.out_dir, "synth", "synth", cli.seed, to_value(&cfg), inputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OriginFilter {
    Microtext,
    News,
    Any,
}

/// Training run settings read from `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRunConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub val_fraction: f64,
    pub seq_len: usize,
    pub max_vocab: usize,
    pub min_freq: usize,
    /// Documents used for training; the models learn from short posts by default.
    pub train_origin: OriginFilter,
    pub target_tag: Option<String>,
    /// Layer widths; the architecture's defaults when absent.
    pub network: Option<ArchConfig>,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            val_fraction: 0.2,
            seq_len: DEFAULT_SEQ_LEN,
            max_vocab: DEFAULT_MAX_VOCAB,
            min_freq: DEFAULT_MIN_FREQ,
            train_origin: OriginFilter::Microtext,
            target_tag: None,
            network: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct TrainMetrics<'a> {
    arch: &'a str,
    train_documents: usize,
    validation_documents: usize,
    /// Epoch whose parameters were kept (0 = untrained).
    best_epoch: usize,
    #[serde(flatten)]
    metrics: Metrics,
    history: &'a [EpochRecord],
}

pub fn train(cli: &Cli, args: &TrainArgs) -> Result<Vec<PathBuf>> {
    let mut inputs = Inputs::default();
    let mut cfg: TrainRunConfig = load_config(cli.config.as_deref(), &mut inputs)?;
    cfg.train.seed = cli.seed;
    if args.target.is_some() {
        cfg.target_tag = args.target.clone();
    }
    cfg.train.validate()?;
    if cfg.seq_len == 0 {
        return Err(CliError::Usage("seq_len must be positive".into()));
    }

    let corpus = read_corpus(&args.corpus, &mut inputs)?;
    let corpus = corpus.filter(|d| match cfg.train_origin {
        OriginFilter::Any => true,
        OriginFilter::Microtext => d.origin == Origin::Microtext,
        OriginFilter::News => d.origin == Origin::News,
    });
    if corpus.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no training documents (origin filter {:?})",
            args.corpus.display(),
            cfg.train_origin
        )));
    }

    let (arch, labels) = match args.arch {
        ArchFlag::ModelA => {
            let tags = corpus.tag_universe().to_vec();
            if tags.is_empty() {
                return Err(CliError::Usage("model A needs tagged documents".into()));
            }
            (Arch::ModelA { num_tags: tags.len() }, tags)
        }
        ArchFlag::ModelB => {
            let target = cfg
                .target_tag
                .clone()
                .ok_or_else(|| CliError::Usage("model B needs --target or target_tag in the config".into()))?;
            let target = topicpulse::corpus::normalize_tag(&target);
            if !corpus.tag_universe().contains(&target) {
                return Err(CliError::Usage(format!("target tag {target:?} does not occur in the corpus")));
            }
            (Arch::ModelB, vec![target])
        }
    };

    let (train_docs, val_docs) = if corpus.len() >= 2 {
        partition(&corpus, cfg.val_fraction, cli.seed)?
    } else {
        (corpus.clone(), corpus.filter(|_| false))
    };
    let vocab = build_vocabulary(&train_docs, cfg.max_vocab, cfg.min_freq)?;
    let arch_cfg = cfg.network.clone().unwrap_or_else(|| ArchConfig::default_for(arch));
    let net = init_network_with(arch, &arch_cfg, vocab.len(), cli.seed)?;
    let train_set = labeled_set(&train_docs, &vocab, cfg.seq_len, &labels);
    let val_set = labeled_set(&val_docs, &vocab, cfg.seq_len, &labels);
    let (best, history) = fit_network(&net, &train_set, &val_set, &cfg.train)?;
    let metrics = evaluate(&best, if val_set.is_empty() { &train_set } else { &val_set })?;
    let best_epoch = history
        .iter()
        .min_by(|a, b| {
            let loss = |r: &EpochRecord| r.val.map_or(r.train_loss, |m| m.bce_loss);
            loss(a).total_cmp(&loss(b))
        })
        .map_or(0, |r| r.epoch);

    let model = TopicModel::new(best, vocab, cfg.seq_len, labels)?;
    let name = arch.name();
    let mut staged = Staged::default();
    staged.add(format!("{name}.ckpt.json"), model.to_checkpoint_json());
    staged.add(format!("{name}.vocab.json"), model.vocab.to_json());
    let report = TrainMetrics {
        arch: name,
        train_documents: train_docs.len(),
        validation_documents: val_docs.len(),
        best_epoch,
        metrics,
        history: &history,
    };
    let mut mj = serde_json::to_string_pretty(&report).expect("metrics serialize");
    mj.push('\n');
    staged.add(format!("{name}.metrics.json"), mj);
    let config = json!({ "arch": name, "run": to_value(&cfg), "network": to_value(&arch_cfg) });
    staged.commit(&cli.out_dir, "train", &format!("train-{name}"), cli.seed, config, inputs)
}

/// `x.ckpt.json` → `x.vocab.json`; other names get `.vocab.json` appended to the stem.
pub(crate) fn sibling_vocab(checkpoint: &Path) -> PathBuf {
    let name = checkpoint.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name
        .strip_suffix(".ckpt.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(&name);
    checkpoint.with_file_name(format!("{stem}.vocab.json"))
}

pub(crate) fn load_model(checkpoint: &Path, vocab: Option<&Path>, inputs: &mut Inputs) -> Result<TopicModel> {
    let vocab_path = vocab.map(Path::to_path_buf).unwrap_or_else(|| sibling_vocab(checkpoint));
    let ckpt = inputs.read(checkpoint)?;
    let vocab = Vocabulary::from_json(&inputs.read(&vocab_path)?).map_err(|e| CliError::data(&vocab_path, e))?;
    TopicModel::from_checkpoint_json(&ckpt, vocab).map_err(|e| CliError::data(checkpoint, e))
}

pub fn score(cli: &Cli, args: &ScoreArgs) -> Result<Vec<PathBuf>> {
    let mut inputs = Inputs::default();
    let corpus = read_corpus(&args.corpus, &mut inputs)?;
    let model = load_model(&args.checkpoint, args.vocab.as_deref(), &mut inputs)?;
    let scores = model.score_corpus(&corpus)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "published_at".to_string()];
    match model.arch() {
        Arch::ModelB => header.push("probability".into()),
        Arch::ModelA { .. } => header.extend(model.labels.iter().map(|t| format!("p_{t}"))),
    }
    w.write_record(&header).expect("in-memory csv");
    for (doc, probs) in corpus.documents().iter().zip(&scores) {
        let mut row = vec![doc.id.clone(), doc.published_at.to_string()];
        row.extend(probs.iter().map(|p| crate::analysis::num(*p)));
        w.write_record(&row).expect("in-memory csv");
    }
    let bytes = w.into_inner().expect("in-memory csv");

    let name = model.arch().name();
    let mut staged = Staged::default();
    staged.add(format!("{name}.scores.csv"), bytes);
    let config = json!({ "arch": name, "seq_len": model.seq_len, "labels": model.labels });
    staged.commit(&cli.out_dir, "score", &format!("score-{name}"), cli.seed, config, inputs)
}

pub fn report(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut inputs = Inputs::default();
    let dir = &cli.out_dir;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::data(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".manifest.json") && n != "report.manifest.json")
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::data(dir, "no run manifests to report on"));
    }

    let mut md = String::from("# Run report\n");
    for path in &paths {
        let text = inputs.read(path)?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::data(path, e))?;
        let _ = writeln!(md, "\n## {}\n\nseed {}, tool version {}\n", m.subcommand, m.seed, m.tool_version);
        md.push_str("| role | file | sha256 |\n|---|---|---|\n");
        for f in &m.inputs {
            let _ = writeln!(md, "| input | {} | `{}` |", f.path, &f.sha256[..16]);
        }
        for f in &m.outputs {
            let _ = writeln!(md, "| output | {} | `{}` |", f.path, &f.sha256[..16]);
            summarize_output(dir, &f.path, &mut md);
        }
    }
    let mut staged = Staged::default();
    staged.add("report.md", md);
    staged.commit(dir, "report", "report", cli.seed, json!({}), inputs)
}

/// One-line digests of well-known outputs, appended under the manifest table.
fn summarize_output(dir: &Path, name: &str, md: &mut String) {
    let Ok(text) = std::fs::read_to_string(dir.join(name)) else {
        return;
    };
    if name.ends_with(".metrics.json") {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
            let _ = writeln!(
                md,
                "|  | ↳ accuracy {} precision {} recall {} bce {} | |",
                v["accuracy"], v["precision"], v["recall"], v["bce_loss"]
            );
        }
    } else if name == "anomalies.csv" {
        let _ = writeln!(md, "|  | ↳ {} anomaly days | |", text.lines().count().saturating_sub(1));
    } else if name == "mapper.json" {
        if let Ok(g) = topicpulse::tda::MapperGraph::from_json(&text) {
            let _ = writeln!(
                md,
                "|  | ↳ {} nodes, {} edges, {} components, cycle rank {} | |",
                g.nodes.len(),
                g.edges.len(),
                topicpulse::tda::graph_components(&g),
                topicpulse::tda::cycle_rank(&g)
            );
        }
    }
}
