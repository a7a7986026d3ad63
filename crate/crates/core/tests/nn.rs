use std::collections::BTreeMap;
use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topicpulse::corpus::{partition, synthesize_corpus, Corpus, GeneratorConfig};
use topicpulse::nn::{
    bce_loss, evaluate, init_network, init_network_with, labeled_set, score, topic_filter, train, Arch, ArchConfig,
    Network, TopicModel, TrainConfig,
};
use topicpulse::text::{build_vocabulary, EncodedText};

fn loss(net: &Network, batch: &[EncodedText], labels: &[Vec<f64>]) -> f64 {
    let (probs, _) = net.forward(batch).unwrap();
    bce_loss(&probs, labels).unwrap()
}

/// Worst relative error between backprop and central differences over every
/// parameter. Both-zero pairs count as exact.
fn worst_gradient_error(net: &Network, batch: &[EncodedText], labels: &[Vec<f64>], h: f64) -> f64 {
    let (_, cache) = net.forward(batch).unwrap();
    let grads = net.backward(&cache, labels).unwrap();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for li in 0..net.params().len() {
        for ti in 0..net.params()[li].len() {
            for k in 0..net.params()[li][ti].values.len() {
                let orig = probe.params()[li][ti].values[k];
                probe.params_mut()[li][ti].values[k] = orig + h;
                let up = loss(&probe, batch, labels);
                probe.params_mut()[li][ti].values[k] = orig - h;
                let down = loss(&probe, batch, labels);
                probe.params_mut()[li][ti].values[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[li][ti].values[k];
                let scale = analytic.abs().max(numeric.abs());
                if scale > 0.0 {
                    worst = worst.max((analytic - numeric).abs() / scale.max(1e-8));
                }
            }
        }
    }
    worst
}

fn random_batch(vocab: usize, len: usize, batch: usize, width: usize, seed: u64) -> (Vec<EncodedText>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = (0..batch)
        .map(|_| EncodedText {
            ids: (0..len).map(|_| rng.gen_range(0..vocab)).collect(),
            true_length: len,
        })
        .collect();
    let labels = (0..batch)
        .map(|_| (0..width).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect())
        .collect();
    (inputs, labels)
}

fn small(arch: Arch) -> ArchConfig {
    ArchConfig {
        embed_dim: 4,
        channels: 5,
        ..ArchConfig::default_for(arch)
    }
}

#[test]
fn model_b_gradients_match_finite_differences() {
    let start = Instant::now();
    let net = init_network_with(Arch::ModelB, &small(Arch::ModelB), 20, 3).unwrap();
    let (batch, labels) = random_batch(20, 8, 4, 1, 17);
    let err = worst_gradient_error(&net, &batch, &labels, 1e-4);
    assert!(err < 1e-4, "worst relative error {err}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn model_a_gradients_match_finite_differences() {
    let arch = Arch::ModelA { num_tags: 3 };
    let net = init_network_with(arch, &small(arch), 15, 8).unwrap();
    let (batch, labels) = random_batch(15, 10, 3, 3, 2);
    let err = worst_gradient_error(&net, &batch, &labels, 1e-4);
    assert!(err < 1e-4, "worst relative error {err}");
}

#[test]
fn default_widths_gradients_on_a_sample() {
    // Full-size network: spot-check the gradient along a random direction.
    let net = init_network(Arch::ModelB, 30, 1).unwrap();
    let (batch, labels) = random_batch(30, 24, 2, 1, 5);
    let (_, cache) = net.forward(&batch).unwrap();
    let grads = net.backward(&cache, &labels).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let dir: Vec<Vec<Vec<f64>>> = net
        .params()
        .iter()
        .map(|g| g.iter().map(|t| t.values.iter().map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
        .collect();
    let shifted = |eps: f64| {
        let mut n = net.clone();
        for (li, g) in n.params_mut().iter_mut().enumerate() {
            for (ti, t) in g.iter_mut().enumerate() {
                for (k, v) in t.values.iter_mut().enumerate() {
                    *v += eps * dir[li][ti][k];
                }
            }
        }
        loss(&n, &batch, &labels)
    };
    let h = 1e-5;
    let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
    let analytic: f64 = grads
        .iter()
        .zip(&dir)
        .flat_map(|(g, d)| g.iter().zip(d).flat_map(|(t, dv)| t.values.iter().zip(dv).map(|(a, b)| a * b)))
        .sum();
    assert!((numeric - analytic).abs() / analytic.abs().max(1e-8) < 1e-4, "{numeric} vs {analytic}");
}

fn lexicons() -> BTreeMap<String, Vec<String>> {
    [
        ("suicidio", vec!["suicidio", "suicida", "autolesion", "desesperanza", "quitarse"]),
        ("deportes", vec!["futbol", "gol", "liga", "partido", "estadio"]),
        ("politica", vec!["congreso", "ley", "voto", "senado", "gobierno"]),
        ("economia", vec!["mercado", "inflacion", "empleo", "banco", "euro"]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
    .collect()
}

fn separable(days: i64, per_day: usize, seed: u64) -> Corpus {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let end = start + chrono::Duration::days(days - 1);
    let cfg = GeneratorConfig::new(start, end, per_day, lexicons(), "suicidio", 0.4);
    synthesize_corpus(&cfg, seed).unwrap().0
}

#[test]
fn learns_a_separable_topic() {
    let corpus = separable(40, 15, 6);
    let (tr, va) = partition(&corpus, 0.2, 1).unwrap();
    let vocab = build_vocabulary(&tr, 20000, 2).unwrap();
    let tags = vec!["suicidio".to_string()];
    let cfg_arch = ArchConfig {
        embed_dim: 16,
        channels: 16,
        ..ArchConfig::default_for(Arch::ModelB)
    };
    let net = init_network_with(Arch::ModelB, &cfg_arch, vocab.len(), 2).unwrap();
    let train_set = labeled_set(&tr, &vocab, 48, &tags);
    let val_set = labeled_set(&va, &vocab, 48, &tags);
    let cfg = TrainConfig {
        epochs: 12,
        learning_rate: 3e-3,
        ..Default::default()
    };
    let (best, history) = train(&net, &train_set, &val_set, &cfg).unwrap();
    let m = evaluate(&best, &val_set).unwrap();
    assert!(m.accuracy >= 0.98, "{m:?}");
    assert!(history[0].val.unwrap().bce_loss > m.bce_loss);

    // Deterministic under a fixed seed.
    let (again, _) = train(&net, &train_set, &val_set, &cfg).unwrap();
    assert_eq!(again, best);

    let model = TopicModel::new(best, vocab.clone(), 48, tags).unwrap();
    let json = model.to_checkpoint_json();
    let back = TopicModel::from_checkpoint_json(&json, vocab).unwrap();
    assert_eq!(back.topic_probabilities(&va).unwrap(), model.topic_probabilities(&va).unwrap());

    let kept = topic_filter(&va, &model, 0.5).unwrap();
    let positives = va.documents().iter().filter(|d| d.has_tag("suicidio")).count();
    assert!((kept.len() as f64 - positives as f64).abs() <= 0.05 * va.len() as f64);
    assert!(topic_filter(&va, &model, 1.0).unwrap().is_empty());
}

#[test]
fn model_a_learns_tags() {
    let corpus = separable(25, 12, 9);
    let (tr, va) = partition(&corpus, 0.2, 3).unwrap();
    let vocab = build_vocabulary(&tr, 20000, 2).unwrap();
    let tags: Vec<String> = tr.tag_universe().to_vec();
    let arch = Arch::ModelA { num_tags: tags.len() };
    let cfg_arch = ArchConfig {
        embed_dim: 16,
        channels: 16,
        ..ArchConfig::default_for(arch)
    };
    let net = init_network_with(arch, &cfg_arch, vocab.len(), 4).unwrap();
    let train_set = labeled_set(&tr, &vocab, 48, &tags);
    let val_set = labeled_set(&va, &vocab, 48, &tags);
    let cfg = TrainConfig {
        epochs: 15,
        learning_rate: 3e-3,
        ..Default::default()
    };
    let (best, _) = train(&net, &train_set, &val_set, &cfg).unwrap();
    let m = evaluate(&best, &val_set).unwrap();
    assert!(m.multilabel_accuracy >= 0.9, "{m:?}");
}

#[test]
fn saturated_scores_stay_inside_unit_interval() {
    let corpus = separable(2, 3, 1);
    let vocab = build_vocabulary(&corpus, 100, 1).unwrap();
    let mut net = init_network(Arch::ModelB, vocab.len(), 0).unwrap();
    for sign in [1.0, -1.0] {
        let last = net.params_mut().iter_mut().rev().find(|g| !g.is_empty()).unwrap();
        for t in last.iter_mut() {
            t.values.iter_mut().for_each(|v| *v = sign * 1e4);
        }
        let doc = &corpus.documents()[0];
        let raw = net.predict(&topicpulse::text::encode_text(&doc.text, &vocab, 32)).unwrap()[0];
        assert!(raw == 0.0 || raw == 1.0, "{raw}");
        let p = score(&net, doc, &vocab, 32).unwrap()[0];
        assert!(p > 0.0 && p < 1.0, "{p}");
    }
}

#[test]
fn empty_training_set_is_rejected() {
    let net = init_network(Arch::ModelB, 10, 0).unwrap();
    let empty = Default::default();
    assert!(train(&net, &empty, &empty, &TrainConfig::default()).is_err());
}
