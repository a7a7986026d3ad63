#![allow(dead_code)]

pub mod dot;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_topicpulse")
}

/// Runs `topicpulse` with `args` and `--out-dir dir`.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("spawn topicpulse")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "topicpulse {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn write_json(path: &Path, v: &Value) -> PathBuf {
    fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_path_buf()
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Six disjoint lexicons, suicide as the target, salud/sucesos as co-tags.
pub fn generator_config(start: &str, end: &str, docs_per_day: usize, rate: f64) -> Value {
    let events: Vec<Value> = [("2018-03-14", "spring"), ("2018-09-10", "autumn")]
        .into_iter()
        .filter(|(d, _)| *d >= start && *d <= end)
        .map(|(d, label)| json!({"date": d, "magnitude": 1.0, "label": label}))
        .collect();
    json!({
        "start": start,
        "end": end,
        "docs_per_day": docs_per_day,
        "topic_lexicons": {
            "suicidio": ["suicidio", "suicida", "autolesion", "desesperanza", "prevencion"],
            "deportes": ["futbol", "gol", "liga", "partido", "estadio"],
            "politica": ["congreso", "ley", "voto", "senado", "gobierno"],
            "economia": ["mercado", "inflacion", "empleo", "banco", "euro"],
            "salud": ["hospital", "medico", "tratamiento", "paciente", "terapia"],
            "sucesos": ["policia", "juzgado", "detenido", "tribunal", "agentes"]
        },
        "target_topic": "suicidio",
        "base_topic_rate": rate,
        "target_cotags": ["salud", "sucesos"],
        "injected_events": events
    })
}

/// Narrow networks and few epochs so the pipeline runs in seconds.
pub fn train_config(arch: &str) -> Value {
    let kernels = if arch == "modelA" { json!([3, 4]) } else { json!([3, 3, 3, 3]) };
    json!({
        "epochs": 6,
        "learning_rate": 0.005,
        "val_fraction": 0.2,
        "seq_len": 40,
        "train_origin": "any",
        "target_tag": "suicidio",
        "network": {"embed_dim": 12, "channels": 12, "kernels": kernels, "pool_width": 2}
    })
}

/// synth → train (both) → score → series → mapper in `dir`.
pub fn pipeline(dir: &Path, seed: &str, threshold: &str) {
    let gen = write_json(&dir.join("gen.cfg.json"), &generator_config("2018-01-01", "2018-12-31", 6, 0.25));
    let ta = write_json(&dir.join("ta.cfg.json"), &train_config("modelA"));
    let tb = write_json(&dir.join("tb.cfg.json"), &train_config("modelB"));
    let corpus = dir.join("corpus.jsonl");
    run_ok(dir, &["--seed", seed, "--config", s(&gen), "synth"]);
    run_ok(dir, &["--seed", seed, "--config", s(&tb), "train", "--corpus", s(&corpus), "--arch", "modelB"]);
    run_ok(dir, &["--seed", seed, "--config", s(&ta), "train", "--corpus", s(&corpus), "--arch", "modelA"]);
    run_ok(dir, &["--seed", seed, "score", "--corpus", s(&corpus), "--checkpoint", s(&dir.join("modelB.ckpt.json"))]);
    run_ok(dir, &["--seed", seed, "series", "--scores", s(&dir.join("modelB.scores.csv"))]);
    run_ok(
        dir,
        &[
            "--seed",
            seed,
            "mapper",
            "--corpus",
            s(&corpus),
            "--model-a",
            s(&dir.join("modelA.ckpt.json")),
            "--model-b",
            s(&dir.join("modelB.ckpt.json")),
            "--threshold",
            threshold,
        ],
    );
}

/// File name → contents for every regular file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

/// Output name → sha256 recorded in every manifest of `dir`.
pub fn manifest_hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (name, _) in snapshot(dir) {
        if name.ends_with(".manifest.json") {
            let m = read_json(&dir.join(&name));
            for f in m["outputs"].as_array().unwrap() {
                out.insert(
                    format!("{name}:{}", f["path"].as_str().unwrap()),
                    f["sha256"].as_str().unwrap().to_string(),
                );
            }
        }
    }
    out
}
