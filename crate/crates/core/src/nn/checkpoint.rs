//! Versioned JSON checkpoint form of a [`Network`].

use serde::{Deserialize, Serialize};

use super::network::{Arch, LayerSpec, Network, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct CheckpointFile {
    pub version: u32,
    pub arch: String,
    pub vocab_size: usize,
    pub seed: u64,
    pub layers: Vec<LayerRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq_len: Option<usize>,
}

/// One layer: `shape` carries the layer's size parameters, `values` the weights
/// flattened row-major and `bias` the bias vector where the layer has one.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct LayerRecord {
    pub kind: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relu: Option<bool>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

impl Network {
    pub(crate) fn to_checkpoint(&self) -> CheckpointFile {
        let layers = self
            .specs()
            .iter()
            .zip(self.params())
            .map(|(spec, p)| {
                let (kind, shape, relu) = match *spec {
                    LayerSpec::Embedding { vocab_size, dim } => ("embedding", vec![vocab_size, dim], None),
                    LayerSpec::Conv1d {
                        in_channels,
                        out_channels,
                        kernel,
                        relu,
                    } => ("conv1d", vec![out_channels, in_channels, kernel], Some(relu)),
                    LayerSpec::MaxPool { width } => ("maxpool", vec![width], None),
                    LayerSpec::GlobalMaxPool => ("global_maxpool", vec![], None),
                    LayerSpec::Dense { inputs, outputs } => ("dense", vec![outputs, inputs], None),
                    LayerSpec::Sigmoid => ("sigmoid", vec![], None),
                };
                LayerRecord {
                    kind: kind.into(),
                    shape,
                    relu,
                    values: p.first().map(|t| t.values.clone()).unwrap_or_default(),
                    bias: p.get(1).map(|t| t.values.clone()),
                }
            })
            .collect();
        CheckpointFile {
            version: CHECKPOINT_VERSION,
            arch: self.arch().name().into(),
            vocab_size: self.vocab_size(),
            seed: self.seed(),
            layers,
            labels: Vec::new(),
            seq_len: None,
        }
    }

    pub(crate) fn from_checkpoint(file: &CheckpointFile) -> Result<Network> {
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Input(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                file.version
            )));
        }
        let mut specs = Vec::with_capacity(file.layers.len());
        let mut params = Vec::with_capacity(file.layers.len());
        for (i, rec) in file.layers.iter().enumerate() {
            let dims = |n: usize| -> Result<&[usize]> {
                if rec.shape.len() == n {
                    Ok(&rec.shape)
                } else {
                    Err(Error::Shape(format!("layer {i} ({}): shape {:?}", rec.kind, rec.shape)))
                }
            };
            let spec = match rec.kind.as_str() {
                "embedding" => {
                    let d = dims(2)?;
                    LayerSpec::Embedding {
                        vocab_size: d[0],
                        dim: d[1],
                    }
                }
                "conv1d" => {
                    let d = dims(3)?;
                    LayerSpec::Conv1d {
                        out_channels: d[0],
                        in_channels: d[1],
                        kernel: d[2],
                        relu: rec.relu.unwrap_or(true),
                    }
                }
                "maxpool" => LayerSpec::MaxPool { width: dims(1)?[0] },
                "global_maxpool" => LayerSpec::GlobalMaxPool,
                "dense" => {
                    let d = dims(2)?;
                    LayerSpec::Dense {
                        outputs: d[0],
                        inputs: d[1],
                    }
                }
                "sigmoid" => LayerSpec::Sigmoid,
                other => return Err(Error::Input(format!("layer {i}: unknown kind {other:?}"))),
            };
            let group: Vec<Tensor> = spec
                .param_shapes()
                .into_iter()
                .enumerate()
                .map(|(k, shape)| {
                    let values = match k {
                        0 => rec.values.clone(),
                        _ => rec.bias.clone().unwrap_or_default(),
                    };
                    Tensor { shape, values }
                })
                .collect();
            if group.is_empty() && !rec.values.is_empty() {
                return Err(Error::Shape(format!("layer {i} ({}) has no parameters", rec.kind)));
            }
            specs.push(spec);
            params.push(group);
        }
        let arch = match file.arch.as_str() {
            "modelA" => {
                let num_tags = match specs.iter().rev().nth(1) {
                    Some(LayerSpec::Dense { outputs, .. }) => *outputs,
                    _ => return Err(Error::Shape("modelA checkpoint lacks a dense head".into())),
                };
                Arch::ModelA { num_tags }
            }
            "modelB" => Arch::ModelB,
            other => return Err(Error::Input(format!("unknown arch {other:?}"))),
        };
        let net = Network::from_parts(arch, specs, params, file.seed)?;
        if net.vocab_size() != file.vocab_size {
            return Err(Error::Shape(format!(
                "vocab_size {} disagrees with embedding rows {}",
                file.vocab_size,
                net.vocab_size()
            )));
        }
        Ok(net)
    }

    /// Serializes to the checkpoint JSON. Floats use shortest round-trip form,
    /// so reloading is bit-exact.
    pub fn to_checkpoint_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(json: &str) -> Result<Network> {
        let file: CheckpointFile = serde_json::from_str(json)?;
        Network::from_checkpoint(&file)
    }
}
