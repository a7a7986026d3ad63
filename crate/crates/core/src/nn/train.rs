use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{bce_loss, evaluate, Metrics};
use super::network::{Gradients, Network};
use crate::error::{Error, Result};
use crate::text::EncodedText;

/// Encoded inputs with their target vectors (0/1 per output).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<EncodedText>,
    pub labels: Vec<Vec<f64>>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2_weight: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2_weight: 1e-5,
            early_stop_patience: 3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs == 0 || self.batch_size == 0 || self.early_stop_patience == 0 {
            return bad("epochs, batch_size and early_stop_patience must be positive".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be finite and >= 0", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("{name} {b} outside (0, 1)"));
            }
        }
        if !(self.epsilon > 0.0) || !(self.l2_weight >= 0.0) {
            return bad("epsilon must be positive and l2_weight non-negative".into());
        }
        Ok(())
    }
}

/// One row of the training history. Epoch 0 is the untrained network; later
/// rows report the mean mini-batch loss seen during that epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val: Option<Metrics>,
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Self {
            m: net.zero_gradients(),
            v: net.zero_gradients(),
            step: 0,
        }
    }

    fn update(&mut self, net: &mut Network, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step);
        let bc2 = 1.0 - cfg.beta2.powi(self.step);
        for (li, group) in net.params_mut().iter_mut().enumerate() {
            for (ti, tensor) in group.iter_mut().enumerate() {
                let g = &grads[li][ti].values;
                let m = &mut self.m[li][ti].values;
                let v = &mut self.v[li][ti].values;
                for k in 0..tensor.values.len() {
                    let gk = g[k] + cfg.l2_weight * tensor.values[k];
                    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
                    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
                    let m_hat = m[k] / bc1;
                    let v_hat = v[k] / bc2;
                    tensor.values[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
                }
            }
        }
    }
}

/// Mini-batch Adam with L2 weight decay. Batches are reshuffled every epoch from a
/// generator seeded by `cfg.seed`. Training stops once the monitored loss
/// (validation loss, or training loss when `val` is empty) fails to improve for
/// `early_stop_patience` epochs; the returned network is the best one seen,
/// including the untrained starting point.
pub fn train(
    net: &Network,
    train_set: &LabeledSet,
    val_set: &LabeledSet,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<EpochRecord>)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if train_set.labels.len() != train_set.len() || val_set.labels.len() != val_set.len() {
        return Err(Error::Shape("inputs and labels differ in length".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = net.clone();
    let mut adam = Adam::new(&current);

    let record = |net: &Network, epoch: usize, train_loss: Option<f64>| -> Result<(EpochRecord, f64)> {
        let train_loss = match train_loss {
            Some(l) => l,
            None => evaluate(net, train_set)?.bce_loss,
        };
        let val = if val_set.is_empty() {
            None
        } else {
            Some(evaluate(net, val_set)?)
        };
        let monitored = val.map_or(train_loss, |m| m.bce_loss);
        Ok((EpochRecord { epoch, train_loss, val }, monitored))
    };

    let (first, mut best_loss) = record(&current, 0, None)?;
    let mut history = vec![first];
    let mut best = current.clone();
    let mut stale = 0;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut running = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<EncodedText> = chunk.iter().map(|&i| train_set.inputs[i].clone()).collect();
            let labels: Vec<Vec<f64>> = chunk.iter().map(|&i| train_set.labels[i].clone()).collect();
            let (probs, cache) = current.forward(&inputs)?;
            running += bce_loss(&probs, &labels)? * chunk.len() as f64;
            let grads = current.backward(&cache, &labels)?;
            adam.update(&mut current, &grads, cfg);
        }
        if current.params().iter().flatten().flat_map(|t| &t.values).any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("parameters diverged in epoch {epoch}")));
        }

        let (rec, monitored) = record(&current, epoch, Some(running / train_set.len() as f64))?;
        history.push(rec);
        if monitored < best_loss {
            best_loss = monitored;
            best = current.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
        }
    }
    Ok((best, history))
}
