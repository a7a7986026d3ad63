//! 1-D convolutional text classifiers built from scratch.
//!
//! Two topologies are provided: [`Arch::ModelA`], a multilabel tagger
//! (embedding, two convolutions, global max-pool, dense head), and
//! [`Arch::ModelB`], a binary topic detector (embedding, four convolutions with
//! two intermediate max-pools, global max-pool, dense head). Both end in a
//! sigmoid and train on mean binary cross-entropy with Adam.

mod checkpoint;
mod classify;
mod layers;
mod metrics;
mod network;
mod train;

pub use checkpoint::CHECKPOINT_VERSION;
pub use classify::{labeled_set, score, topic_filter, TopicModel, DEFAULT_TOPIC_THRESHOLD};
pub use layers::{conv1d_backward, conv1d_forward, Conv1dGrads};
pub use metrics::{bce_loss, evaluate, Metrics, BCE_EPSILON};
pub use network::{
    init_network, init_network_with, Arch, ArchConfig, ForwardCache, Gradients, LayerSpec, Network,
    Tensor,
};
pub use train::{train, EpochRecord, LabeledSet, TrainConfig};
