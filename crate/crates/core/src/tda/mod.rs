//! Mapper graphs of topic-positive documents.
//!
//! Points are tag-probability vectors, the lens is their PCA projection, the
//! cover is an overlapping grid over the lens and clusters come from
//! single-linkage inside each cover bin. Nodes sharing a document are joined.

mod cover;
mod graph;
mod pca;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use cover::{build_cover, cluster_bin, dimension_intervals, Bin, CoverConfig, Dsu};
pub use graph::{
    cycle_rank, export_graph, graph_components, node_color, node_width, Edge, GraphFormat, MapperGraph, Node,
    RAMP_COLD, RAMP_WARM,
};
pub use pca::{pca, Pca};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{Arch, TopicModel};

pub const DEFAULT_LENS_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Matrix,
    pub doc_ids: Vec<String>,
    /// Topic probability per point.
    pub attributes: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Matrix, doc_ids: Vec<String>, attributes: Vec<f64>) -> Result<Self> {
        let n = points.rows();
        if doc_ids.len() != n || attributes.len() != n {
            return Err(Error::Shape(format!(
                "{n} points, {} ids, {} attributes",
                doc_ids.len(),
                attributes.len()
            )));
        }
        if points.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("point cloud has non-finite entries".into()));
        }
        if let Some(a) = attributes.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Input(format!("attribute {a} outside [0, 1]")));
        }
        Ok(Self {
            points,
            doc_ids,
            attributes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One row per document holding model A's tag probabilities; the attribute is
/// model B's topic probability.
pub fn tag_vectors(corpus: &Corpus, model_a: &TopicModel, model_b: &TopicModel) -> Result<PointCloud> {
    if !matches!(model_a.arch(), Arch::ModelA { .. }) {
        return Err(Error::Input("tag vectors need a multilabel (modelA) network".into()));
    }
    let rows = model_a.score_corpus(corpus)?;
    let attributes = model_b.topic_probabilities(corpus)?;
    let width = model_a.network.output_width();
    let points = Matrix::from_vec(rows.len(), width, rows.concat())?;
    let ids = corpus.documents().iter().map(|d| d.id.clone()).collect();
    PointCloud::new(points, ids, attributes)
}

/// Full Mapper pipeline. The lens keeps `min(lens_dim, n, d)` principal
/// components; clustering runs in lens space. Node ids follow bin order, then
/// cluster order within a bin.
pub fn mapper(cloud: &PointCloud, cfg: &CoverConfig, lens_dim: usize) -> Result<MapperGraph> {
    cfg.validate()?;
    if lens_dim == 0 {
        return Err(Error::Config("lens_dim must be at least 1".into()));
    }
    let n = cloud.len();
    if n == 0 {
        return Ok(MapperGraph::default());
    }
    let lens = if n == 1 {
        Matrix::zeros(1, 1)
    } else {
        let k = lens_dim.min(n).min(cloud.points.cols());
        pca(&cloud.points, k)?.projected
    };

    let bins = build_cover(&lens, cfg)?;
    let clusters: Vec<Vec<Vec<usize>>> = bins.par_iter().map(|b| cluster_bin(&lens, &b.members)).collect();

    let mut nodes = Vec::new();
    let mut node_rows: Vec<Vec<usize>> = Vec::new();
    for rows in clusters.into_iter().flatten() {
        let mean = rows.iter().map(|&r| cloud.attributes[r]).sum::<f64>() / rows.len() as f64;
        nodes.push(Node {
            id: nodes.len(),
            members: rows.iter().map(|&r| cloud.doc_ids[r].clone()).collect(),
            size: rows.len(),
            mean_attribute: mean,
        });
        node_rows.push(rows);
    }

    // Count shared rows per node pair through a row -> nodes index.
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, rows) in node_rows.iter().enumerate() {
        for &r in rows {
            by_row[r].push(id);
        }
    }
    let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for ids in &by_row {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                *shared.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
    }
    let edges = shared
        .into_iter()
        .map(|((node_a, node_b), shared_count)| Edge {
            node_a,
            node_b,
            shared_count,
        })
        .collect();
    Ok(MapperGraph { nodes, edges })
}
