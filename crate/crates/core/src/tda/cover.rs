use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn d_intervals() -> usize {
    4
}
fn d_overlap() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    #[serde(default = "d_intervals")]
    pub intervals_per_dim: usize,
    /// Overlap between consecutive intervals as a fraction of the interval
    /// width. Zero gives a cover whose bins only touch at their boundaries.
    #[serde(default = "d_overlap")]
    pub overlap_fraction: f64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self {
            intervals_per_dim: d_intervals(),
            overlap_fraction: d_overlap(),
        }
    }
}

impl CoverConfig {
    pub fn with_intervals(self, intervals_per_dim: usize) -> Self {
        Self {
            intervals_per_dim,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals_per_dim == 0 {
            return Err(Error::Config("intervals_per_dim must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap_fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        Ok(())
    }
}

/// One cover element: its interval index per dimension and the rows inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bin {
    pub index: Vec<usize>,
    pub members: Vec<usize>,
}

/// Closed intervals covering one lens dimension.
pub fn dimension_intervals(min: f64, max: f64, intervals: usize, overlap: f64, degenerate: bool) -> Vec<(f64, f64)> {
    if degenerate || intervals == 1 {
        return vec![(min, max)];
    }
    let w = (max - min) / intervals as f64;
    let pad = overlap * w / 2.0;
    (0..intervals)
        .map(|j| {
            // Pin the outer edges to the data range so rounding in `j·w` never
            // drops the extreme points.
            let lo = if j == 0 { min } else { min + j as f64 * w };
            let hi = if j + 1 == intervals { max } else { min + (j + 1) as f64 * w };
            (lo - pad, hi + pad)
        })
        .collect()
}

/// Overlapping hyper-rectangle cover of the lens.
///
/// Each dimension's `[min, max]` is cut into equal intervals, each widened by
/// `overlap_fraction · width / 2` on both sides. Bins are Cartesian products
/// enumerated with the first dimension most significant; empty bins are
/// dropped. A dimension whose spread is negligible next to the widest one
/// (≤ 1e-9 of it) gets a single interval so rounding noise is not split.
pub fn build_cover(lens: &Matrix, cfg: &CoverConfig) -> Result<Vec<Bin>> {
    cfg.validate()?;
    let (n, k) = (lens.rows(), lens.cols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let bounds: Vec<(f64, f64)> = (0..k)
        .map(|c| {
            let col = lens.column(c);
            (
                col.iter().copied().fold(f64::INFINITY, f64::min),
                col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        })
        .collect();
    let widest = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let per_dim: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let degenerate = hi - lo <= 1e-9 * widest;
            dimension_intervals(lo, hi, cfg.intervals_per_dim, cfg.overlap_fraction, degenerate)
        })
        .collect();
    let total: usize = per_dim.iter().map(Vec::len).product();

    let mut bins = Vec::new();
    for flat in 0..total {
        let mut index = vec![0; k];
        let mut rest = flat;
        for c in (0..k).rev() {
            index[c] = rest % per_dim[c].len();
            rest /= per_dim[c].len();
        }
        let members: Vec<usize> = (0..n)
            .filter(|&i| {
                (0..k).all(|c| {
                    let (lo, hi) = per_dim[c][index[c]];
                    let x = lens[(i, c)];
                    x >= lo && x <= hi
                })
            })
            .collect();
        if !members.is_empty() {
            bins.push(Bin { index, members });
        }
    }
    Ok(bins)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Single-linkage clusters of `rows` (indices into `points`).
///
/// The cut height comes from a histogram of all pairwise distances with
/// `⌈√pairs⌉` equal bins over `[min, max]`: the left edge of the first empty
/// bin, or the maximum distance (one cluster) when no bin is empty. Clusters
/// are returned with members ascending, ordered by their first member.
pub fn cluster_bin(points: &Matrix, rows: &[usize]) -> Vec<Vec<usize>> {
    let m = rows.len();
    if m <= 1 {
        return if m == 1 { vec![rows.to_vec()] } else { Vec::new() };
    }
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in (a + 1)..m {
            pairs.push((distance(points.row(rows[a]), points.row(rows[b])), a, b));
        }
    }
    let dmin = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let dmax = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut cut = dmax;
    if dmax > dmin {
        let nbins = (pairs.len() as f64).sqrt().ceil() as usize;
        let width = (dmax - dmin) / nbins as f64;
        let mut hist = vec![0usize; nbins];
        for p in &pairs {
            let b = (((p.0 - dmin) / width) as usize).min(nbins - 1);
            hist[b] += 1;
        }
        if let Some(first_empty) = hist.iter().position(|&c| c == 0) {
            cut = dmin + first_empty as f64 * width;
        }
    }

    let mut dsu = Dsu::new(m);
    for &(d, a, b) in &pairs {
        if d <= cut {
            dsu.union(a, b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for a in 0..m {
        let root = dsu.find(a);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(rows[a]);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

/// Disjoint-set union with path halving and union by size.
#[derive(Debug, Clone)]
pub struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}
