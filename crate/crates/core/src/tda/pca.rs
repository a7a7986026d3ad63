use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Centered data projected onto the components, `n × k`.
    pub projected: Matrix,
    /// Unit principal axes as rows, `k × d`, by descending variance.
    pub components: Matrix,
    /// Variance along each component (sample covariance eigenvalues).
    pub explained_variance: Vec<f64>,
    /// `explained_variance` over total variance; all zero for constant data.
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

impl Pca {
    /// Maps projected coordinates back to the original space.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.projected.rows();
        let d = self.components.cols();
        let mut out = Matrix::zeros(n, d);
        for i in 0..n {
            let row = out.row_mut(i);
            row.copy_from_slice(&self.mean);
            for (c, &p) in self.projected.row(i).iter().enumerate() {
                for (x, &w) in row.iter_mut().zip(self.components.row(c)) {
                    *x += p * w;
                }
            }
        }
        out
    }
}

/// Principal component analysis through the eigen-decomposition of the sample
/// covariance. Each component is flipped so its largest-magnitude entry is
/// positive (first such entry on ties), which fixes the orientation.
pub fn pca(points: &Matrix, k: usize) -> Result<Pca> {
    let (n, d) = (points.rows(), points.cols());
    if n < 2 {
        return Err(Error::Input(format!("PCA needs at least 2 points, got {n}")));
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::Config(format!("cannot keep {k} components of {n}x{d} data")));
    }
    if points.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite entry in PCA input".into()));
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(points.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = points.clone();
    for i in 0..n {
        for (x, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *x -= m;
        }
    }

    let mut cov = centered.gram();
    cov.as_mut_slice().iter_mut().for_each(|x| *x /= (n - 1) as f64);
    let (values, vectors) = symmetric_eigen(&cov)?;

    let mut components = Matrix::zeros(k, d);
    for c in 0..k {
        let v = vectors.row(c);
        let lead = v
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for (dst, x) in components.row_mut(c).iter_mut().zip(v) {
            *dst = sign * x;
        }
    }

    let mut projected = Matrix::zeros(n, k);
    for i in 0..n {
        for c in 0..k {
            projected[(i, c)] = crate::linalg::dot(centered.row(i), components.row(c));
        }
    }

    // Round-off can leave tiny negative eigenvalues on rank-deficient data.
    let explained_variance: Vec<f64> = values[..k].iter().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();

    Ok(Pca {
        projected,
        components,
        explained_variance,
        explained_variance_ratio,
        mean,
    })
}
