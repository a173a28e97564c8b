//! Principal component analysis by exact eigendecomposition of the
//! sample covariance.
//!
//! The eigensolver is a cyclic Jacobi iteration written here rather than
//! a LAPACK binding: at the dimensions this pipeline produces (≤ 600)
//! it is fast enough, and its fixed rotation order keeps model bundles
//! byte-identical across runs and thread counts.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Fitted projection: per-feature means, orthonormal component rows
/// (k × input dim), and non-increasing explained variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Array1<f64>,
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaProjection {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.components.ncols()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns eigenvalues (descending) and matching eigenvectors as rows.
fn jacobi_eigh(matrix: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let d = matrix.nrows();
    let mut a = matrix.clone();
    let mut v: Array2<f64> = Array2::eye(d);
    let frobenius: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frobenius.max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    s += a[(p, q)] * a[(p, q)];
                }
            }
            s.sqrt()
        };
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..d {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for i in 0..d {
                    let api = a[(p, i)];
                    let aqi = a[(q, i)];
                    a[(p, i)] = c * api - s * aqi;
                    a[(q, i)] = s * api + c * aqi;
                }
                for i in 0..d {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Array2::zeros((d, d));
    for (row, &i) in order.iter().enumerate() {
        for col in 0..d {
            vectors[(row, col)] = v[(col, i)];
        }
    }
    (values, vectors)
}

/// Fits a `k`-component projection on the rows of `data`.
///
/// Components are eigenvectors of the sample covariance (divisor n−1) in
/// descending eigenvalue order. Each component's sign is fixed by making
/// its largest-magnitude coordinate (first such, on ties) positive.
pub fn fit_pca(data: ArrayView2<f64>, k: usize) -> Result<PcaProjection> {
    let n = data.nrows();
    let d = data.ncols();
    if k == 0 {
        return Err(Error::Config("PCA needs at least one component".into()));
    }
    if !(k <= d && d <= n) {
        return Err(Error::Config(format!(
            "PCA requires k <= input dim <= sample count, got k={k}, dim={d}, n={n}"
        )));
    }
    let mean = data.mean_axis(Axis(0)).expect("nonempty");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let (values, vectors) = jacobi_eigh(&cov);
    let top = values[0].max(0.0);
    let rank = values.iter().filter(|&&v| v > top * 1e-12 && v > 0.0).count();
    if k > rank {
        return Err(Error::Numeric(format!(
            "requested {k} components but the covariance has effective rank {rank}"
        )));
    }
    let mut components = Array2::zeros((k, d));
    let mut explained = Vec::with_capacity(k);
    for row in 0..k {
        let mut comp = vectors.row(row).to_owned();
        let mut best = 0usize;
        for (i, &c) in comp.iter().enumerate() {
            if c.abs() > comp[best].abs() {
                best = i;
            }
        }
        if comp[best] < 0.0 {
            comp.mapv_inplace(|x| -x);
        }
        components.row_mut(row).assign(&comp);
        explained.push(values[row].max(0.0));
    }
    Ok(PcaProjection { mean, components, explained_variance: explained })
}

/// Projects rows of `data` onto the fitted components.
pub fn apply_pca(projection: &PcaProjection, data: ArrayView2<f64>) -> Result<Array2<f64>> {
    if data.ncols() != projection.input_dim() {
        return Err(Error::Numeric(format!(
            "projection expects {} features, data has {}",
            projection.input_dim(),
            data.ncols()
        )));
    }
    let centered = &data - &projection.mean;
    Ok(centered.dot(&projection.components.t()))
}

/// Largest absolute off-identity entry of `C·Cᵀ`; 0 for perfectly
/// orthonormal component rows.
pub fn orthonormality_defect(projection: &PcaProjection) -> f64 {
    let gram = projection.components.dot(&projection.components.t());
    let k = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}
