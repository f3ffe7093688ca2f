//! ZCA whitening: `x ↦ (x − μ) · U diag(1/√(λ + ε)) Uᵀ`, with `U Λ Uᵀ` the
//! eigendecomposition of the population covariance of the fitting set.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::Real;

pub const DEFAULT_ZCA_EPSILON: Real = 1e-5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZcaTransform {
    pub mean: Tensor,
    pub whitening_matrix: Tensor,
    pub epsilon: Real,
}

fn as_rows(samples: &Tensor) -> Result<(usize, usize)> {
    match samples.shape() {
        [n, d] => Ok((*n, *d)),
        [n, rest @ ..] if !rest.is_empty() => Ok((*n, rest.iter().product())),
        other => Err(Error::Dimension(format!(
            "ZCA expects N×D samples, got {other:?}"
        ))),
    }
}

pub fn zca_fit(samples: &Tensor, epsilon: Real) -> Result<ZcaTransform> {
    let (n, d) = as_rows(samples)?;
    if n < 2 {
        return Err(Error::Config(format!("ZCA needs at least 2 samples, got {n}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("ZCA epsilon must be non-negative, got {epsilon}")));
    }
    samples.ensure_finite("ZCA samples")?;

    let x = DMatrix::<Real>::from_row_slice(n, d, samples.data());
    let mean = x.row_mean();
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = (centered.transpose() * &centered) / n as Real;
    let eig = SymmetricEigen::new(cov);
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, Real::max);
    let smallest = eig.eigenvalues.iter().cloned().fold(Real::INFINITY, Real::min);
    if epsilon == 0.0 && smallest <= largest * 1e-12 {
        return Err(Error::Numeric(format!(
            "covariance is rank-deficient (smallest eigenvalue {smallest:e}); use a positive epsilon"
        )));
    }
    let scales = eig
        .eigenvalues
        .map(|l| 1.0 / (l.max(0.0) + epsilon).sqrt());
    let u = &eig.eigenvectors;
    let w = u * DMatrix::from_diagonal(&scales) * u.transpose();
    let w = (&w + w.transpose()) * 0.5;

    let whitening_matrix = Tensor::new(vec![d, d], w.transpose().as_slice().to_vec())?;
    whitening_matrix.ensure_finite("ZCA whitening matrix")?;
    Ok(ZcaTransform {
        mean: Tensor::new(vec![d], mean.iter().copied().collect())?,
        whitening_matrix,
        epsilon,
    })
}

impl ZcaTransform {
    pub fn features(&self) -> usize {
        self.mean.len()
    }

    /// Whitens `x`, which is either one sample or a leading batch of samples.
    /// The output keeps the input's shape.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let d = self.features();
        if x.len() % d.max(1) != 0 || x.is_empty() {
            return Err(Error::shapes("ZCA input vs transform", x.shape(), &[d]));
        }
        let n = x.len() / d;
        let xm = DMatrix::<Real>::from_row_slice(n, d, x.data());
        let mu = DMatrix::<Real>::from_row_slice(1, d, self.mean.data());
        let w = DMatrix::<Real>::from_row_slice(d, d, self.whitening_matrix.data());
        let mut centered = xm;
        for mut row in centered.row_iter_mut() {
            row -= &mu;
        }
        let out = centered * w;
        Tensor::new(x.shape().to_vec(), out.transpose().as_slice().to_vec())
    }
}

pub fn zca_apply(transform: &ZcaTransform, x: &Tensor) -> Result<Tensor> {
    transform.apply(x)
}
