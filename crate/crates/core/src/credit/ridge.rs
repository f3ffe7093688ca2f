//! Closed-form L2-regularized least-squares readout on one-hot targets.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{argmax, Tensor};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeClassifier {
    /// `classes × features`
    pub weights: Tensor,
    pub lambda: Real,
}

fn dims(t: &Tensor, what: &str) -> Result<(usize, usize)> {
    match t.shape() {
        [n, d] => Ok((*n, *d)),
        other => Err(Error::Dimension(format!("{what} must be 2-D, got {other:?}"))),
    }
}

/// In-place Cholesky solve of `A X = B` for symmetric positive definite `A`
/// (`d×d`) and `B` (`d×c`), both row-major. Fails when a pivot falls below
/// `1e-12` of the largest diagonal entry (`1000·ε` for `f32`).
fn cholesky_solve(a: &mut [Real], b: &mut [Real], d: usize, c: usize) -> Option<()> {
    let scale = (0..d).map(|i| a[i * d + i]).fold(0.0, Real::max);
    let tol = scale * (1e-12 as Real).max(Real::EPSILON * 1e3);
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        if !(diag > tol) {
            return None;
        }
        let ljj = diag.sqrt();
        a[j * d + j] = ljj;
        for i in j + 1..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = v / ljj;
        }
    }
    for col in 0..c {
        // L y = b
        for i in 0..d {
            let mut v = b[i * c + col];
            for k in 0..i {
                v -= a[i * d + k] * b[k * c + col];
            }
            b[i * c + col] = v / a[i * d + i];
        }
        // Lᵀ x = y
        for i in (0..d).rev() {
            let mut v = b[i * c + col];
            for k in i + 1..d {
                v -= a[k * d + i] * b[k * c + col];
            }
            b[i * c + col] = v / a[i * d + i];
        }
    }
    Some(())
}

/// Solves `(XᵀX + λI) Wᵀ = XᵀY`. An infinite `λ` yields all-zero weights.
pub fn ridge_fit(features: &Tensor, one_hot_labels: &Tensor, lambda: Real) -> Result<RidgeClassifier> {
    let (n, d) = dims(features, "features")?;
    let (ny, c) = dims(one_hot_labels, "labels")?;
    if n != ny {
        return Err(Error::shapes("features vs labels", features.shape(), one_hot_labels.shape()));
    }
    if n == 0 {
        return Err(Error::Config("ridge fit needs at least one sample".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("ridge lambda must be non-negative, got {lambda}")));
    }
    features.ensure_finite("ridge features")?;
    if lambda.is_infinite() {
        return Ok(RidgeClassifier {
            weights: Tensor::zeros(&[c, d]),
            lambda,
        });
    }
    let x = DMatrix::<Real>::from_row_slice(n, d, features.data());
    let y = DMatrix::<Real>::from_row_slice(n, c, one_hot_labels.data());
    let xt = x.transpose();
    let mut gram = &xt * &x;
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let rhs = &xt * &y;
    let mut a: Vec<Real> = gram.transpose().as_slice().to_vec();
    let mut b: Vec<Real> = rhs.transpose().as_slice().to_vec();
    if cholesky_solve(&mut a, &mut b, d, c).is_none() {
        let hint = if lambda == 0.0 { "; use lambda > 0" } else { "" };
        return Err(Error::Numeric(format!("ridge normal equations are singular{hint}")));
    }
    // b is Wᵀ (d×c); store W as c×d.
    let wt = Tensor::new(vec![d, c], b)?;
    Ok(RidgeClassifier {
        weights: wt.transpose2(),
        lambda,
    })
}

impl RidgeClassifier {
    pub fn classes(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn scores(&self, features: &Tensor) -> Result<Tensor> {
        let (_, d) = dims(features, "features")?;
        if d != self.weights.shape()[1] {
            return Err(Error::shapes("features vs readout", features.shape(), self.weights.shape()));
        }
        features.matmul(&self.weights.transpose2())
    }

    pub fn predict_one(&self, features: &Tensor) -> Result<usize> {
        let row = features.clone().reshape(&[1, features.len()])?;
        Ok(self.scores(&row)?.argmax())
    }

    /// Arg-max class per row; ties resolve to the lowest class index.
    pub fn predict(&self, features: &Tensor) -> Result<Vec<usize>> {
        let s = self.scores(features)?;
        let c = self.classes();
        Ok(s.data().chunks_exact(c).map(argmax).collect())
    }

    /// `‖X Wᵀ − Y‖² + λ‖W‖²`
    pub fn objective(&self, features: &Tensor, one_hot_labels: &Tensor) -> Result<Real> {
        let s = self.scores(features)?;
        let fit: Real = s.data().iter().zip(one_hot_labels.data()).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(fit + self.lambda * self.weights.data().iter().map(|w| w * w).sum::<Real>())
    }
}

pub fn ridge_predict(clf: &RidgeClassifier, features: &Tensor) -> Result<Vec<usize>> {
    clf.predict(features)
}
