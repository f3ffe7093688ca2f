use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::Real;

pub fn one_hot(class: usize, classes: usize) -> Tensor {
    let mut t = Tensor::zeros(&[classes]);
    t.data_mut()[class] = 1.0;
    t
}

/// Numerically stable softmax.
pub fn softmax(scores: &Tensor) -> Tensor {
    let max = scores.data().iter().cloned().fold(Real::NEG_INFINITY, Real::max);
    let exp = scores.map(|s| (s - max).exp());
    let total = exp.sum();
    exp.map(|e| e / total)
}

fn check(scores: &Tensor, target: &Tensor) -> Result<()> {
    if scores.shape() != target.shape() {
        return Err(Error::shapes("scores vs target", scores.shape(), target.shape()));
    }
    scores.ensure_finite("class scores")?;
    let ones = target.data().iter().filter(|&&v| v == 1.0).count();
    let zeros = target.data().iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || ones + zeros != target.len() {
        return Err(Error::Config("target is not one-hot".into()));
    }
    Ok(())
}

/// `−log softmax(scores)[target]`
pub fn cross_entropy(scores: &Tensor, one_hot_target: &Tensor) -> Result<Real> {
    check(scores, one_hot_target)?;
    let max = scores.data().iter().cloned().fold(Real::NEG_INFINITY, Real::max);
    let log_total = scores.data().iter().map(|s| (s - max).exp()).sum::<Real>().ln() + max;
    Ok(log_total - scores.dot(one_hot_target))
}

/// Error after the final layer: `softmax(scores) − target`.
pub fn loss_grad_softmax_ce(scores: &Tensor, one_hot_target: &Tensor) -> Result<Tensor> {
    check(scores, one_hot_target)?;
    softmax(scores).zip_map(one_hot_target, |p, t| p - t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scores() {
        let e = loss_grad_softmax_ce(&Tensor::full(&[10], 0.3), &one_hot(0, 10)).unwrap();
        assert!((e.data()[0] + 0.9).abs() < 1e-12);
        for &v in &e.data()[1..] {
            assert!((v - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_correct_prediction() {
        let scores = one_hot(2, 5).map(|v| v * 1e3);
        let e = loss_grad_softmax_ce(&scores, &one_hot(2, 5)).unwrap();
        assert!(e.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[cfg(not(feature = "f32"))]
    #[test]
    fn matches_finite_difference_of_cross_entropy() {
        let scores = Tensor::from_vec(vec![0.3, -1.2, 2.5, 0.0, 0.7]);
        let target = one_hot(3, 5);
        let e = loss_grad_softmax_ce(&scores, &target).unwrap();
        let h = 1e-6;
        for i in 0..5 {
            let mut up = scores.clone();
            up.data_mut()[i] += h;
            let mut down = scores.clone();
            down.data_mut()[i] -= h;
            let fd = (cross_entropy(&up, &target).unwrap() - cross_entropy(&down, &target).unwrap()) / (2.0 * h);
            let g = e.data()[i];
            let rel = (fd - g).abs() / 1.0_f64.max(fd.abs()).max(g.abs());
            assert!(rel < 1e-6, "component {i}: {fd} vs {g}");
        }
    }

    #[test]
    fn rejects_non_finite_and_non_one_hot() {
        let bad = Tensor::from_vec(vec![Real::NAN, 0.0]);
        assert!(matches!(loss_grad_softmax_ce(&bad, &one_hot(0, 2)), Err(Error::Numeric(_))));
        let target = Tensor::from_vec(vec![0.5, 0.5]);
        assert!(matches!(loss_grad_softmax_ce(&Tensor::zeros(&[2]), &target), Err(Error::Config(_))));
    }
}
