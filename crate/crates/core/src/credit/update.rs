//! Local weight-update rules.
//!
//! Dense weight matrices are laid out `out × in`, so every Δw here has one row
//! per post-synaptic unit.

use crate::error::{Error, Result};
use crate::numerics::{outer, Tensor};
use crate::Real;

/// `(Δw, Δb) = (−η e zᵀ, −η e)`.
pub fn weight_update_from_error(error: &Tensor, input: &Tensor, eta: Real) -> (Tensor, Tensor) {
    let mut dw = outer(error, input);
    dw.scale(-eta);
    let mut db = error.clone().reshape(&[error.len()]).expect("flat error");
    db.scale(-eta);
    (dw, db)
}

/// Plain Hebbian growth: `Δw_ji = η z_j x_i`.
pub fn hebbian_vanilla_update(input: &Tensor, output: &Tensor, eta: Real) -> Tensor {
    let mut dw = outer(output, input);
    dw.scale(eta);
    dw
}

/// Instar rule: `Δw_ji = η z_j (x_i − w_ji)`.
pub fn instar_update(input: &Tensor, output: &Tensor, weights: &Tensor, eta: Real) -> Result<Tensor> {
    let (m, n) = (output.len(), input.len());
    if weights.len() != m * n {
        return Err(Error::Dimension(format!(
            "instar weights {:?} do not match {m} outputs × {n} inputs",
            weights.shape()
        )));
    }
    let x = input.data();
    let w = weights.data();
    let mut dw = Vec::with_capacity(m * n);
    for (j, &z) in output.data().iter().enumerate() {
        let row = &w[j * n..(j + 1) * n];
        dw.extend(row.iter().zip(x).map(|(&wji, &xi)| eta * z * (xi - wji)));
    }
    Tensor::new(vec![m, n], dw)
}

/// Triangle response `max(0, a_f − mean(a))` over the `F` units at one site,
/// keeping only the `k` largest responses (ties to the lower index).
pub fn kwta_triangle(pre_activations: &[Real], k: usize) -> Result<Vec<Real>> {
    let f = pre_activations.len();
    if k == 0 || k > f {
        return Err(Error::Config(format!("k-WTA needs 1 ≤ k ≤ {f}, got {k}")));
    }
    let mean = pre_activations.iter().sum::<Real>() / f as Real;
    let mut t: Vec<Real> = pre_activations.iter().map(|&a| (a - mean).max(0.0)).collect();
    if k < f {
        let mut order: Vec<usize> = (0..f).collect();
        order.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
        for &loser in &order[k..] {
            t[loser] = 0.0;
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq6_hand_case() {
        let (dw, db) = weight_update_from_error(&Tensor::from_vec(vec![1.0, -1.0]), &Tensor::from_vec(vec![2.0]), 0.5);
        assert_eq!(dw.shape(), &[2, 1]);
        assert_eq!(dw.data(), &[-1.0, 1.0]);
        assert_eq!(db.data(), &[-0.5, 0.5]);
    }

    #[test]
    fn zero_rate_or_error_gives_no_update() {
        let e = Tensor::from_vec(vec![0.3, -2.0]);
        let z = Tensor::from_vec(vec![1.0, 4.0, -1.0]);
        assert!(weight_update_from_error(&e, &z, 0.0).0.data().iter().all(|&v| v == 0.0));
        assert!(weight_update_from_error(&Tensor::zeros(&[2]), &z, 0.7).0.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanilla_hand_case() {
        let dw = hebbian_vanilla_update(&Tensor::from_vec(vec![3.0]), &Tensor::from_vec(vec![2.0]), 0.1);
        assert!((dw.data()[0] - 0.6).abs() < 1e-12);
        let dw0 = hebbian_vanilla_update(&Tensor::from_vec(vec![3.0]), &Tensor::from_vec(vec![0.0]), 0.1);
        assert_eq!(dw0.data(), &[0.0]);
    }

    #[test]
    fn instar_hand_case_and_fixed_point() {
        let x = Tensor::from_vec(vec![1.0]);
        let dw = instar_update(&x, &Tensor::from_vec(vec![1.0]), &Tensor::from_vec(vec![0.5]), 0.1).unwrap();
        assert!((dw.data()[0] - 0.05).abs() < 1e-12);
        let w = Tensor::from_vec(vec![0.3, -0.7, 2.0]);
        let fixed = instar_update(&w, &Tensor::from_vec(vec![0.9]), &w, 0.4).unwrap();
        assert!(fixed.data().iter().all(|&v| v == 0.0));
        let silent = instar_update(&x, &Tensor::from_vec(vec![0.0]), &Tensor::from_vec(vec![0.5]), 0.1).unwrap();
        assert_eq!(silent.data(), &[0.0]);
    }

    #[test]
    fn triangle_top_one() {
        assert_eq!(kwta_triangle(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), vec![0.0, 0.0, 0.0, 1.5]);
    }

    #[test]
    fn triangle_without_competition() {
        assert_eq!(kwta_triangle(&[1.0, 2.0, 3.0, 4.0], 4).unwrap(), vec![0.0, 0.0, 0.5, 1.5]);
    }

    #[test]
    fn triangle_equal_inputs_silent() {
        assert_eq!(kwta_triangle(&[0.7; 5], 2).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn triangle_k_range() {
        assert!(matches!(kwta_triangle(&[1.0, 2.0], 0), Err(Error::Config(_))));
        assert!(matches!(kwta_triangle(&[1.0, 2.0], 3), Err(Error::Config(_))));
    }
}
