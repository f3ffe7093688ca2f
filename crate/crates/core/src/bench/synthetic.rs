//! Desk-scale stand-in for CIFAR: 3×8×8 colour images of one of three line
//! shapes (horizontal, vertical, diagonal) drawn over a noisy background.

use crate::bench::dataset::{Dataset, Split};
use crate::error::Result;
use crate::numerics::{Rng, Tensor};
use crate::Real;

pub const SYNTHETIC_CLASSES: usize = 3;
pub const SYNTHETIC_SIDE: usize = 8;

fn draw(rng: &mut Rng, class: usize, out: &mut [Real]) {
    let s = SYNTHETIC_SIDE;
    let plane = s * s;
    for v in out.iter_mut() {
        *v = 0.35 * rng.uniform();
    }
    let color: [Real; 3] = std::array::from_fn(|_| 0.4 + 0.6 * rng.uniform());
    let len = 4 + rng.below(3);
    let mut cells = Vec::with_capacity(len);
    match class {
        0 => {
            let row = rng.below(s);
            let col = rng.below(s - len + 1);
            cells.extend((0..len).map(|i| (row, col + i)));
        }
        1 => {
            let col = rng.below(s);
            let row = rng.below(s - len + 1);
            cells.extend((0..len).map(|i| (row + i, col)));
        }
        _ => {
            let row = rng.below(s - len + 1);
            let col = rng.below(s - len + 1);
            if rng.below(2) == 0 {
                cells.extend((0..len).map(|i| (row + i, col + i)));
            } else {
                cells.extend((0..len).map(|i| (row + i, col + len - 1 - i)));
            }
        }
    }
    for (r, c) in cells {
        for (ch, &base) in color.iter().enumerate() {
            let v = base + 0.1 * (rng.uniform() - 0.5);
            out[ch * plane + r * s + c] = v.clamp(0.0, 1.0);
        }
    }
}

/// `per_class` samples of every class, in shuffled order.
pub fn synthetic_shapes(per_class: usize, seed: u64, split: Split) -> Result<Dataset> {
    let mut rng = Rng::new(seed);
    let n = per_class * SYNTHETIC_CLASSES;
    let mut labels: Vec<usize> = (0..n).map(|i| i % SYNTHETIC_CLASSES).collect();
    rng.shuffle(&mut labels);
    let d = 3 * SYNTHETIC_SIDE * SYNTHETIC_SIDE;
    let mut data = vec![0.0; n * d];
    for (i, &label) in labels.iter().enumerate() {
        draw(&mut rng, label, &mut data[i * d..(i + 1) * d]);
    }
    let images = Tensor::new(vec![n, 3, SYNTHETIC_SIDE, SYNTHETIC_SIDE], data)?;
    Dataset::new(images, labels, SYNTHETIC_CLASSES, split)
}

/// Train and test splits drawn from independent streams of `seed`.
pub fn synthetic_split(train_per_class: usize, test_per_class: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let root = Rng::new(seed);
    let train_seed = root.split(1).next_u64();
    let test_seed = root.split(2).next_u64();
    Ok((
        synthetic_shapes(train_per_class, train_seed, Split::Train)?,
        synthetic_shapes(test_per_class, test_seed, Split::Test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_in_range() {
        let ds = synthetic_shapes(20, 1, Split::Train).unwrap();
        assert_eq!(ds.len(), 60);
        assert!(ds.class_histogram().values().all(|&c| c == 20));
        assert!(ds.images.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn seeded() {
        assert_eq!(synthetic_shapes(5, 9, Split::Test).unwrap(), synthetic_shapes(5, 9, Split::Test).unwrap());
        assert_ne!(synthetic_shapes(5, 9, Split::Test).unwrap(), synthetic_shapes(5, 10, Split::Test).unwrap());
    }
}
