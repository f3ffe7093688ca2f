//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is expanded from a
//! 64-bit key with SplitMix64. [`Rng::split`] derives a child key from the
//! parent key and a label without advancing the parent, so independent
//! consumers (initialization, feedback matrices, masks, shuffling, noise)
//! never perturb each other's draws. Integer and uniform sampling is done
//! here rather than through `rand`'s distribution machinery so the streams
//! stay fixed across library upgrades.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Real;

/// Well-known labels for [`Rng::split`].
pub mod streams {
    pub const INIT: u64 = 1;
    pub const FEEDBACK: u64 = 2;
    pub const MASK: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const SUBSET: u64 = 5;
    pub const NOISE_TRAIN: u64 = 6;
    pub const NOISE_TEST: u64 = 7;
    pub const DATA: u64 = 8;
}

#[derive(Debug, Clone)]
pub struct Rng {
    key: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self {
            key: seed,
            inner: ChaCha8Rng::from_seed(bytes),
        }
    }

    /// Independent child stream; does not advance `self`.
    pub fn split(&self, label: u64) -> Rng {
        let mut state = label ^ 0xD1B5_4A32_D192_ED03;
        let mixed = splitmix64(&mut state);
        let mut state = self.key ^ mixed;
        Rng::new(splitmix64(&mut state))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> Real {
        ((self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)) as Real
    }

    pub fn normal(&mut self) -> Real {
        let v: f64 = StandardNormal.sample(&mut self.inner);
        v as Real
    }

    pub fn gaussian(&mut self, mean: Real, std: Real) -> Real {
        mean + std * self.normal()
    }

    /// Uniform integer in `0..n` (multiply-shift; `n` must be positive).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct indices from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}
