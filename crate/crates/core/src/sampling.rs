//! Reproducible randomness: low-discrepancy point sets and counter-based
//! normal streams.

use alloc::vec::Vec;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// The additive recurrence `frac(shift + n * alpha)` with the generalized
/// golden ratio, randomly rotated by a seed.
#[derive(Clone, Debug)]
pub struct QuasiRandom {
    alphas: Vec<f64>,
    shift: Vec<f64>,
    index: u64,
}

impl QuasiRandom {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0);
        // phi_d is the positive root of x^(d+1) = x + 1.
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dimension as f64 + 1.0));
        }
        let alphas = (1..=dimension).map(|k| phi.powi(-(k as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dimension).map(|_| unit_f64(rng.next_u64())).collect();
        Self {
            alphas,
            shift,
            index: 1,
        }
    }

    pub fn dimension(&self) -> usize {
        self.alphas.len()
    }

    /// Next point of `[0, 1)^d`.
    pub fn next_point(&mut self) -> Vec<f64> {
        let n = self.index as f64;
        self.index += 1;
        self.alphas
            .iter()
            .zip(&self.shift)
            .map(|(a, s)| (s + n * a).fract())
            .collect()
    }
}

impl Iterator for QuasiRandom {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}

#[inline]
pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent, reproducible generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
