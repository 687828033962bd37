//! Portable seeded randomness.
//!
//! Every randomized stage draws from [`SeededRng`], a thin wrapper over
//! ChaCha8 that only exposes sampling routines built from `u64` draws and
//! `libm` math, so a given seed yields the same stream on every platform.
//!
//! Stage seeds are derived from one master seed with [`derive_seed`]:
//! `seed_stage = splitmix64(master ^ splitmix64(stage_constant))`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a fixed per-stage constant.
pub fn derive_seed(master: u64, stage_constant: u64) -> u64 {
    splitmix64(master ^ splitmix64(stage_constant))
}

/// Fixed per-stage constants used by the pipeline.
pub mod stage {
    pub const GENERATE: u64 = 0x4745_4E45_5241_5445; // "GENERATE"
    pub const SPLIT: u64 = 0x5350_4C49_5400_0001;
    pub const VALIDATION: u64 = 0x5641_4C49_4400_0002;
    pub const SMOTE: u64 = 0x534D_4F54_4500_0003;
    pub const CLASSIFIERS: u64 = 0x434C_4153_5300_0004;
    pub const DETECTOR: u64 = 0x4445_5445_4354_0005;
    pub const CLUSTER: u64 = 0x434C_5553_5400_0006;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Child generator for an indexed sub-task (a tree, a restart, ...).
    pub fn for_index(seed: u64, index: u64) -> Self {
        Self::new(derive_seed(seed, index.wrapping_add(1)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)` without modulo bias. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
    }

    /// Log-normal with the given median and log-space standard deviation.
    pub fn log_normal(&mut self, median: f64, sigma: f64) -> f64 {
        median * libm::exp(sigma * self.normal())
    }

    /// Picks an index with probability proportional to `weights`.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut target = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                return i;
            }
            target -= w;
        }
        weights.len() - 1
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        let k = k.min(n);
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn stage_seeds_are_independent() {
        assert_ne!(derive_seed(42, stage::SPLIT), derive_seed(42, stage::SMOTE));
        assert_eq!(derive_seed(42, stage::SPLIT), derive_seed(42, stage::SPLIT));
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = SeededRng::new(1);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = SeededRng::new(3);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[r.below(5) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }

    #[test]
    fn sample_indices_distinct() {
        let mut r = SeededRng::new(9);
        let mut s = r.sample_indices(50, 20);
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 20);
    }
}
