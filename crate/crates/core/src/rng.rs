//! Counter-based splittable random keys.
//!
//! A [`RngKey`] is an immutable 128-bit value. Child keys are derived with
//! [`RngKey::split`], and a key is turned into a sequence of numbers with
//! [`RngKey::stream`]. Every random draw in a run is therefore a pure function
//! of `(seed, path of split indices, draw counter)`, which keeps results
//! independent of thread count and scheduling.

use rand::rand_core::{impls, RngCore};
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngKey {
    hi: u64,
    lo: u64,
}

impl RngKey {
    pub fn from_seed(seed: u64) -> Self {
        let hi = splitmix64(seed);
        RngKey {
            hi,
            lo: splitmix64(hi ^ 0xD1B5_4A32_D192_ED03),
        }
    }

    /// Child key `index`. `hi` is a bijection of `index` for a fixed parent,
    /// so distinct indices always give distinct children.
    pub fn split(self, index: u64) -> Self {
        let hi = splitmix64(self.hi ^ index);
        let lo = splitmix64(self.lo.wrapping_add(hi.rotate_left(17)) ^ index.wrapping_mul(GOLDEN));
        RngKey { hi, lo }
    }

    pub fn stream(self) -> RngStream {
        RngStream { key: self, counter: 0 }
    }

    pub fn as_u128(self) -> u128 {
        ((self.hi as u128) << 64) | self.lo as u128
    }

    /// Output block `counter` of this key.
    #[inline]
    fn block(self, counter: u64) -> u64 {
        splitmix64(splitmix64(self.hi ^ counter.wrapping_mul(GOLDEN)) ^ self.lo)
    }
}

/// Sequential view of a key's output blocks; implements [`RngCore`] so the
/// `rand` / `rand_distr` samplers can be used on it.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: RngKey,
    counter: u64,
}

impl RngStream {
    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 * n, irrelevant here.
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, self);
        mean + std * z
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = self.key.block(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn split_children_are_distinct() {
        let k = RngKey::from_seed(7);
        let children: HashSet<_> = (0..10_000).map(|i| k.split(i)).collect();
        assert_eq!(children.len(), 10_000);
        assert!(!children.contains(&k));
    }

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = {
            let mut s = RngKey::from_seed(1).split(3).split(9).stream();
            (0..8).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = RngKey::from_seed(1).split(3).split(9).stream();
            (0..8).map(|_| s.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut other = RngKey::from_seed(1).split(3).split(8).stream();
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn uniform_and_below_ranges() {
        let mut s = RngKey::from_seed(42).stream();
        let mut hits = [0usize; 5];
        for _ in 0..50_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            hits[s.below(5)] += 1;
        }
        for h in hits {
            assert!((9_000..11_000).contains(&h), "{hits:?}");
        }
    }

    #[test]
    fn normal_moments() {
        let mut s = RngKey::from_seed(5).stream();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.normal(1.0, 2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
        assert!((var.sqrt() - 2.0).abs() < 0.03, "{var}");
    }
}
