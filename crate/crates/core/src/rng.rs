//! Counter-based, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by a 256-bit key. Child
//! streams are keyed by hashing `(parent key, purpose tag, task index)`, so
//! the values a task sees depend only on where it sits in the task tree and
//! never on which thread ran it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn expand_key(words: [u64; 4]) -> [u8; 32] {
    let mut key = [0u8; 32];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    key
}

/// A single-owner random stream. Use [`RandomStream::derive`] to hand
/// independent streams to parallel work units.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: [u64; 4],
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Root stream for a master seed.
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let key = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Self::from_key(key)
    }

    fn from_key(key: [u64; 4]) -> Self {
        Self {
            key,
            rng: ChaCha8Rng::from_seed(expand_key(key)),
        }
    }

    /// Child stream for `(tag, index)`. Independent of how much of `self`
    /// has been consumed.
    pub fn derive(&self, tag: &str, index: u64) -> Self {
        let mut state = self.key[0] ^ fnv1a(tag).rotate_left(17) ^ index.wrapping_mul(GOLDEN);
        let mut key = [0u64; 4];
        for (i, k) in key.iter_mut().enumerate() {
            state ^= self.key[i];
            *k = splitmix64(&mut state);
        }
        Self::from_key(key)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased uniform integer in `0..bound` (Lemire's method).
    #[inline]
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let bound = bound as u64;
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.rng.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derive_ignores_parent_consumption() {
        let root = RandomStream::new(7);
        let mut used = root.clone();
        for _ in 0..13 {
            used.next_u64();
        }
        let mut c1 = root.derive("rep", 3);
        let mut c2 = used.derive("rep", 3);
        assert_eq!(c1.next_u64(), c2.next_u64());
    }

    #[test]
    fn children_differ_by_tag_and_index() {
        let root = RandomStream::new(7);
        let a = root.derive("rep", 0).next_u64();
        let b = root.derive("rep", 1).next_u64();
        let c = root.derive("tree", 0).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut r = RandomStream::new(1);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[r.below(7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn uniform_moments() {
        let mut r = RandomStream::new(99);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / 12.0 / n as f64).sqrt());
        assert!((var - 1.0 / 12.0).abs() < 1e-3);
    }
}
