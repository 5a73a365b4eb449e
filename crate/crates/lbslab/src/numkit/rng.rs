//! Deterministic randomness. One seeded generator is threaded through every
//! protocol and attack entry point; there is no ambient randomness anywhere
//! in the crate, so a transcript is fully reproducible from its seed.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded, platform-stable random stream (ChaCha20 keyed from a 64-bit seed).
///
/// Identical seed gives an identical stream on every platform and in every
/// run. The generator is single-owner: pass `&mut` down the call tree, never
/// share it.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Words consumed so far; identifies the stream position.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Independent child stream for sub-task `index`. Forking does not
    /// advance this generator, so batches indexed 0..n are reproducible
    /// regardless of evaluation order.
    pub fn fork(&self, index: u64) -> SeededRng {
        SeededRng::new(splitmix64(self.seed ^ splitmix64(index)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn fill_bytes(&mut self, buf: &mut [u8]) {
        self.inner.fill_bytes(buf);
    }

    /// Uniform integer in [0, 2^n_bits). Requires n_bits >= 1.
    pub fn rand_bits(&mut self, n_bits: u32) -> BigInt {
        assert!(n_bits >= 1, "rand_bits needs at least one bit");
        let n_bytes = (n_bits as usize).div_ceil(8);
        let mut buf = vec![0u8; n_bytes];
        self.inner.fill_bytes(&mut buf);
        let excess = (n_bytes * 8) as u32 - n_bits;
        buf[0] &= 0xFFu8 >> excess;
        BigInt::from_bytes_be(Sign::Plus, &buf)
    }

    /// Uniform integer in [0, bound) by rejection. Requires bound >= 1.
    pub fn rand_below(&mut self, bound: &BigInt) -> BigInt {
        assert!(bound >= &BigInt::one(), "rand_below needs a positive bound");
        if bound.is_one() {
            return BigInt::zero();
        }
        let nb = (bound - BigInt::one()).bits() as u32;
        loop {
            let cand = self.rand_bits(nb);
            if &cand < bound {
                return cand;
            }
        }
    }

    /// Uniform integer in [lo, hi], inclusive.
    pub fn rand_range_inclusive(&mut self, lo: &BigInt, hi: &BigInt) -> BigInt {
        assert!(lo <= hi);
        lo + self.rand_below(&(hi - lo + BigInt::one()))
    }

    /// Uniform u64 in [0, bound).
    pub fn rand_u64_below(&mut self, bound: u64) -> u64 {
        assert!(bound >= 1);
        // Rejection over the smallest covering power of two.
        let mask = u64::MAX >> (bound - 1).leading_zeros().min(63);
        loop {
            let v = self.next_u64() & mask;
            if v < bound {
                return v;
            }
        }
    }

    /// +1 or -1 with equal probability.
    pub fn rand_sign(&mut self) -> i8 {
        if self.next_u64() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rand_u64_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rand_bits_single_bit_in_range() {
        let mut rng = SeededRng::new(0);
        for _ in 0..64 {
            let v = rng.rand_bits(1);
            assert!(v == BigInt::zero() || v == BigInt::one());
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for bits in [5u32, 5, 64, 1, 127, 8] {
            assert_eq!(a.rand_bits(bits), b.rand_bits(bits));
        }
        let mut xs = [0u8, 1, 2, 3, 4, 5, 6, 7];
        let mut ys = xs;
        a.shuffle(&mut xs);
        b.shuffle(&mut ys);
        assert_eq!(xs, ys);
    }

    #[test]
    fn different_seeds_diverge() {
        let mut a = SeededRng::new(1);
        let mut b = SeededRng::new(2);
        assert_ne!(a.rand_bits(64), b.rand_bits(64));
    }

    #[test]
    fn forks_are_stable_and_independent() {
        let master = SeededRng::new(99);
        let mut c0 = master.fork(0);
        let mut c0_again = master.fork(0);
        let mut c1 = master.fork(1);
        assert_eq!(c0.rand_bits(64), c0_again.rand_bits(64));
        assert_ne!(c0.rand_bits(64), c1.rand_bits(64));
    }

    #[test]
    fn empirical_mean_of_byte_draws() {
        // Independent oracle: uniform over [0, 255] has mean 127.5 and
        // sigma_mean ~ 0.74 over 10^4 draws; [117, 138] is a wide gate.
        let mut rng = SeededRng::new(2024);
        let n = 10_000u32;
        let mut sum = 0u64;
        for _ in 0..n {
            let v = rng.rand_bits(8);
            sum += u64::try_from(v).unwrap();
        }
        let mean = sum as f64 / n as f64;
        assert!((117.0..=138.0).contains(&mean), "mean {mean} out of gate");
        assert!((mean - 127.5).abs() < 3.0, "mean {mean} too far from 127.5");
    }

    #[test]
    fn rand_below_covers_range_uniformly_enough() {
        let mut rng = SeededRng::new(5);
        let bound = BigInt::from(10);
        let mut seen = [0u32; 10];
        for _ in 0..1000 {
            let v = rng.rand_below(&bound);
            seen[u64::try_from(v).unwrap() as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 50));
    }
}
