//! Per-class random streams.
//!
//! Version 1 of the stream derivation, frozen:
//!
//! 1. `stream = splitmix64(splitmix64(seed) ^ fnv1a64(label_utf8))`
//! 2. the 32-byte ChaCha key is the first four outputs of the SplitMix64
//!    generator started at `stream`, each written little-endian
//! 3. the generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`)
//! 4. bounded integers use Lemire's multiply-and-reject method on `next_u64`
//!
//! Streams depend only on `(seed, label)`, so classes can be processed in
//! any order or in parallel without changing the output.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::{fnv1a64, splitmix64};

pub const STREAM_VERSION: u32 = 1;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn stream_seed(seed: u64, label: &str) -> u64 {
    splitmix64(splitmix64(seed) ^ fnv1a64(label.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct ClassRng(ChaCha8Rng);

impl ClassRng {
    pub fn for_class(seed: u64, label: &str) -> Self {
        Self::from_stream(stream_seed(seed, label))
    }

    pub fn from_stream(stream: u64) -> Self {
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            // splitmix64 adds the gamma itself, so this walks the standard sequence.
            let state = stream.wrapping_add(GOLDEN_GAMMA.wrapping_mul(i as u64));
            chunk.copy_from_slice(&splitmix64(state).to_le_bytes());
        }
        Self(ChaCha8Rng::from_seed(key))
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        let mut m = u128::from(self.0.next_u64()) * u128::from(n);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = u128::from(self.0.next_u64()) * u128::from(n);
            }
        }
        (m >> 64) as usize
    }
}

impl RngCore for ClassRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
