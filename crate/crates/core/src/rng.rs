//! Counter-based pseudo-random streams.
//!
//! Generators in this crate key an independent stream off `(seed, index)` so
//! that output never depends on thread count or iteration order. The mixing
//! function is the splitmix64 finalizer, which has full avalanche and is cheap
//! enough to call once per random decision.

const GOLDEN: u64 = 0x9E3779B9_7F4A7C15;
const STREAM_SALT: u64 = 0xD1B54A32_D192ED03;

/// splitmix64 finalizer. Bijective over u64 with full avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D_1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB_133111EB);
    z ^ (z >> 31)
}

/// Decorrelated 64-bit value for position `index` of the stream owned by
/// `seed`. Distinct `(seed, index)` pairs give statistically independent
/// outputs regardless of evaluation order.
#[inline]
pub fn keyed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN) ^ index.wrapping_mul(STREAM_SALT))
}

/// Maps 64 random bits to a double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[0, 1)` at position `index` of stream `seed`.
#[inline]
pub fn keyed_unit(seed: u64, index: u64) -> f64 {
    unit_f64(keyed(seed, index))
}

/// Sequential splitmix64 stream. `Stream::new(seed, index)` starts at a
/// decorrelated point, so streams for different indices can be advanced
/// independently (one per vertex, edge, or row) without coordination.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64, index: u64) -> Self {
        Stream {
            state: keyed(seed, index),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform integer in `0..n` via 128-bit multiply-shift. `n` must be
    /// nonzero.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform in `[-1, 1)`, the convention for random feature payloads.
    #[inline]
    pub fn next_symmetric(&mut self) -> f32 {
        (self.next_unit() * 2.0 - 1.0) as f32
    }
}
