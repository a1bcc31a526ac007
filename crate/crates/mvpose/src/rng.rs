//! Seeded random sampling helpers.
//!
//! Everything stochastic in the crate draws from a [`ChaCha8Rng`] whose seed
//! is derived with [`mix_seed`] from a user seed plus stream indices (record
//! index, frame index, pose bits). Derived streams keep results independent
//! of evaluation order, so parallel and sequential runs produce identical
//! bytes.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mix a base seed with stream identifiers into a new sub-seed.
pub fn mix_seed(base: u64, words: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ 0x517c_c1b7_2722_0a95);
    for &w in words {
        h = splitmix64(h ^ w);
    }
    h
}

/// Hash a byte slice to 64 bits (used for config digests).
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for chunk in bytes.chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(w));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in [0, 1) with 53 bits of precision.
pub fn uniform_01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform sample in [lo, hi).
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform_01(rng)
}

/// Uniform integer in [0, n] inclusive.
pub fn uniform_u32_inclusive(rng: &mut impl RngCore, n: u32) -> u32 {
    (uniform_01(rng) * (n as f64 + 1.0)) as u32
}

/// Standard normal via Box-Muller (one variate per two uniform draws, so the
/// draw count per call is fixed and streams stay alignment-stable).
pub fn normal(rng: &mut impl RngCore, mean: f64, sigma: f64) -> f64 {
    let u1 = uniform_01(rng);
    let u2 = uniform_01(rng);
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    mean + sigma * r * (std::f64::consts::TAU * u2).cos()
}

/// Uniform direction on the unit sphere (three normals, normalized).
pub fn unit_axis(rng: &mut impl RngCore) -> [f64; 3] {
    loop {
        let x = normal(rng, 0.0, 1.0);
        let y = normal(rng, 0.0, 1.0);
        let z = normal(rng, 0.0, 1.0);
        let n = (x * x + y * y + z * z).sqrt();
        if n > 1e-12 {
            return [x / n, y / n, z / n];
        }
    }
}
