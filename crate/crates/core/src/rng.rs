//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! run seed, with the 64-bit stream id derived from `(purpose, replicate, k)`.
//! The output is therefore a pure function of the seed and the draw's role,
//! independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Name of the generator, recorded in every output header.
pub const GENERATOR_NAME: &str = "chacha8";

/// Role of a random stream. The discriminant occupies the top byte of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Design = 1,
    Error = 2,
    Direction = 3,
    Fmri = 4,
    Misc = 5,
}

/// Generator for `(purpose, replicate, k)`; `replicate < 2^36` and `k < 2^20`.
pub fn stream(seed: u64, purpose: Purpose, replicate: u64, k: u64) -> ChaCha8Rng {
    debug_assert!(replicate < 1 << 36 && k < 1 << 20);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = ((purpose as u64) << 56) | ((replicate & ((1 << 36) - 1)) << 20) | (k & ((1 << 20) - 1));
    rng.set_stream(id);
    rng
}

/// `len` independent standard normal draws.
pub fn normals<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}
