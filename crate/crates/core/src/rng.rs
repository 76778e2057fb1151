//! Reproducible random streams.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is filled
//! from a 64-bit seed by SplitMix64 (`SeedableRng::seed_from_u64` in
//! `rand_xoshiro`). Uniform variates on the open interval (0, 1) take the
//! top 53 bits of each output: `((x >> 11) + 0.5) * 2^-53`.
//!
//! Monte Carlo replications derive their own seed with [`derive_seed`], so
//! a replication's stream depends only on the master seed, the cell and
//! the replication index, never on which worker runs it.
//!
//! These algorithms are frozen; changing any of them changes every
//! regenerated critical-value table.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

pub fn stream(seed: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform draw on (0, 1), never returning either endpoint.
pub fn uniform_open01<R: RngCore>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in cell `cell_id` under `master`.
pub fn derive_seed(master: u64, cell_id: u64, rep: u64) -> u64 {
    mix64(mix64(mix64(master) ^ cell_id) ^ rep)
}
