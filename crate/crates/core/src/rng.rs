//! Deterministic random streams.
//!
//! Every random quantity of a Monte Carlo trial is drawn from its own ChaCha8
//! stream. The key is derived from the master seed and the sweep point, the
//! 64-bit stream id from the trial index and the [`Stream`] role, so any
//! trial can be replayed in isolation and the worker count never changes a
//! result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Role of a random stream inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Channel = 0,
    Reference = 1,
    Noise1 = 2,
    Noise2 = 3,
    Bits = 4,
}

const STREAM_BITS: u32 = 3;

/// SplitMix64 finaliser, used to decorrelate seeds derived from small integers.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep point `point_index` under `master_seed`.
pub fn point_seed(master_seed: u64, point_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(point_index.wrapping_add(1)))
}

/// Generator for `stream` of trial `trial_index`.
pub fn trial_rng(seed: u64, trial_index: u64, stream: Stream) -> ChaCha8Rng {
    assert!(
        trial_index < 1 << (64 - STREAM_BITS),
        "trial index {trial_index} out of range"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial_index << STREAM_BITS) | stream as u64);
    rng
}
