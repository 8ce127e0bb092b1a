//! Seed plumbing.
//!
//! Every random quantity in an episode is drawn from a ChaCha8 generator keyed
//! by the episode seed and a stream identifier, so the consumers never share a
//! generator and adding draws to one consumer cannot perturb another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type BenchRng = ChaCha8Rng;

/// Independent consumers of randomness within one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Dataset shuffling and synthetic environment draws.
    Data = 1,
    /// Network initialisation.
    Init = 2,
    /// Action selection (posterior samples, ε draws, ensemble member choice).
    Select = 3,
    /// Minibatch ordering during training.
    Train = 4,
    /// Bootstrap inclusion decisions.
    Bootstrap = 5,
    /// Reward noise.
    Noise = 6,
}

/// Generator for `stream`, sub-indexed by `index` (e.g. ensemble member).
pub fn stream_rng(seed: u64, stream: Stream, index: u32) -> BenchRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | index as u64);
    rng
}

/// Seed for repeat `repeat` of an experiment with base seed `base`.
pub fn episode_seed(base: u64, repeat: usize) -> u64 {
    base ^ repeat as u64
}
