//! Counter-based RNG streams: every (purpose, index) pair gets its own
//! ChaCha stream under the master seed, so results never depend on which
//! worker ran what.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Covariances and visibility regions of one refresh block.
    Covariance = 1,
    /// Symbols, fading and noise of one trial.
    Trial = 2,
}

/// Independent generator for stream `kind`, index `index`.
pub fn stream_rng(seed: u64, kind: Stream, index: u64) -> ChaCha12Rng {
    assert!(index < 1 << 56, "stream index {index} out of range");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 56) | index);
    rng
}
