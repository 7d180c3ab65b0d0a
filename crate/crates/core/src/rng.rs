//! Deterministic seed derivation for independent simulation streams.
//!
//! Every random quantity in a run is drawn from a ChaCha stream whose seed is
//! derived from the user seed plus structural coordinates (sweep point,
//! channel index, stream role). Results are therefore bit-identical across
//! runs and across worker counts: nothing depends on execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 output function; stable across platforms.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a base seed and two coordinates.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ tag) ^ index)
}

/// Expands a 64-bit seed into a ChaCha8 generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    let mut state = seed;
    for chunk in bytes.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Role of a per-channel random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Channel matrix entries.
    Channel,
    /// Payload bits.
    Payload,
    /// Receiver noise.
    Noise,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Channel => 0x48,
            StreamKind::Payload => 0x42,
            StreamKind::Noise => 0x4E,
        }
    }
}

/// Generator for one (channel realization, role) pair.
pub fn stream_rng(base_seed: u64, channel_index: usize, kind: StreamKind) -> ChaCha8Rng {
    rng_from_seed(derive_seed(base_seed, kind.tag(), channel_index as u64))
}
