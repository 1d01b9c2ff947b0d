//! Seed-derived random streams.
//!
//! Every stochastic stage of a run draws from its own ChaCha stream derived
//! from the master seed and a stage tag, so stages can be reordered or
//! parallelized without perturbing each other's draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags for sub-stream derivation.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Graph,
    Schedule,
    Dataset,
    /// Parameter initialization for one agent.
    AgentInit(u64),
    /// The sequential training phase (roles, games, token sampling).
    Training,
    /// Evaluation pair selection and games.
    Eval,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Graph => 1,
            Stream::Schedule => 2,
            Stream::Dataset => 3,
            Stream::AgentInit(id) => 1000 + id,
            Stream::Training => 4,
            Stream::Eval => 5,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the ChaCha stream for `stream` under master `seed`.
pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut state = splitmix64(seed ^ splitmix64(stream.tag()));
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
