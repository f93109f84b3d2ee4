//! Seeded random streams. Each consumer draws from its own ChaCha stream so
//! that changing one part of a run (for example the hop budget) does not
//! shift the random numbers seen by another part (sender selection).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Deployment = 0,
    Senders = 1,
    Routing = 2,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
