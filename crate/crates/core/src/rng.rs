//! Counter-based random substreams.
//!
//! A substream is fully determined by `(seed, stream)`, so work items can be
//! processed in any order or on any number of threads and still see the same
//! random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
