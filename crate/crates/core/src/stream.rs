//! Counter-based random streams.
//!
//! Every path draws from its own ChaCha8 stream addressed by
//! `(seed, start vertex, path index)`, so results do not depend on how paths
//! are distributed over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Source of per-path random streams for one seed.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    seed: u64,
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed, base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh stream for path `index` started at `vertex`. The ChaCha stream id
    /// packs the vertex into the high 32 bits and the path index into the low 32.
    pub fn stream(&self, vertex: usize, index: u64) -> ChaCha8Rng {
        assert!(vertex < (1 << 32) && index < (1 << 32), "stream address out of range");
        let mut rng = self.base.clone();
        rng.set_stream(((vertex as u64) << 32) | index);
        rng.set_word_pos(0);
        rng
    }

    pub fn descriptor(&self) -> String {
        format!("chacha8(seed={}, stream=vertex<<32|path)", self.seed)
    }
}
