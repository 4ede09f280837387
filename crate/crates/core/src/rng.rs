//! Seed policy.
//!
//! Every random stream is a ChaCha8 generator keyed by four 64-bit words:
//! `(master seed, replication, domain tag, index)`. The tags are
//!
//! | tag | index                 | used for                                  |
//! |-----|-----------------------|-------------------------------------------|
//! | 0   | 0                     | replication-wide stream (two-way engine)  |
//! | 1   | vertex `v`            | opinion path of vertex `v`                |
//! | 2   | `(min << 32) \| max`  | ring process of edge `{u, v}`             |
//! | 3   | caller defined        | auxiliary streams (bootstrap, sampling)   |
//!
//! so a stream depends only on its key, never on scheduling or query order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TAG_REPLICATION: u64 = 0;
const TAG_VERTEX: u64 = 1;
const TAG_EDGE: u64 = 2;
const TAG_AUX: u64 = 3;

pub type StreamRng = ChaCha8Rng;

fn keyed(words: [u64; 4]) -> StreamRng {
    let mut seed = [0u8; 32];
    for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// The root of all streams for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MasterSeed(pub u64);

impl MasterSeed {
    pub fn replication(self, r: u64) -> ReplicationSeed {
        ReplicationSeed {
            master: self.0,
            replication: r,
        }
    }

    /// Stream not tied to any replication, e.g. for bootstrap resampling.
    pub fn aux(self, index: u64) -> StreamRng {
        keyed([self.0, u64::MAX, TAG_AUX, index])
    }
}

/// Seeds for one replication `(seed, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReplicationSeed {
    pub master: u64,
    pub replication: u64,
}

impl ReplicationSeed {
    pub fn stream(&self) -> StreamRng {
        keyed([self.master, self.replication, TAG_REPLICATION, 0])
    }

    pub fn vertex(&self, v: usize) -> StreamRng {
        keyed([self.master, self.replication, TAG_VERTEX, v as u64])
    }

    pub fn edge(&self, u: usize, v: usize) -> StreamRng {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        keyed([self.master, self.replication, TAG_EDGE, ((a as u64) << 32) | b as u64])
    }

    pub fn aux(&self, index: u64) -> StreamRng {
        keyed([self.master, self.replication, TAG_AUX, index])
    }
}
