//! Deterministic random streams.
//!
//! Every replication, limit draw or calibration pool gets its own ChaCha8
//! stream addressed by `(master seed, stream id)`. The ChaCha block counter
//! makes the streams independent of evaluation order, so parallel and serial
//! runs produce bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Addressable family of random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream number `index` of this family.
    pub fn rng(&self, index: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(index);
        rng
    }

    /// A new family whose master seed is mixed from this one and `tag`.
    pub fn child(&self, tag: u64) -> SeedStream {
        SeedStream {
            master: splitmix64(self.master ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
