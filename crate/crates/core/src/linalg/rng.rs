use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A reproducible random stream. Streams sharing a master seed but differing
/// in index are independent ChaCha streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A stream namespace derived from this one; `child(i)` for distinct `i`
    /// are distinct from each other and from the parent.
    pub fn child(&self, index: u64) -> Self {
        let seed = splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(0x5151)));
        Self { master_seed: seed, stream_index: index }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_sequence() {
        let a: Vec<u64> = (0..8).map({
            let mut r = RngStream::new(7, 3).rng();
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..8).map({
            let mut r = RngStream::new(7, 3).rng();
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let x: u64 = RngStream::new(7, 0).rng().random();
        let y: u64 = RngStream::new(7, 1).rng().random();
        let z: u64 = RngStream::new(7, 0).child(0).rng().random();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }
}
