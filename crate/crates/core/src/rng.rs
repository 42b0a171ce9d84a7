//! Seeded counter-based streams. Every trial gets its own ChaCha8 stream
//! keyed by `(seed, domain)` and selected by index, so results do not depend
//! on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub(crate) const DOMAIN_MATRIX: u64 = 0x4d41_5452;
pub(crate) const DOMAIN_TRIAL: u64 = 0x5452_494c;
pub(crate) const DOMAIN_SETS: u64 = 0x5345_5453;
pub(crate) const DOMAIN_VERIFY: u64 = 0x5645_5246;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream `index` of the family identified by `(seed, domain)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}
