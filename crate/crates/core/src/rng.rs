//! Keyed random streams.
//!
//! Every random quantity in a study is drawn from its own ChaCha8 stream whose
//! seed is a hash of `(master_seed, key...)`. Streams never depend on the order
//! in which work is scheduled, so serial and parallel runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Domain tags that keep key spaces of different consumers disjoint.
pub mod tag {
    pub const X1: u64 = 0x7831;
    pub const X2: u64 = 0x7832;
    pub const EPSILON: u64 = 0x6570;
    pub const SRS: u64 = 0x5352_5300;
    pub const SYS: u64 = 0x5359_5300;
    pub const PLOT_SRS: u64 = 0x5053_5253;
    pub const PLOT_SYS: u64 = 0x5053_5953;
    pub const BOOTSTRAP: u64 = 0x426f_6f74;
    pub const STEMMAP: u64 = 0x5374_656d;
    pub const VARIOGRAM: u64 = 0x5661_7269;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream from a master seed and a key path.
pub fn stream(master_seed: u64, key: &[u64]) -> Stream {
    let mut state = master_seed;
    let mut acc = splitmix64(&mut state);
    for &k in key {
        state ^= k.wrapping_mul(0xd6e8_feb8_6659_fd93).rotate_left(17) ^ acc;
        acc = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stable 64-bit key for a label (FNV-1a), used to fold strings into stream keys.
pub fn label_key(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}
