//! Deterministic random sub-streams.
//!
//! Every random quantity in the crate is drawn from a stream identified by
//! `(seed, domain, index)`. Streams are derived by hashing that triple into a
//! Xoshiro256++ seed, so a trial's samples never depend on which worker runs
//! it or in what order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Purpose tag separating otherwise identical stream indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamDomain {
    Channel,
    NullHypothesis,
    AltHypothesis,
    Parameters,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Channel => 0x43_48_41_4e,
            StreamDomain::NullHypothesis => 0x48_30_48_30,
            StreamDomain::AltHypothesis => 0x48_31_48_31,
            StreamDomain::Parameters => 0x50_41_52_4d,
        }
    }
}

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the 64-bit key of sub-stream `index` within `domain`.
pub fn derive_seed(seed: u64, domain: StreamDomain, index: u64) -> u64 {
    let base = mix64(seed ^ mix64(domain.tag()));
    mix64(base.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Independent generator for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: StreamDomain, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, domain, index))
}
