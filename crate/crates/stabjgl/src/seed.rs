//! Seed derivation for independent, reproducible RNG streams.

/// Mix a base seed with a stage tag and an index into a new seed.
///
/// SplitMix64-style finalization: statistically independent outputs for
/// distinct inputs, and stable across platforms and runs.
pub(crate) fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut x = base
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(tag.wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add(index.wrapping_mul(0x94d0_49bb_1331_11eb))
        .wrapping_add(0x2545_f491_4f6c_dd1d);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}
