//! Seed derivation for independent ensemble members.

/// Mixes a base seed with a stream index (SplitMix64 finaliser applied to
/// both words). Realization `r` of an ensemble seeded with `s` uses
/// `derive_seed(s, r)`, so any member can be regenerated on its own.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ mix(index.wrapping_add(0x9E37_79B9_7F4A_7C15));
    z = mix(z);
    z
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
