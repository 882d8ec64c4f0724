//! Seed derivation.
//!
//! Every randomized stage draws from one user-provided seed, expanded per
//! stage by hashing the stage name (FNV-1a) and mixing through SplitMix64.
//! Index-level streams (bootstrap replicates, per-feature generators) derive
//! further with [`derive`], so parallel execution order cannot affect results.

/// Seed for a named pipeline stage.
pub fn stage_seed(base: u64, stage: &str) -> u64 {
    splitmix64(base ^ fnv1a(stage))
}

/// Seed for the `index`-th independent stream under `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15))))
}

fn fnv1a(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
