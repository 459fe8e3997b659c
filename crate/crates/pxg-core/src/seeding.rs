//! Deterministic seed derivation.
//!
//! Every replication draws from a stream seeded by hashing the master seed
//! with the replication coordinates, so results do not depend on scheduling
//! or on the number of worker threads.

/// SplitMix64 finalizer; bijective on u64.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `index` of stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(master ^ 0xA076_1D64_78BD_642F);
    let b = splitmix64(a ^ stream.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    splitmix64(b ^ index.wrapping_mul(0x8EBC_6AF0_9C88_C6E3))
}

/// Folds raw coordinate bits into a seed. Used for per-pair sampling streams
/// that must not depend on scan order or grid resolution.
pub fn fold_coord_bits(init: u64, coords: &[f64]) -> u64 {
    let mut h = splitmix64(init ^ 0x2545_F491_4F6C_DD1D);
    for c in coords {
        h = splitmix64(h ^ c.to_bits());
    }
    h
}
