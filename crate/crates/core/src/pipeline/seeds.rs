/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one grid cell, a fixed function of the master seed and the cell key.
pub fn cell_seed(master: u64, key: &[u64]) -> u64 {
    key.iter().fold(splitmix64(master), |h, &k| splitmix64(h ^ k))
}
