//! Deterministic derivation of independent RNG streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded with
//! `derive_seed(master, path)`, where `path` names the unit of work
//! (realisation index, asset index, portfolio sample, ...). Results therefore
//! do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of indices into the master seed: `s ← splitmix64(s ⊕ splitmix64(i))`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |s, &i| splitmix64(s ^ splitmix64(i.wrapping_add(1))))
}

pub fn rng_for(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_distinct() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[0]), derive_seed(7, &[]));
        assert_ne!(derive_seed(7, &[0]), derive_seed(8, &[0]));
        // pinned so a change of mixing function is caught
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
