//! Deterministic seeding and Gaussian sampling.
//!
//! All randomness flows through `ChaCha8Rng` seeded from explicit `u64`
//! seeds, so every caller-visible computation is a pure function of its
//! seed. `derive_seed` is the documented mixing scheme used to fan a master
//! seed out into per-trial and per-stage streams: it chains the SplitMix64
//! finalizer over the tag sequence, so distinct tag paths give independent
//! streams and the result does not depend on evaluation order elsewhere.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a tag path.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut z = mix64(master ^ 0x6A09_E667_F3BC_C909);
    for &t in tags {
        z = mix64(z ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
    }
    z
}

pub fn chacha_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of i.i.d. standard normal entries, filled in row-major order.
pub fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let v: f64 = rng.sample(StandardNormal);
        data.push(v);
    }
    Matrix::new(rows, cols, data).expect("normal sample is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derive_seed_is_stable_and_tag_sensitive() {
        let a = derive_seed(42, &[1, 2, 3]);
        assert_eq!(a, derive_seed(42, &[1, 2, 3]));
        assert_ne!(a, derive_seed(42, &[1, 3, 2]));
        assert_ne!(a, derive_seed(43, &[1, 2, 3]));
    }

    #[test]
    fn derived_seeds_do_not_collide_over_a_grid() {
        let mut seen = HashSet::new();
        for est in 0..3u64 {
            for r in 0..8u64 {
                for s in 0..8u64 {
                    for rep in 0..64u64 {
                        assert!(seen.insert(derive_seed(99, &[est, r, s, rep])));
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a = standard_normal_matrix(5, 4, &mut chacha_rng(7));
        let b = standard_normal_matrix(5, 4, &mut chacha_rng(7));
        assert_eq!(a, b);
    }
}
