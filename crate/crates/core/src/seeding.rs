//! Deterministic seed derivation.
//!
//! Every random choice in the crate flows from a single master seed. Each
//! (trial, video) work unit gets an independent generator seeded by a stable
//! hash of its identity, so trials can run in any order or in parallel and
//! still reproduce the sequential result, and extending the trial count
//! leaves earlier trials' draws untouched.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= u64::from(b);
        *hash = hash.wrapping_mul(FNV_PRIME);
    }
}

/// Stable 64-bit hash of (master seed, trial, video id) plus a domain tag
/// separating unrelated uses of the same tuple.
pub fn derive_seed(master_seed: u64, trial: u64, video_id: &str, domain: &str) -> u64 {
    let mut h = FNV_OFFSET;
    fnv1a(&mut h, domain.as_bytes());
    fnv1a(&mut h, &[0xff]);
    fnv1a(&mut h, &master_seed.to_le_bytes());
    fnv1a(&mut h, &trial.to_le_bytes());
    fnv1a(&mut h, video_id.as_bytes());
    h
}

/// Deterministic generator for one (trial, video) work unit.
pub fn trial_rng(master_seed: u64, trial: u64, video_id: &str, domain: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial, video_id, domain))
}

/// Deterministic generator seeded directly from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable() {
        let a = derive_seed(7, 3, "video_1", "randtest");
        let b = derive_seed(7, 3, "video_1", "randtest");
        assert_eq!(a, b);
    }

    #[test]
    fn derive_seed_separates_inputs() {
        let base = derive_seed(7, 3, "video_1", "randtest");
        assert_ne!(base, derive_seed(8, 3, "video_1", "randtest"));
        assert_ne!(base, derive_seed(7, 4, "video_1", "randtest"));
        assert_ne!(base, derive_seed(7, 3, "video_2", "randtest"));
        assert_ne!(base, derive_seed(7, 3, "video_1", "rankeval"));
    }

    #[test]
    fn trial_rng_reproduces_streams() {
        let mut r1 = trial_rng(42, 0, "v", "t");
        let mut r2 = trial_rng(42, 0, "v", "t");
        let xs: Vec<f64> = (0..8).map(|_| r1.random()).collect();
        let ys: Vec<f64> = (0..8).map(|_| r2.random()).collect();
        assert_eq!(xs, ys);
    }
}
