//! Seed derivation.
//!
//! Every random quantity in the crate is produced by a ChaCha stream whose
//! seed is a pure function of a master seed and a path of integer labels
//! (experiment, n, replicate, stage, ...). Work can therefore be scheduled
//! in any order, or in parallel, without changing a single drawn bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of labels.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &label| {
        splitmix(acc ^ splitmix(label))
    })
}

/// Hash a string label into a seed-path component.
pub fn label(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn stream(seed: u64, path: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}

/// Rademacher signs for draw `draw` of length `n`.
pub fn rademacher_signs(seed: u64, draw: u64, n: usize) -> Vec<f64> {
    use rand::RngCore;
    let mut rng = stream(seed, &[label("rademacher"), draw]);
    let mut out = Vec::with_capacity(n);
    let mut bits = 0u64;
    for k in 0..n {
        if k % 64 == 0 {
            bits = rng.next_u64();
        }
        out.push(if (bits >> (k % 64)) & 1 == 1 {
            1.0
        } else {
            -1.0
        });
    }
    out
}
