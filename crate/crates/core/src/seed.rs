//! Seed derivation tree: every random stream is a pure function of a root
//! seed and a path of integer coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `parent` at `path`.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(parent.wrapping_add(GOLDEN)), |h, &p| {
        mix(h ^ mix(p.wrapping_add(GOLDEN)))
    })
}

pub fn rng_for(parent: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(parent, path))
}
