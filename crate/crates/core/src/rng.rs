//! Seeded, portable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed. Batches split work by stream: item `i` of a batch seeded with
//! `seed` draws from `ChaCha8Rng::seed_from_u64(seed)` with its stream set to
//! `i`. Results are therefore independent of how a batch is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `count` distinct indices drawn uniformly from `0..n`, returned sorted.
pub fn sample_indices(rng: &mut Rng, n: usize, count: usize) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, n, count.min(n)).into_vec();
    idx.sort_unstable();
    idx
}
