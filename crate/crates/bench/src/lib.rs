//! Shared workloads for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spp_core::instances::{random_lp, random_point, LpInstance};
use spp_core::Vector;

pub const SEED: u64 = 7;

/// Seeded LP instances of one shape.
pub fn lps(n: usize, m: usize, count: u64) -> Vec<LpInstance> {
    (0..count).map(|i| random_lp(SEED, i, n, m).expect("bounded instance")).collect()
}

/// Seeded points of the ball of radius `r`, typically outside the instances.
pub fn points(n: usize, count: usize, r: f64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count).map(|_| random_point(&mut rng, n, r)).collect()
}
