#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spp_core::instances::{random_lp, LpInstance};
use spp_core::{Polyhedron, Vector};

pub fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bounded instance with `1 <= n <= 4` and `n < m <= 8`, chosen by index.
pub fn instance(seed: u64, i: u64) -> LpInstance {
    let n = 1 + (i % 4) as usize;
    let m = n + 1 + ((i / 4) as usize % (8 - n));
    random_lp(seed, i, n, m).unwrap()
}

/// Random feasible points: projections of Gaussian points onto `p`.
pub fn feasible_points(p: &Polyhedron, count: usize, seed: u64) -> Vec<Vector> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let z = spp_core::instances::random_point(&mut r, p.dim(), 3.0);
            spp_core::project_brute(p, &z).unwrap().proj
        })
        .collect()
}
