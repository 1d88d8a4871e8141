//! Seeded quasi-random sampling: a Halton sequence with a random
//! (Cranley–Patterson) shift, mapped to spheres, balls and boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numkernel::{UnitDirection, Vector};

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Shifted Halton points in `[0,1)^dim`.
#[derive(Clone, Debug)]
pub struct Halton {
    index: u64,
    shift: Vec<f64>,
}

impl Halton {
    /// Panics if `dim` exceeds the number of tabulated primes (32).
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension {dim} too large");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Halton { index: 0, shift }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, p)| (radical_inverse(self.index, p) + s).fract())
            .collect()
    }
}

/// Standard normal coordinates from uniform pairs (Box–Muller).
fn gaussians(u: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for pair in u.chunks(2) {
        let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
        let t = std::f64::consts::TAU * pair[1];
        out.push(r * t.cos());
        out.push(r * t.sin());
    }
    out.truncate(n);
    out
}

fn normal_dims(n: usize) -> usize {
    2 * n.div_ceil(2)
}

/// `count` quasi-uniform unit vectors in `R^n`.
pub fn unit_sphere(n: usize, count: usize, seed: u64) -> Vec<UnitDirection> {
    let mut h = Halton::new(normal_dims(n), seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = gaussians(&h.next_point(), n);
        if let Ok(u) = UnitDirection::normalize(&Vector::raw(g)) {
            out.push(u);
        }
    }
    out
}

/// `count` quasi-uniform points of the open ball `B(center, radius)`.
pub fn ball(center: &Vector, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let n = center.dim();
    let k = normal_dims(n);
    let mut h = Halton::new(k + 1, seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = h.next_point();
        let g = Vector::raw(gaussians(&u[..k], n));
        let gn = g.norm();
        if gn == 0.0 {
            continue;
        }
        let r = radius * u[k].powf(1.0 / n as f64) * (1.0 - 1e-12);
        out.push(center.axpy(r / gn, &g));
    }
    out
}

/// `count` quasi-uniform points `center + sum_k c_k e_k` with `c` in
/// `[-radius, radius]^{basis.len()}`.
pub fn box_in_span(center: &Vector, basis: &[Vector], radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let mut h = Halton::new(basis.len(), seed);
    (0..count)
        .map(|_| {
            h.next_point()
                .iter()
                .zip(basis)
                .fold(center.clone(), |acc, (c, e)| acc.axpy(radius * (2.0 * c - 1.0), e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = unit_sphere(3, 20, 7);
        let b = unit_sphere(3, 20, 7);
        assert_eq!(a, b);
        assert_ne!(a, unit_sphere(3, 20, 8));
        assert!(a.iter().all(|u| (u.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ball_points_inside() {
        let c = Vector::from_slice(&[1.0, -2.0]).unwrap();
        let pts = ball(&c, 0.5, 200, 1);
        assert!(pts.iter().all(|p| p.dist(&c) < 0.5));
        // covers both half-planes
        assert!(pts.iter().any(|p| p[0] > 1.2) && pts.iter().any(|p| p[0] < 0.8));
    }

    #[test]
    fn sphere_mean_is_small() {
        let pts = unit_sphere(2, 2000, 3);
        let mut m = [0.0, 0.0];
        for p in &pts {
            m[0] += p[0] / 2000.0;
            m[1] += p[1] / 2000.0;
        }
        assert!(m[0].abs() < 0.02 && m[1].abs() < 0.02, "{m:?}");
    }
}
