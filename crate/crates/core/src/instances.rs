//! Seeded random instances for tests, benchmarks and the CLI generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxaffine::{AffinePiece, MaxAffine};
use crate::numkernel::{UnitDirection, Vector};
use crate::polyhedron::Polyhedron;

/// A bounded, full-dimensional polyhedron with a linear objective direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub seed: u64,
    pub p: Polyhedron,
    pub x_star: UnitDirection,
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(v) = Vector::new(g) {
            if v.norm() > 1e-3 {
                return v;
            }
        }
    }
}

/// Random polytope with `m` rows in `R^n` around a random interior centre.
///
/// Rows are Gaussian directions with offsets in `[0.5, 1.5]` from the
/// centre, so the centre is strictly feasible; draws that are unbounded are
/// rejected. Every `round`-th draw rounds normals to integers to exercise
/// degenerate vertices.
pub fn random_polytope(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<Polyhedron> {
    if m <= n {
        return Err(Error::InvalidParameter(format!(
            "a bounded polyhedron in R^{n} needs more than {n} rows, got {m}"
        )));
    }
    let degenerate = rng.random_bool(0.25);
    for _ in 0..1000 {
        let center = gaussian_vector(rng, n).scaled(0.5);
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for _ in 0..m {
            let mut a = gaussian_vector(rng, n);
            if degenerate {
                a = Vector::raw(a.iter().map(|x| (2.0 * x).round()).collect());
                if a.norm() == 0.0 {
                    a = Vector::basis(n, rng.random_range(0..n));
                }
            }
            let off: f64 = rng.random_range(0.5..1.5);
            rhs.push(a.dot(&center) + off * a.norm());
            rows.push(a);
        }
        let p = Polyhedron::from_rows(rows, rhs)?;
        if p.is_bounded()? {
            return Ok(p);
        }
    }
    Err(Error::DegenerateSampling("no bounded polytope in 1000 draws".into()))
}

/// The `index`-th instance of a seeded family; reproducible per index.
pub fn random_lp(seed: u64, index: u64, n: usize, m: usize) -> Result<LpInstance> {
    let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index);
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let p = random_polytope(&mut rng, n, m)?;
    let x_star = UnitDirection::normalize(&gaussian_vector(&mut rng, n))?;
    Ok(LpInstance { seed: s, p, x_star })
}

/// Random max-affine function with `k` pieces in `R^n`.
pub fn random_max_affine(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<MaxAffine> {
    let pieces = (0..k)
        .map(|_| AffinePiece {
            a: gaussian_vector(rng, n),
            c: rng.random_range(-1.0..1.0),
        })
        .collect();
    MaxAffine::new(pieces)
}

/// Random point of the open ball of radius `r` around the origin.
pub fn random_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vector {
    let g = gaussian_vector(rng, n);
    let u: f64 = rng.random();
    g.scaled(r * u.powf(1.0 / n as f64) / g.norm())
}
