use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::enumeration::{project_affine, VERTEX_FEAS_TOL};
use super::{active_set, ActiveSet, Polyhedron, ACTIVE_TOL};
use crate::error::{Error, Result};
use crate::numkernel::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteProjection {
    pub proj: Vector,
    pub active: ActiveSet,
    /// One multiplier per row (zero off the chosen face), in normalized-row units.
    pub multipliers: Vec<f64>,
}

/// Exact projection by face enumeration: every row subset of size at most
/// `n` is tried as a working set, and the nearest KKT point wins.
pub fn project_brute(p: &Polyhedron, z: &Vector) -> Result<BruteProjection> {
    z.check_dim(p.dim())?;
    p.check_oracle_caps()?;
    if p.feasible_point()?.is_none() {
        return Err(Error::Infeasible);
    }
    let n = p.dim();
    let m = p.num_rows();
    let scale = 1.0 + z.norm();
    let mut best: Option<(f64, Vector, Vec<usize>, Vec<f64>)> = None;
    for k in 0..=n.min(m) {
        for subset in (0..m).combinations(k) {
            let rows: Vec<&[f64]> = subset.iter().map(|&i| p.row(i).as_slice()).collect();
            let rhs: Vec<f64> = subset.iter().map(|&i| p.rhs()[i]).collect();
            let Some((x, lambda)) = project_affine(&rows, &rhs, z) else {
                continue;
            };
            if lambda.iter().any(|l| *l < -1e-10 * scale) {
                continue;
            }
            if p.max_violation(&x) > VERTEX_FEAS_TOL * scale {
                continue;
            }
            let d = x.dist(z);
            let better = match &best {
                None => true,
                Some((bd, bx, _, _)) => {
                    d < bd - 1e-14 * scale || ((d - bd).abs() <= 1e-14 * scale && x.lex_cmp(bx).is_lt())
                }
            };
            if better {
                best = Some((d, x, subset, lambda));
            }
        }
    }
    let (_, proj, subset, lambda) = best.ok_or(Error::NoConvergence {
        what: "face-enumeration projection",
        iterations: 0,
    })?;
    let mut multipliers = vec![0.0; m];
    for (&i, l) in subset.iter().zip(&lambda) {
        multipliers[i] = l.max(0.0);
    }
    let tol = ACTIVE_TOL.max(p.max_violation(&proj) * 2.0);
    let active = active_set(p, &proj, tol)?;
    Ok(BruteProjection {
        proj,
        active,
        multipliers,
    })
}
