//! Euclidean projection onto polyhedra and onto lifted epigraphs.
//!
//! The production projector is a dual active-set method (Goldfarb–Idnani
//! specialised to the identity Hessian): start from the unconstrained
//! minimizer `z`, repeatedly add the most violated row, and drop rows whose
//! multiplier would turn negative. Every result carries a normal-cone
//! certificate; if the certificate fails the exhaustive projector is used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::maxaffine::MaxAffine;
use crate::numkernel::{distance_to_cone, Vector};
use crate::polyhedron::enumeration::project_affine;
use crate::polyhedron::{
    active_set, normal_cone_at, project_brute, ActiveSet, Polyhedron, ACTIVE_TOL,
    ORACLE_MAX_DIM, ORACLE_MAX_ROWS,
};

/// Default tolerance for the normal-cone certificate.
pub const KKT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub proj: Vector,
    /// Distance of `(z - proj)/||z - proj||` to `N_P(proj)`; 0 when `z = proj`.
    pub residual_normal: f64,
    pub active: ActiveSet,
    /// One multiplier per row, in normalized-row units.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    /// `true` when the face-enumeration projector produced the result.
    pub used_fallback: bool,
}

impl ProjectionResult {
    pub fn distance(&self, z: &Vector) -> f64 {
        self.proj.dist(z)
    }
}

/// Closed-form projection onto `{x : <normal, x> <= offset}`.
pub fn project_halfspace(z: &Vector, normal: &Vector, offset: f64) -> Result<Vector> {
    z.check_dim(normal.dim())?;
    let nn = normal.dot(normal);
    if nn == 0.0 {
        return Err(Error::InvalidParameter("halfspace normal is zero".into()));
    }
    let excess = normal.dot(z) - offset;
    if excess <= 0.0 {
        return Ok(z.clone());
    }
    Ok(z.axpy(-excess / nn, normal))
}

/// `P_P(z)` by the dual active-set method, certified against the normal cone.
pub fn project_polyhedron(p: &Polyhedron, z: &Vector, kkt_tol: f64) -> Result<ProjectionResult> {
    z.check_dim(p.dim())?;
    if !(kkt_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("kkt_tol must be positive, got {kkt_tol}")));
    }
    let within_caps = p.num_rows() <= ORACLE_MAX_ROWS && p.dim() <= ORACLE_MAX_DIM;
    match dual_active_set(p, z) {
        Ok((proj, working, lambda, iterations)) => {
            let certified = certify(p, z, proj, &working, &lambda, iterations)?;
            if certified.residual_normal <= kkt_tol || !within_caps {
                if certified.residual_normal > kkt_tol {
                    return Err(Error::NoConvergence {
                        what: "projection certificate",
                        iterations,
                    });
                }
                return Ok(certified);
            }
            fallback(p, z)
        }
        // a dependent row violated by rounding can look infeasible; the
        // phase-one LP decides
        Err(Error::Infeasible) if within_caps && p.feasible_point()?.is_some() => fallback(p, z),
        Err(Error::Infeasible) => Err(Error::Infeasible),
        Err(e) if within_caps => {
            // cycling guard tripped: the exhaustive projector decides
            match fallback(p, z) {
                Ok(r) => Ok(r),
                Err(Error::Infeasible) => Err(Error::Infeasible),
                Err(_) => Err(e),
            }
        }
        Err(e) => Err(e),
    }
}

fn fallback(p: &Polyhedron, z: &Vector) -> Result<ProjectionResult> {
    let b = project_brute(p, z)?;
    let residual_normal = projection_residual(p, z, &b.proj)?;
    Ok(ProjectionResult {
        proj: b.proj,
        residual_normal,
        active: b.active,
        multipliers: b.multipliers,
        iterations: 0,
        used_fallback: true,
    })
}

fn certify(
    p: &Polyhedron,
    z: &Vector,
    proj: Vector,
    working: &[usize],
    lambda: &[f64],
    iterations: usize,
) -> Result<ProjectionResult> {
    let tol = ACTIVE_TOL.max(2.0 * p.max_violation(&proj));
    let active = active_set(p, &proj, tol)?;
    let residual_normal = projection_residual(p, z, &proj)?;
    let mut multipliers = vec![0.0; p.num_rows()];
    for (&i, &l) in working.iter().zip(lambda) {
        multipliers[i] = l.max(0.0);
    }
    Ok(ProjectionResult {
        proj,
        residual_normal,
        active,
        multipliers,
        iterations,
        used_fallback: false,
    })
}

/// `d((z - x)/||z - x||, N_P(x))`. Displacements below `1e-6 (1 + ||z||)`
/// are measured against that floor instead of their own length, so that
/// rounding in nearly feasible inputs is not amplified.
pub fn projection_residual(p: &Polyhedron, z: &Vector, x: &Vector) -> Result<f64> {
    let d = z - x;
    let len = d.norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let tol = ACTIVE_TOL.max(2.0 * p.max_violation(x));
    let cone = normal_cone_at(p, x, tol)?;
    let denom = len.max(1e-6 * (1.0 + z.norm()));
    Ok(distance_to_cone(&d, &cone, f64::MIN_POSITIVE)?.distance / denom)
}

type DualState = (Vector, Vec<usize>, Vec<f64>, usize);

fn dual_active_set(p: &Polyhedron, z: &Vector) -> Result<DualState> {
    let m = p.num_rows();
    let n = p.dim();
    let bmax = p.rhs().iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let scale = 1.0 + z.norm() + bmax;
    let feas_tol = 1e-12 * scale;
    let max_iter = 50 * (m + n) + 100;

    let mut x = z.clone();
    let mut working: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let mut iterations = 0;
    // rows whose violation is rounding noise along the working span
    let mut ignored: Vec<usize> = Vec::new();

    loop {
        // most violated row outside the working set; smallest index on ties
        let mut pick: Option<(usize, f64)> = None;
        for i in (0..m).filter(|i| !working.contains(i) && !ignored.contains(i)) {
            let viol = -p.slack(i, &x);
            if viol > feas_tol && pick.is_none_or(|(_, best)| viol > best) {
                pick = Some((i, viol));
            }
        }
        let Some((add, _)) = pick else {
            break;
        };
        let a_p = p.row(add);
        let mut added = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NoConvergence {
                    what: "dual active-set projection",
                    iterations: max_iter,
                });
            }
            let (r, s) = split_direction(p, &working, a_p);
            let ss = s.dot(&s);
            let viol = -p.slack(add, &x);
            let full = if ss > 1e-20 { (viol / ss).max(0.0) } else { f64::INFINITY };
            // Bland-style: smallest row index among blocking candidates
            let mut partial = f64::INFINITY;
            let mut block: Option<usize> = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 1e-14 {
                    let t = lambda[k] / rk;
                    let better = t < partial - 1e-15
                        || (t <= partial + 1e-15 && block.is_some_and(|b| working[k] < working[b]));
                    if better {
                        partial = t;
                        block = Some(k);
                    }
                }
            }
            if !full.is_finite() && block.is_none() {
                if viol <= 1e-9 * scale {
                    ignored.push(add);
                    break;
                }
                return Err(Error::Infeasible);
            }
            let t = full.min(partial);
            if ss > 1e-20 {
                x = x.axpy(-t, &s);
            }
            for (l, rk) in lambda.iter_mut().zip(&r) {
                *l -= t * rk;
            }
            added += t;
            if full <= partial {
                working.push(add);
                lambda.push(added);
                break;
            }
            let k = block.expect("partial step has a blocking row");
            working.remove(k);
            lambda.remove(k);
        }
    }

    // polish on the final working set
    if !working.is_empty() {
        let rows: Vec<&[f64]> = working.iter().map(|&i| p.row(i).as_slice()).collect();
        let rhs: Vec<f64> = working.iter().map(|&i| p.rhs()[i]).collect();
        if let Some((xp, lp)) = project_affine(&rows, &rhs, z) {
            if p.max_violation(&xp) <= p.max_violation(&x).max(feas_tol)
                && lp.iter().all(|l| *l >= -1e-10 * scale)
            {
                x = xp;
                lambda = lp;
            }
        }
    }
    Ok((x, working, lambda, iterations))
}

/// Splits `a` into `N^T r + s` with `s` orthogonal to the working rows `N`.
fn split_direction(p: &Polyhedron, working: &[usize], a: &Vector) -> (Vec<f64>, Vector) {
    if working.is_empty() {
        return (Vec::new(), a.clone());
    }
    let rows: Vec<&[f64]> = working.iter().map(|&i| p.row(i).as_slice()).collect();
    let nmat = linalg::matrix_from_rows(&rows, p.dim());
    let gram = &nmat * nmat.transpose();
    let rhs = &nmat * a.to_dvector();
    let r = linalg::solve_square(gram.clone(), &rhs).unwrap_or_else(|| {
        gram.svd(true, true)
            .solve(&rhs, 1e-12)
            .unwrap_or_else(|_| nalgebra::DVector::zeros(working.len()))
    });
    let s = a.to_dvector() - nmat.transpose() * &r;
    (r.iter().copied().collect(), Vector::from_dvector(&s))
}

/// `{(x, s) : x in P, f(x) <= s}` as a polyhedron in `R^{n+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedEpigraph {
    pub poly: Polyhedron,
    /// Number of leading rows copied from the base polyhedron.
    pub base_rows: usize,
}

/// Base rows get a zero `s` coefficient; each piece `<a_i,x> + c_i` becomes
/// the row `<a_i, x> - s <= -c_i`.
pub fn lift_epigraph(p: &Polyhedron, f: &MaxAffine) -> Result<LiftedEpigraph> {
    Error::dims(p.dim(), f.dim())?;
    let mut rows = Vec::with_capacity(p.num_rows() + f.num_pieces());
    let mut rhs = Vec::with_capacity(rows.capacity());
    for (row, b) in p.rows().iter().zip(p.rhs()) {
        rows.push(row.extended(0.0));
        rhs.push(*b);
    }
    for piece in f.pieces() {
        rows.push(piece.a.extended(-1.0));
        rhs.push(-piece.c);
    }
    Ok(LiftedEpigraph {
        poly: Polyhedron::from_rows(rows, rhs)?,
        base_rows: p.num_rows(),
    })
}

/// Projection of `(v, t)` onto the lifted epigraph.
pub fn project_epigraph(
    p: &Polyhedron,
    f: &MaxAffine,
    v: &Vector,
    t: f64,
    kkt_tol: f64,
) -> Result<ProjectionResult> {
    v.check_dim(p.dim())?;
    if !t.is_finite() {
        return Err(Error::NonFinite(p.dim()));
    }
    let lifted = lift_epigraph(p, f)?;
    project_polyhedron(&lifted.poly, &v.extended(t), kkt_tol)
}
