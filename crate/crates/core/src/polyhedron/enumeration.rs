//! Exhaustive LP by vertex enumeration.
//!
//! Lineality is factored out first (restricting to its orthogonal
//! complement makes the polyhedron pointed, so it is nonempty iff it has a
//! vertex). Unboundedness is decided on the recession cone intersected with
//! the unit box, which is again solved by enumeration.

use itertools::Itertools;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{active_set, ActiveSet, Polyhedron, ACTIVE_TOL};
use crate::error::Result;
use crate::linalg;
use crate::numkernel::{self, Vector};

/// Feasibility tolerance for enumerated vertices (unit rows).
pub(crate) const VERTEX_FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub(crate) enum LpOutcome {
    Optimal { x: Vector, value: f64 },
    Unbounded { ray: Vector },
    Infeasible,
}

/// Inequalities `<a,x> <= b` and equalities `<a,x> = b` in `R^n`.
#[derive(Clone, Debug)]
pub(crate) struct LinearSystem {
    n: usize,
    ineq: Vec<(Vec<f64>, f64)>,
    eq: Vec<(Vec<f64>, f64)>,
}

impl LinearSystem {
    pub(crate) fn new(n: usize) -> Self {
        LinearSystem {
            n,
            ineq: Vec::new(),
            eq: Vec::new(),
        }
    }

    pub(crate) fn from_polyhedron(p: &Polyhedron) -> Self {
        let mut s = Self::new(p.dim());
        for (row, b) in p.rows().iter().zip(p.rhs()) {
            s.push_ineq(row.as_slice().to_vec(), *b);
        }
        s
    }

    pub(crate) fn push_ineq(&mut self, row: Vec<f64>, b: f64) {
        debug_assert_eq!(row.len(), self.n);
        self.ineq.push((row, b));
    }

    pub(crate) fn push_eq(&mut self, row: Vec<f64>, b: f64) {
        debug_assert_eq!(row.len(), self.n);
        self.eq.push((row, b));
    }

    fn feasible(&self, x: &[f64], tol: f64) -> bool {
        self.ineq
            .iter()
            .all(|(a, b)| numkernel::dot(a, x) - b <= tol * (1.0 + numkernel::norm(a)))
            && self
                .eq
                .iter()
                .all(|(a, b)| (numkernel::dot(a, x) - b).abs() <= tol * (1.0 + numkernel::norm(a)))
    }

    /// Basis of `{d : <a,d> = 0 for every row}`.
    fn lineality(&self) -> Vec<Vec<f64>> {
        let rows: Vec<&[f64]> = self
            .ineq
            .iter()
            .chain(&self.eq)
            .map(|(a, _)| a.as_slice())
            .collect();
        let a = linalg::matrix_from_rows(&rows, self.n);
        linalg::null_space(&a, 1e-12)
    }

    /// Same feasible set minus its lineality space, so the result is pointed.
    fn pointed(&self) -> (LinearSystem, Vec<Vec<f64>>) {
        let lin = self.lineality();
        let mut s = self.clone();
        for l in &lin {
            s.push_eq(l.clone(), 0.0);
        }
        (s, lin)
    }

    /// All basic feasible solutions. Assumes the system is pointed.
    fn vertices(&self) -> Vec<Vector> {
        let eq_rows: Vec<&[f64]> = self.eq.iter().map(|(a, _)| a.as_slice()).collect();
        let eq_idx = linalg::independent_subset(&eq_rows, self.n);
        if eq_idx.len() > self.n {
            return Vec::new();
        }
        let k = self.n - eq_idx.len();
        let mut out = Vec::new();
        for subset in (0..self.ineq.len()).combinations(k) {
            let rows: Vec<&[f64]> = eq_idx
                .iter()
                .map(|&i| self.eq[i].0.as_slice())
                .chain(subset.iter().map(|&i| self.ineq[i].0.as_slice()))
                .collect();
            let rhs = DVector::from_iterator(
                self.n,
                eq_idx
                    .iter()
                    .map(|&i| self.eq[i].1)
                    .chain(subset.iter().map(|&i| self.ineq[i].1)),
            );
            let m = linalg::matrix_from_rows(&rows, self.n);
            let Some(x) = linalg::solve_square(m, &rhs) else {
                continue;
            };
            if x.iter().any(|c| !c.is_finite()) {
                continue;
            }
            if self.feasible(x.as_slice(), VERTEX_FEAS_TOL) {
                out.push(Vector::raw(x.iter().copied().collect()));
            }
        }
        out
    }

    pub(crate) fn feasible_point(&self) -> Option<Vector> {
        let (pointed, _) = self.pointed();
        pointed.vertices().into_iter().min_by(|a, b| a.lex_cmp(b))
    }

    /// Distinct vertices of the pointed part (coordinates compared at 1e-9).
    pub(crate) fn distinct_vertices(&self) -> Vec<Vector> {
        let (pointed, _) = self.pointed();
        let mut vs = pointed.vertices();
        vs.sort_by(|a, b| a.lex_cmp(b));
        vs.dedup_by(|a, b| a.dist(b) <= 1e-9 * (1.0 + b.norm()));
        vs
    }

    /// `min <c, x>` over the system. With `assume_bounded` the recession
    /// check is skipped (the caller guarantees a finite optimum if feasible).
    pub(crate) fn minimize(&self, c: &Vector, assume_bounded: bool) -> LpOutcome {
        debug_assert_eq!(c.dim(), self.n);
        let (pointed, lin) = self.pointed();
        let cn = c.norm();

        // component of c along the lineality space
        let mut along = vec![0.0; self.n];
        for l in &lin {
            let t = numkernel::dot(l, c);
            for (a, li) in along.iter_mut().zip(l) {
                *a += t * li;
            }
        }
        let vertices = pointed.vertices();
        if vertices.is_empty() {
            return LpOutcome::Infeasible;
        }
        if numkernel::norm(&along) > 1e-12 * cn.max(1.0) {
            let ray = Vector::raw(along.iter().map(|a| -a).collect());
            return LpOutcome::Unbounded { ray };
        }
        if !assume_bounded {
            if let Some(ray) = pointed.descent_ray(c) {
                return LpOutcome::Unbounded { ray };
            }
        }
        let value_tol = 1e-12 * (1.0 + cn);
        let mut best: Option<(Vector, f64)> = None;
        for x in vertices {
            let val = c.dot(&x);
            best = match best {
                None => Some((x, val)),
                Some((bx, bv)) => {
                    let tie = (val - bv).abs() <= value_tol * (1.0 + bv.abs());
                    if (!tie && val < bv) || (tie && x.lex_cmp(&bx).is_lt()) {
                        Some((x, val))
                    } else {
                        Some((bx, bv))
                    }
                }
            };
        }
        let (x, value) = best.expect("nonempty vertex list");
        LpOutcome::Optimal { x, value }
    }

    /// A recession direction `r` with `<c, r> < 0`, if one exists.
    fn descent_ray(&self, c: &Vector) -> Option<Vector> {
        let mut rec = LinearSystem::new(self.n);
        for (a, _) in &self.ineq {
            rec.push_ineq(a.clone(), 0.0);
        }
        for (a, _) in &self.eq {
            rec.push_eq(a.clone(), 0.0);
        }
        for i in 0..self.n {
            let e = Vector::basis(self.n, i);
            rec.push_ineq(e.as_slice().to_vec(), 1.0);
            rec.push_ineq((-&e).into_vec(), 1.0);
        }
        let tol = 1e-10 * c.norm().max(1.0);
        rec.vertices()
            .into_iter()
            .map(|r| (c.dot(&r), r))
            .filter(|(v, _)| *v < -tol)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, r)| r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Outcome of `min_{x in P} <c, x>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub x_opt: Option<Vector>,
    pub value: Option<f64>,
    pub vertex_active_set: Option<ActiveSet>,
    /// Recession direction of descent when unbounded.
    pub ray: Option<Vector>,
}

/// Exhaustive LP oracle: minimizes `<c, x>` over `P` by vertex enumeration.
///
/// Among vertices with equal objective the lexicographically smallest is
/// returned.
pub fn lp_solve_enumeration(p: &Polyhedron, c: &Vector) -> Result<LpResult> {
    c.check_dim(p.dim())?;
    p.check_oracle_caps()?;
    Ok(match p.system().minimize(c, false) {
        LpOutcome::Optimal { x, value } => LpResult {
            status: LpStatus::Optimal,
            vertex_active_set: Some(active_set(p, &x, ACTIVE_TOL)?),
            x_opt: Some(x),
            value: Some(value),
            ray: None,
        },
        LpOutcome::Unbounded { ray } => LpResult {
            status: LpStatus::Unbounded,
            x_opt: None,
            value: None,
            vertex_active_set: None,
            ray: Some(ray),
        },
        LpOutcome::Infeasible => LpResult {
            status: LpStatus::Infeasible,
            x_opt: None,
            value: None,
            vertex_active_set: None,
            ray: None,
        },
    })
}

/// `max s` subject to rows in `tight` holding with equality, every other row
/// holding with slack at least `s`, and `s <= 1`. `None` when infeasible.
pub(crate) fn max_uniform_slack(p: &Polyhedron, tight: &[usize]) -> Option<f64> {
    let n = p.dim();
    let mut sys = LinearSystem::new(n + 1);
    for i in 0..p.num_rows() {
        let mut row = p.row(i).as_slice().to_vec();
        if tight.contains(&i) {
            row.push(0.0);
            sys.push_eq(row, p.rhs()[i]);
        } else {
            row.push(1.0);
            sys.push_ineq(row, p.rhs()[i]);
        }
    }
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    sys.push_ineq(cap, 1.0);
    let c = Vector::basis(n + 1, n).scaled(-1.0);
    match sys.minimize(&c, true) {
        LpOutcome::Optimal { value, .. } => Some(-value),
        _ => None,
    }
}

/// Projection `min ||x - z||` onto `{x : A_S x = b_S}` for linearly independent
/// rows; returns the point and the multipliers `lambda` with `x = z - A_S^T lambda`.
///
/// Uses the SVD pseudo-inverse, `x = z - A^+ (A z - b)`, plus one step of
/// iterative refinement, so the error grows with `cond(A)` rather than its
/// square (as forming `A A^T` would).
pub(crate) fn project_affine(
    rows: &[&[f64]],
    rhs: &[f64],
    z: &Vector,
) -> Option<(Vector, Vec<f64>)> {
    let n = z.dim();
    let k = rows.len();
    if k == 0 {
        return Some((z.clone(), Vec::new()));
    }
    if k > n {
        return None;
    }
    let a = linalg::matrix_from_rows(rows, n);
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    if !(smax > 0.0) || s.min() * linalg::MAX_CONDITION < smax {
        return None;
    }
    let (uk, vt) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
    // A^+ r = V S^-1 U^T r ; (A^T)^+ w = U S^-1 V^T w
    let pinv = |r: &DVector<f64>| -> DVector<f64> {
        let mut c = uk.transpose() * r;
        c.component_div_assign(s);
        vt.transpose() * c
    };
    let b = DVector::from_column_slice(rhs);
    let zv = z.to_dvector();
    let mut x = &zv - pinv(&(&a * &zv - &b));
    x -= pinv(&(&a * &x - &b));
    let mut lambda = vt * (&zv - &x);
    lambda.component_div_assign(s);
    let lambda = uk * lambda;
    Some((Vector::from_dvector(&x), lambda.iter().copied().collect()))
}
