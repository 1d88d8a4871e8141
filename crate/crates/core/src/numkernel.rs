//! Dense vectors, unit directions, finitely generated cones, and the
//! nonnegative least-squares kernel used for every cone distance.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `| ||v|| - 1 |` accepted by [`UnitDirection::new`].
pub const UNIT_TOL: f64 = 1e-12;

/// Relative dual-feasibility tolerance of the NNLS active-set loop.
pub const NNLS_DUAL_TOL: f64 = 1e-12;

/// NNLS outer-iteration cap is this factor times the number of columns.
pub const NNLS_ITER_FACTOR: usize = 50;

/// A dense real vector with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("vector"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Vector(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// already-validated vectors.
    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()), "{coords:?}");
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector::raw(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Vector) -> Vector {
        Vector::raw(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn normalized(&self) -> Result<UnitDirection> {
        UnitDirection::normalize(self)
    }

    /// Append one coordinate (used by epigraph lifts).
    pub fn extended(&self, last: f64) -> Vector {
        let mut v = self.0.clone();
        v.push(last);
        Vector::raw(v)
    }

    pub fn head(&self, n: usize) -> Vector {
        Vector::raw(self.0[..n].to_vec())
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub(crate) fn from_dvector(v: &DVector<f64>) -> Vector {
        Vector::raw(v.iter().copied().collect())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        Error::dims(dim, self.dim())
    }

    /// Lexicographic comparison used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Vector) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        self.dim().cmp(&other.dim())
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scaled(s)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scaled(-1.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    // hypot-style scaling is unnecessary at desk scale
    dot(a, a).sqrt()
}

/// A vector of unit Euclidean norm.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitDirection(Vector);

impl UnitDirection {
    pub fn new(v: Vector) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(UnitDirection(v))
    }

    /// Rescales a nonzero vector to unit length.
    pub fn normalize(v: &Vector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero vector".into()));
        }
        Ok(UnitDirection(v.scaled(1.0 / norm)))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(Vector::from_slice(coords)?)
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn into_vector(self) -> Vector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn negated(&self) -> UnitDirection {
        UnitDirection(-&self.0)
    }
}

impl TryFrom<Vec<f64>> for UnitDirection {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitDirection::new(Vector::new(v)?)
    }
}

impl From<UnitDirection> for Vec<f64> {
    fn from(u: UnitDirection) -> Self {
        u.0.into_vec()
    }
}

impl Deref for UnitDirection {
    type Target = Vector;
    fn deref(&self) -> &Vector {
        &self.0
    }
}

impl fmt::Debug for UnitDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Finitely generated convex cone `cone[g_1, ..., g_l]`. No generators means `{0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    dim: usize,
    generators: Vec<Vector>,
}

impl Cone {
    pub fn new(dim: usize, generators: Vec<Vector>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("cone dimension"));
        }
        for g in &generators {
            g.check_dim(dim)?;
        }
        Ok(Cone { dim, generators })
    }

    pub fn trivial(dim: usize) -> Self {
        Cone {
            dim,
            generators: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// `true` when `x` lies within `tol` of the cone.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(distance_to_cone(x, self, tol)?.member)
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.generators.len(), |i, j| {
            self.generators[j][i]
        })
    }
}

/// `d(u, cone[v])` for unit vectors: `sqrt(1 - max(0, <u,v>)^2)`.
///
/// Evaluated as `||u - v|| * sqrt((1 + c) / 2)`, which is algebraically
/// identical for unit vectors and keeps full relative accuracy as `c -> 1`.
pub fn distance_to_ray(u: &UnitDirection, v: &UnitDirection) -> Result<f64> {
    Error::dims(u.dim(), v.dim())?;
    let c = u.dot(v);
    if c <= 0.0 {
        return Ok(1.0);
    }
    let d = u.dist(v) * ((1.0 + c.min(1.0)) / 2.0).sqrt();
    Ok(d.min(1.0))
}

/// Distance from `x` to the ray through a (not necessarily unit) generator.
pub fn distance_to_ray_unnormalized(x: &Vector, g: &Vector) -> Result<f64> {
    Error::dims(x.dim(), g.dim())?;
    let gg = g.dot(g);
    if gg == 0.0 {
        return Ok(x.norm());
    }
    let t = (x.dot(g) / gg).max(0.0);
    Ok(x.axpy(-t, g).norm())
}

/// Result of projecting a point onto a finitely generated cone.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeDistance {
    pub distance: f64,
    /// Nonnegative combination weights, one per generator.
    pub coeffs: Vec<f64>,
    /// `distance <= tol`.
    pub member: bool,
}

/// `min_{t >= 0} ||x - G t||` by nonnegative least squares.
pub fn distance_to_cone(x: &Vector, cone: &Cone, tol: f64) -> Result<ConeDistance> {
    Error::dims(cone.dim(), x.dim())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if cone.is_trivial() {
        let distance = x.norm();
        return Ok(ConeDistance {
            distance,
            coeffs: Vec::new(),
            member: distance <= tol,
        });
    }
    let g = cone.matrix();
    let b = x.to_dvector();
    let t = nnls(&g, &b)?;
    let residual = &b - &g * &t;
    let distance = residual.norm();
    Ok(ConeDistance {
        distance,
        coeffs: t.iter().copied().collect(),
        member: distance <= tol,
    })
}

/// `min ||x - sum_i l_i p_i||` over the probability simplex.
pub fn distance_to_convex_hull(x: &Vector, points: &[Vector], tol: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("point list"));
    }
    for p in points {
        Error::dims(x.dim(), p.dim())?;
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if points.len() == 1 {
        return Ok(x.dist(&points[0]));
    }
    let shifted: Vec<Vector> = points.iter().map(|p| p - x).collect();
    Ok(min_norm_in_hull(&shifted)?.norm())
}

/// Minimum-norm point of `conv{q_i}`.
///
/// Solved as NNLS with a heavily weighted affine row, then polished by
/// solving the equality-constrained least-squares problem exactly on the
/// detected support and checking the optimality condition
/// `<q_i - y, y> >= 0` for every point.
pub(crate) fn min_norm_in_hull(q: &[Vector]) -> Result<Vector> {
    let n = q[0].dim();
    let k = q.len();
    let scale = q.iter().map(|p| p.norm()).fold(1.0_f64, f64::max);
    let weight = 1e4 * scale;
    let a = DMatrix::from_fn(n + 1, k, |i, j| if i < n { q[j][i] } else { weight });
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = weight;
    let lambda = nnls(&a, &rhs)?;

    let combine = |w: &[(usize, f64)]| {
        let mut y = vec![0.0; n];
        for &(j, l) in w {
            for (yi, qi) in y.iter_mut().zip(q[j].iter()) {
                *yi += l * qi;
            }
        }
        Vector::raw(y)
    };

    let total: f64 = lambda.iter().sum();
    let rough: Vec<(usize, f64)> = lambda
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > 0.0)
        .map(|(j, l)| (j, l / total))
        .collect();
    let rough_y = combine(&rough);

    // Exact solve on the support: min ||Q_S l|| s.t. 1'l = 1.
    let support: Vec<usize> = rough.iter().map(|(j, _)| *j).collect();
    let s = support.len();
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    for (a_i, &i) in support.iter().enumerate() {
        for (b_i, &j) in support.iter().enumerate() {
            kkt[(a_i, b_i)] = q[i].dot(&q[j]);
        }
        kkt[(a_i, s)] = 1.0;
        kkt[(s, a_i)] = 1.0;
    }
    let mut r = DVector::zeros(s + 1);
    r[s] = 1.0;
    let polished = kkt
        .svd(true, true)
        .solve(&r, 1e-14)
        .ok()
        .filter(|sol| sol.iter().take(s).all(|l| *l >= -1e-12));
    let candidate = match polished {
        Some(sol) => {
            let w: Vec<(usize, f64)> = support
                .iter()
                .enumerate()
                .map(|(a_i, &j)| (j, sol[a_i].max(0.0)))
                .collect();
            combine(&w)
        }
        None => rough_y.clone(),
    };
    let optimal = |y: &Vector| {
        let yy = y.dot(y);
        q.iter().all(|p| p.dot(y) - yy >= -1e-12 * scale * scale)
    };
    if optimal(&candidate) && candidate.norm() <= rough_y.norm() + 1e-9 * scale {
        Ok(candidate)
    } else {
        Ok(rough_y)
    }
}

/// Lawson–Hanson active-set NNLS: `argmin_{t >= 0} ||A t - b||`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    Error::dims(m, b.len())?;
    let mut x = DVector::<f64>::zeros(n);
    if n == 0 {
        return Ok(x);
    }
    let scale = (a.norm() * b.norm()).max(f64::MIN_POSITIVE);
    let dual_tol = NNLS_DUAL_TOL * scale;
    let max_iter = NNLS_ITER_FACTOR * n;

    let mut passive = vec![false; n];
    // columns that were rejected since the last change of x
    let mut blocked = vec![false; n];
    let mut iterations = 0;

    loop {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(j) = candidate.filter(|&j| w[j] > dual_tol) else {
            break;
        };
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::NoConvergence {
                what: "nnls",
                iterations: max_iter,
            });
        }
        passive[j] = true;
        let mut first = true;
        loop {
            let s = solve_passive(a, b, &passive);
            if first && s[j] <= 0.0 {
                // numerically dependent column: reject until x moves
                passive[j] = false;
                blocked[j] = true;
                break;
            }
            first = false;
            let all_positive = (0..n).filter(|&i| passive[i]).all(|i| s[i] > 0.0);
            if all_positive {
                x = s;
                blocked.iter_mut().for_each(|f| *f = false);
                break;
            }
            let mut step = f64::INFINITY;
            for i in (0..n).filter(|&i| passive[i] && s[i] <= 0.0) {
                let denom = x[i] - s[i];
                if denom > 0.0 {
                    step = step.min(x[i] / denom);
                }
            }
            if !step.is_finite() {
                step = 0.0;
            }
            x = &x + (&s - &x) * step;
            for i in 0..n {
                if passive[i] && (x[i] <= 0.0 || (s[i] <= 0.0 && x[i] <= f64::EPSILON * scale)) {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            blocked.iter_mut().for_each(|f| *f = false);
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(x)
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let mut s = DVector::zeros(passive.len());
    if cols.is_empty() {
        return s;
    }
    let sub = a.select_columns(cols.iter());
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    for (k, &c) in cols.iter().enumerate() {
        s[c] = sol[k];
    }
    s
}
