//! Polyhedra `{x : A x <= b}`, active sets, normal cones, faces, and the
//! exhaustive oracles (vertex-enumeration LP, face-enumeration projection)
//! that every fast path is checked against.

mod brute;
pub(crate) mod enumeration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{Cone, UnitDirection, Vector};

pub use brute::{project_brute, BruteProjection};
pub use enumeration::{lp_solve_enumeration, LpResult, LpStatus};

use enumeration::{LinearSystem, LpOutcome};

/// Default tolerance for deciding that a (unit-normalized) row is active.
pub const ACTIVE_TOL: f64 = 1e-8;

/// Exhaustive oracles refuse instances beyond these sizes.
pub const ORACLE_MAX_ROWS: usize = 24;
pub const ORACLE_MAX_DIM: usize = 10;

/// Subset enumerations over rows (2^m) refuse more rows than this.
pub const SUBSET_MAX_ROWS: usize = 20;

/// Slack a row set needs in order to count as exactly realizable.
pub const REALIZE_TOL: f64 = 1e-9;

/// `{x in R^n : <a_i, x> <= b_i}` with every row rescaled to unit norm.
///
/// Row indices are stable: row `i` of the input is row `i` here. The
/// original row norms are kept in `scales` so callers can report them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolyhedron", into = "RawPolyhedron")]
pub struct Polyhedron {
    dim: usize,
    rows: Vec<Vector>,
    rhs: Vec<f64>,
    scales: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawPolyhedron {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// Present in serialized polyhedra: `a`, `b` are then already normalized
    /// and are taken verbatim, so that a round trip is exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scales: Option<Vec<f64>>,
}

impl TryFrom<RawPolyhedron> for Polyhedron {
    type Error = Error;
    fn try_from(raw: RawPolyhedron) -> Result<Self> {
        let Some(scales) = raw.scales else {
            return Polyhedron::new(raw.a, raw.b);
        };
        let p = Polyhedron::new(raw.a.clone(), raw.b.clone())?;
        Error::dims(p.num_rows(), scales.len())?;
        if let Some(i) = scales.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!("scale {i} must be positive and finite")));
        }
        let rows: Vec<Vector> = raw.a.into_iter().map(Vector::new).collect::<Result<_>>()?;
        if let Some(i) = rows.iter().position(|r| (r.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidParameter(format!("row {i} is not unit-normalized")));
        }
        Ok(Polyhedron {
            dim: p.dim,
            rows,
            rhs: raw.b,
            scales,
        })
    }
}

impl From<Polyhedron> for RawPolyhedron {
    fn from(p: Polyhedron) -> Self {
        RawPolyhedron {
            a: p.rows.into_iter().map(Vector::into_vec).collect(),
            b: p.rhs,
            scales: Some(p.scales),
        }
    }
}

impl Polyhedron {
    /// Builds `{x : A x <= b}` from row-major `a`.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Empty("constraint matrix"));
        }
        let rows = a
            .into_iter()
            .map(Vector::new)
            .collect::<Result<Vec<_>>>()?;
        let rhs = Vector::new(b)?.into_vec();
        Self::from_rows(rows, rhs)
    }

    pub fn from_rows(rows: Vec<Vector>, rhs: Vec<f64>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Empty("constraint matrix"));
        };
        let dim = first.dim();
        Error::dims(rows.len(), rhs.len())?;
        if let Some(i) = rhs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut out_rows = Vec::with_capacity(rows.len());
        let mut out_rhs = Vec::with_capacity(rows.len());
        let mut scales = Vec::with_capacity(rows.len());
        for (i, (row, b)) in rows.into_iter().zip(rhs).enumerate() {
            row.check_dim(dim)?;
            let s = row.norm();
            if s == 0.0 {
                return Err(Error::ZeroRow(i));
            }
            out_rows.push(row.scaled(1.0 / s));
            out_rhs.push(b / s);
            scales.push(s);
        }
        Ok(Polyhedron {
            dim,
            rows: out_rows,
            rhs: out_rhs,
            scales,
        })
    }

    /// The nonnegative orthant encoded as `-I x <= 0`.
    pub fn nonnegative_orthant(dim: usize) -> Self {
        let rows = (0..dim).map(|i| -&Vector::basis(dim, i)).collect();
        Self::from_rows(rows, vec![0.0; dim]).expect("orthant is well formed")
    }

    /// The box `[-r, r]^n`.
    pub fn cube(dim: usize, radius: f64) -> Self {
        let mut rows = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            rows.push(Vector::basis(dim, i));
            rows.push(-&Vector::basis(dim, i));
        }
        Self::from_rows(rows, vec![radius; 2 * dim]).expect("box is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Vector {
        &self.rows[i]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Norms of the input rows before normalization.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// `b_i - <a_i, x>`.
    pub fn slack(&self, i: usize, x: &Vector) -> f64 {
        self.rhs[i] - self.rows[i].dot(x)
    }

    /// Largest constraint violation `max_i (<a_i,x> - b_i)`, at least 0.
    pub fn max_violation(&self, x: &Vector) -> f64 {
        (0..self.num_rows())
            .map(|i| -self.slack(i, x))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.dim() == self.dim && self.max_violation(x) <= tol
    }

    /// Appends rows (normalized like the originals) and returns the new polyhedron.
    pub fn with_rows(&self, rows: Vec<Vector>, rhs: Vec<f64>) -> Result<Polyhedron> {
        let extra = Polyhedron::from_rows(rows, rhs)?;
        Error::dims(self.dim, extra.dim)?;
        let mut p = self.clone();
        p.rows.extend(extra.rows);
        p.rhs.extend(extra.rhs);
        p.scales.extend(extra.scales);
        Ok(p)
    }

    /// Image under `x -> -x`.
    pub fn reflected(&self) -> Polyhedron {
        Polyhedron {
            dim: self.dim,
            rows: self.rows.iter().map(|r| -r).collect(),
            rhs: self.rhs.clone(),
            scales: self.scales.clone(),
        }
    }

    pub(crate) fn check_oracle_caps(&self) -> Result<()> {
        if self.num_rows() > ORACLE_MAX_ROWS || self.dim > ORACLE_MAX_DIM {
            return Err(Error::TooLarge {
                m: self.num_rows(),
                n: self.dim,
                max_m: ORACLE_MAX_ROWS,
                max_n: ORACLE_MAX_DIM,
            });
        }
        Ok(())
    }

    pub(crate) fn check_subset_caps(&self) -> Result<()> {
        if self.num_rows() > SUBSET_MAX_ROWS || self.dim > ORACLE_MAX_DIM {
            return Err(Error::TooLarge {
                m: self.num_rows(),
                n: self.dim,
                max_m: SUBSET_MAX_ROWS,
                max_n: ORACLE_MAX_DIM,
            });
        }
        Ok(())
    }

    pub(crate) fn system(&self) -> LinearSystem {
        LinearSystem::from_polyhedron(self)
    }

    /// Cone generated by the rows in `indices`.
    pub fn cone_of(&self, indices: &[usize]) -> Cone {
        Cone::new(self.dim, indices.iter().map(|&i| self.rows[i].clone()).collect())
            .expect("rows share the polyhedron dimension")
    }

    /// A feasible point (the lexicographically smallest vertex of the
    /// pointed part), or `None` when the polyhedron is empty.
    pub fn feasible_point(&self) -> Result<Option<Vector>> {
        self.check_oracle_caps()?;
        Ok(self.system().feasible_point())
    }

    /// `true` when every coordinate direction has a finite LP optimum.
    pub fn is_bounded(&self) -> Result<bool> {
        self.check_oracle_caps()?;
        let sys = self.system();
        for i in 0..self.dim {
            for s in [1.0, -1.0] {
                let c = Vector::basis(self.dim, i).scaled(s);
                match sys.minimize(&c, false) {
                    LpOutcome::Optimal { .. } => {}
                    LpOutcome::Unbounded { .. } => return Ok(false),
                    LpOutcome::Infeasible => return Err(Error::Infeasible),
                }
            }
        }
        Ok(true)
    }
}

/// Rows active at a point, the set `I(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub at: Vector,
    pub tol: f64,
}

impl ActiveSet {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// All rows within `tol` of equality at `x`; errors if `x` is infeasible by more than `tol`.
pub fn active_set(p: &Polyhedron, x: &Vector, tol: f64) -> Result<ActiveSet> {
    x.check_dim(p.dim())?;
    let mut indices = Vec::new();
    for i in 0..p.num_rows() {
        let s = p.slack(i, x);
        if s < -tol {
            return Err(Error::InfeasiblePoint { row: i, excess: -s });
        }
        if s <= tol {
            indices.push(i);
        }
    }
    Ok(ActiveSet {
        indices,
        at: x.clone(),
        tol,
    })
}

/// `N_P(x) = cone[a_i : i in I(x)]`; `{0}` at interior points.
pub fn normal_cone_at(p: &Polyhedron, x: &Vector, tol: f64) -> Result<Cone> {
    let act = active_set(p, x, tol)?;
    Ok(p.cone_of(&act.indices))
}

/// Value of `sup_{y in P} <v, y>`: finite, or `+inf` when unbounded.
pub fn support_function(p: &Polyhedron, v: &Vector) -> Result<f64> {
    v.check_dim(p.dim())?;
    let r = lp_solve_enumeration(p, &-v)?;
    match r.status {
        LpStatus::Optimal => Ok(-r.value.expect("optimal LP has a value")),
        LpStatus::Unbounded => Ok(f64::INFINITY),
        LpStatus::Infeasible => Err(Error::Infeasible),
    }
}

/// The exposed face `F_P(x*) = argmax_P <x*, .>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceDescription {
    pub base: Polyhedron,
    pub direction: UnitDirection,
    /// Rows of `base` that hold with equality on the whole face.
    pub equalities: Vec<usize>,
    /// `sigma_P(x*)`.
    pub optimal_value: f64,
    /// A vertex of the face.
    pub witness: Vector,
}

impl FaceDescription {
    /// The face as a polyhedron: `base` plus `<x*,x> <= sigma` and `-<x*,x> <= -sigma`.
    pub fn as_polyhedron(&self) -> Polyhedron {
        let d = self.direction.as_vector().clone();
        self.base
            .with_rows(vec![d.clone(), -&d], vec![self.optimal_value, -self.optimal_value])
            .expect("direction has the base dimension")
    }

    /// Whether `x` (assumed in `base`) lies on the face within `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.base.contains(x, tol) && (self.direction.dot(x) - self.optimal_value).abs() <= tol
    }

    /// `true` when the two faces share a point, decided by LP feasibility of
    /// both bases with each face cut `<x*, x> >= sigma` relaxed by
    /// [`REALIZE_TOL`] (relative). The cuts are inequalities rather than
    /// equalities so that nearly parallel directions stay well conditioned.
    pub fn intersects(&self, other: &FaceDescription) -> bool {
        let mut sys = self.base.system();
        if other.base != self.base {
            for (row, b) in other.base.rows().iter().zip(other.base.rhs()) {
                sys.push_ineq(row.as_slice().to_vec(), *b);
            }
        }
        for f in [self, other] {
            let cut: Vec<f64> = f.direction.iter().map(|c| -c).collect();
            let slack = REALIZE_TOL * (1.0 + f.optimal_value.abs());
            sys.push_ineq(cut, -f.optimal_value + slack);
        }
        sys.feasible_point().is_some()
    }
}

/// `F_P(x*)`, or `None` when `sup_P <x*,.> = +inf`.
pub fn face_of(p: &Polyhedron, x_star: &UnitDirection) -> Result<Option<FaceDescription>> {
    x_star.check_dim(p.dim())?;
    p.check_oracle_caps()?;
    let sys = p.system();
    let (witness, value) = match sys.minimize(&-x_star.as_vector(), false) {
        LpOutcome::Optimal { x, value } => (x, -value),
        LpOutcome::Unbounded { .. } => return Ok(None),
        LpOutcome::Infeasible => return Err(Error::Infeasible),
    };
    let mut face_sys = sys.clone();
    face_sys.push_eq(x_star.as_slice().to_vec(), value);
    let equalities = (0..p.num_rows())
        .filter(|&i| match face_sys.minimize(p.row(i), false) {
            // min <a_i, x> over the face equals b_i  <=>  row i is tight everywhere
            LpOutcome::Optimal { value, .. } => p.rhs()[i] - value <= REALIZE_TOL,
            _ => false,
        })
        .collect();
    Ok(Some(FaceDescription {
        base: p.clone(),
        direction: x_star.clone(),
        equalities,
        optimal_value: value,
        witness,
    }))
}

/// Whether some `x in P` has active set exactly `rows` (all listed rows
/// tight, every other row strictly slack by more than [`REALIZE_TOL`]).
pub fn is_realizable(p: &Polyhedron, rows: &[usize]) -> Result<bool> {
    p.check_oracle_caps()?;
    Ok(enumeration::max_uniform_slack(p, rows)
        .is_some_and(|s| s > REALIZE_TOL))
}

/// Every row set that occurs as an exact active set `I(x)` for some `x in P`.
///
/// Sets are returned sorted, in increasing bitmask order.
pub fn realizable_active_sets(p: &Polyhedron) -> Result<Vec<Vec<usize>>> {
    p.check_subset_caps()?;
    let m = p.num_rows();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << m) {
        let rows = mask_to_indices(mask, m);
        if is_realizable(p, &rows)? {
            out.push(rows);
        }
    }
    Ok(out)
}

pub(crate) fn mask_to_indices(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|&i| mask & (1 << i) != 0).collect()
}
