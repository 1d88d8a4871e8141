//! Metric regularity around sharpness: sampled subtransversality constants
//! of `{P, H}` for the supporting hyperplane `H`, and the empirical distance
//! upper bound for points outside `P`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::numkernel::{distance_to_cone, UnitDirection, Vector};
use crate::polyhedron::{face_of, normal_cone_at, realizable_active_sets, Polyhedron, ACTIVE_TOL, SUBSET_MAX_ROWS};
use crate::projection::{project_polyhedron, KKT_TOL};
use crate::sampling;
use crate::sharpness::MEMBERSHIP_TOL;

/// Samples closer than this to the face are skipped (0/0 ratios).
pub const FACE_SKIP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtransReport {
    pub direction: UnitDirection,
    /// `min d(x,P) / d(x,F)` over hyperplane samples; 1 when vacuous.
    pub alpha_sub_est: f64,
    /// `alpha * sqrt(1 - alpha^2/4)`: sharpness implied by the estimate.
    pub gamma_implied: f64,
    /// `2 alpha / (1 - alpha)`: sharpness needed to guarantee the estimate.
    #[serde(with = "crate::extreal")]
    pub beta_required: f64,
    pub samples: usize,
    pub box_radius: f64,
    /// Every sample landed on the face (the hyperplane section is the face itself).
    pub vacuous: bool,
}

/// `gamma = alpha sqrt(1 - alpha^2/4)` and `beta = 2 alpha / (1 - alpha)`.
pub fn theorem_p1_constants(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(constants(alpha))
}

fn constants(alpha: f64) -> (f64, f64) {
    let gamma = alpha * (1.0 - alpha * alpha / 4.0).sqrt();
    let beta = if alpha < 1.0 { 2.0 * alpha / (1.0 - alpha) } else { f64::INFINITY };
    (gamma, beta)
}

/// `alpha' = alpha / (2 + alpha)`, the subtransversality constant that the
/// converse constant `beta` maps back to `alpha`.
pub fn composition_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(alpha / (2.0 + alpha))
}

/// Ten times the face diameter (over its vertices), floored at ten.
pub fn default_box_radius(p: &Polyhedron, x_star: &UnitDirection) -> Result<f64> {
    let face = face_of(p, x_star)?.ok_or(Error::EmptyFace)?.as_polyhedron();
    let verts = face.system().distinct_vertices();
    let mut diam: f64 = 0.0;
    for (i, x) in verts.iter().enumerate() {
        for y in &verts[i + 1..] {
            diam = diam.max(x.dist(y));
        }
    }
    Ok(10.0 * diam.max(1.0))
}

/// Hyperplane sample points `witness + sum c_k e_k`, `|c_k| <= r`, over the
/// box and two shrunken copies of it (ratios are scale-free near the face).
pub fn hyperplane_samples(
    p: &Polyhedron,
    x_star: &UnitDirection,
    box_radius: f64,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<Vector>> {
    x_star.check_dim(p.dim())?;
    if !(box_radius > 0.0 && box_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("box radius must be positive, got {box_radius}")));
    }
    let face = face_of(p, x_star)?.ok_or(Error::EmptyFace)?;
    let basis: Vec<Vector> = linalg::orthogonal_complement(x_star.as_slice())
        .into_iter()
        .map(Vector::raw)
        .collect();
    if basis.is_empty() {
        return Ok(vec![face.witness]);
    }
    let scales = [1.0, 0.1, 0.01];
    let per = num_samples.div_ceil(scales.len());
    let mut out = Vec::with_capacity(per * scales.len());
    for (k, s) in scales.iter().enumerate() {
        out.extend(sampling::box_in_span(&face.witness, &basis, box_radius * s, per, seed.wrapping_add(k as u64)));
    }
    out.truncate(num_samples);
    Ok(out)
}

/// Estimates the largest `alpha` with `alpha d(x, F_P(x*)) <= d(x, P)` on
/// the supporting hyperplane, within a box around a face witness.
pub fn estimate_subtransversality(
    p: &Polyhedron,
    x_star: &UnitDirection,
    box_radius: f64,
    num_samples: usize,
    seed: u64,
) -> Result<SubtransReport> {
    if num_samples < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 samples, got {num_samples}")));
    }
    let face = face_of(p, x_star)?.ok_or(Error::EmptyFace)?.as_polyhedron();
    let mut best = f64::INFINITY;
    let mut used = 0;
    for x in hyperplane_samples(p, x_star, box_radius, num_samples, seed)? {
        let d_face = project_polyhedron(&face, &x, KKT_TOL)?.distance(&x);
        if d_face <= FACE_SKIP_TOL {
            continue;
        }
        let d_set = project_polyhedron(p, &x, KKT_TOL)?.distance(&x);
        used += 1;
        best = best.min(d_set / d_face);
    }
    let vacuous = used == 0;
    let alpha = if vacuous { 1.0 } else { best.min(1.0) };
    let (gamma_implied, beta_required) = constants(alpha);
    Ok(SubtransReport {
        direction: x_star.clone(),
        alpha_sub_est: alpha,
        gamma_implied,
        beta_required,
        samples: used,
        box_radius,
        vacuous,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistBoundReport {
    pub a: Vector,
    pub b: Vector,
    /// `||a - b||`.
    pub rho: f64,
    pub delta: f64,
    /// Sampled infimum of `d((b-x)/||b-x||, N_P(x))` over `B[rho,b] ∩ B(delta,a) ∩ P`.
    pub sampled_inf: f64,
    /// `delta * sampled_inf`.
    pub epsilon: f64,
    pub d_bp: f64,
    /// `d(b,P) <= rho - epsilon + 1e-7`.
    pub verified: bool,
    pub samples: usize,
    pub resampled: bool,
}

/// Slack on the verified inequality.
pub const DIST_BOUND_TOL: f64 = 1e-7;

fn in_region(x: &Vector, a: &Vector, b: &Vector, rho: f64, delta: f64) -> bool {
    x.dist(b) <= rho * (1.0 + 1e-12) && x.dist(a) < delta
}

fn angle_gap(p: &Polyhedron, b: &Vector, x: &Vector) -> Result<f64> {
    let d = b - x;
    let len = d.norm();
    let dir = UnitDirection::new(d.scaled(1.0 / len)).or_else(|_| UnitDirection::normalize(&d))?;
    let tol = ACTIVE_TOL.max(2.0 * p.max_violation(x));
    let cone = normal_cone_at(p, x, tol)?;
    Ok(distance_to_cone(&dir, &cone, MEMBERSHIP_TOL)?.distance)
}

#[allow(clippy::too_many_arguments)]
fn sample_region(
    p: &Polyhedron,
    a: &Vector,
    b: &Vector,
    rho: f64,
    delta: f64,
    proj_b: &Vector,
    num_samples: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    let mut points = vec![a.clone()];
    if in_region(proj_b, a, b, rho, delta) {
        points.push(proj_b.clone());
    }
    let ball = sampling::ball(a, delta, num_samples, seed);
    points.extend(ball.iter().filter(|x| p.contains(x, 0.0) && in_region(x, a, b, rho, delta)).cloned());
    // face samples: ball points pulled onto each realizable face
    if p.num_rows() <= SUBSET_MAX_ROWS {
        for set in realizable_active_sets(p)?.into_iter().filter(|s| !s.is_empty()) {
            let rows: Vec<Vector> = set.iter().map(|&j| -p.row(j)).collect();
            let rhs: Vec<f64> = set.iter().map(|&j| -p.rhs()[j]).collect();
            let face = p.with_rows(rows, rhs)?;
            let per = (num_samples / 8).max(4);
            for z in ball.iter().take(per) {
                let x = project_polyhedron(&face, z, KKT_TOL)?.proj;
                if in_region(&x, a, b, rho, delta) {
                    points.push(x);
                }
            }
        }
    }
    let mut inf = f64::INFINITY;
    for x in &points {
        if x.dist(b) == 0.0 {
            continue;
        }
        inf = inf.min(angle_gap(p, b, x)?);
    }
    Ok((inf, points.len()))
}

/// Empirical distance bound: estimates the infimum in the region, sets
/// `epsilon = delta * inf`, and verifies `d(b,P) <= ||a-b|| - epsilon` by
/// projecting. A failed verification is re-sampled once with four times the
/// samples before being reported.
pub fn distance_upper_bound(
    p: &Polyhedron,
    a: &Vector,
    b: &Vector,
    delta: f64,
    num_samples: usize,
    seed: u64,
) -> Result<DistBoundReport> {
    a.check_dim(p.dim())?;
    b.check_dim(p.dim())?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if num_samples == 0 {
        return Err(Error::InvalidParameter("num_samples must be at least 1".into()));
    }
    if !p.contains(a, 1e-9) {
        return Err(Error::InvalidParameter("a must lie in P".into()));
    }
    if p.contains(b, 0.0) {
        return Err(Error::InvalidParameter("b must lie outside P".into()));
    }
    let rho = a.dist(b);
    let proj_b = project_polyhedron(p, b, KKT_TOL)?.proj;
    let d_bp = proj_b.dist(b);
    let (mut inf, mut samples) = sample_region(p, a, b, rho, delta, &proj_b, num_samples, seed)?;
    let mut ok = d_bp <= rho - delta * inf + DIST_BOUND_TOL;
    let mut resampled = false;
    if !ok {
        resampled = true;
        let (inf2, s2) = sample_region(p, a, b, rho, delta, &proj_b, 4 * num_samples, seed ^ 0x5eed)?;
        inf = inf.min(inf2);
        samples += s2;
        ok = d_bp <= rho - delta * inf + DIST_BOUND_TOL;
    }
    if !inf.is_finite() {
        return Err(Error::DegenerateSampling("no admissible point in the sampling region".into()));
    }
    Ok(DistBoundReport {
        a: a.clone(),
        b: b.clone(),
        rho,
        delta,
        sampled_inf: inf,
        epsilon: delta * inf,
        d_bp,
        verified: ok,
        samples,
        resampled,
    })
}
