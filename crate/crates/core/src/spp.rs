//! The single-projection procedure: minimize `<x*, x>` over `P` by projecting
//! one shifted point `u = v - mu x*`, with the shift certified by the
//! sharpness of `P` w.r.t. `-x*`. Lifted to epigraphs it also minimizes
//! max-affine objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxaffine::MaxAffine;
use crate::numkernel::{distance_to_cone, UnitDirection, Vector};
use crate::polyhedron::enumeration::LpOutcome;
use crate::polyhedron::{
    lp_solve_enumeration, normal_cone_at, realizable_active_sets, LpStatus, Polyhedron, ACTIVE_TOL,
    ORACLE_MAX_DIM, ORACLE_MAX_ROWS,
};
use crate::projection::{lift_epigraph, project_polyhedron, LiftedEpigraph, KKT_TOL};
use crate::sharpness::{sharpness_lower_bound, MEMBERSHIP_TOL};

/// Default tolerance of the optimality certificate `d(-x*, N_P(solution))`.
pub const CERT_TOL: f64 = 1e-9;

/// Allowed gap between the procedure's value and the enumeration oracle's.
pub const ORACLE_VALUE_TOL: f64 = 1e-7;

/// Auto shifts use the sufficient threshold times this factor, making the
/// strict inequality strict in floating point.
pub const MU_SAFETY: f64 = 1.0 + 1e-6;

pub const DEFAULT_MAX_DOUBLINGS: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuChoice {
    Explicit(f64),
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    Explicit(f64),
    /// The subset lower bound of the sharpness modulus w.r.t. `-x*`.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SppOptions {
    pub mu: MuChoice,
    pub alpha: AlphaChoice,
    pub cert_tol: f64,
    pub kkt_tol: f64,
    pub active_tol: f64,
    pub max_doublings: u32,
}

impl Default for SppOptions {
    fn default() -> Self {
        SppOptions {
            mu: MuChoice::Auto,
            alpha: AlphaChoice::Auto,
            cert_tol: CERT_TOL,
            kkt_tol: KKT_TOL,
            active_tol: ACTIVE_TOL,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub cond1: bool,
    pub cond2: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SppReport {
    pub x_star: UnitDirection,
    pub v: Vector,
    /// `inf_P <x*, x - v>`; known only when the enumeration oracle applies.
    pub theta_v: Option<f64>,
    pub d_va: f64,
    pub alpha_used: f64,
    /// `(4 - alpha^2)/alpha^2 * d(v, P)`.
    pub mu_threshold: f64,
    /// `((1 - (alpha/2)^2) d(v,P) - theta(v)) / (alpha/2)^2`, when `theta_v` is known.
    pub mu_lemma: Option<f64>,
    pub mu_used: f64,
    pub u: Vector,
    pub solution: Vector,
    pub value: f64,
    /// `d(-x*, N_P(solution))`.
    pub kkt_certificate: f64,
    /// Both conditions evaluated at the projected point `u`.
    pub conditions: Option<Conditions>,
    pub oracle_value: Option<f64>,
    pub doublings: u32,
    pub projection_iterations: usize,
    pub used_fallback: bool,
}

impl SppReport {
    pub fn certified(&self, cert_tol: f64) -> bool {
        self.kkt_certificate <= cert_tol
            && self
                .oracle_value
                .is_none_or(|o| (o - self.value).abs() <= ORACLE_VALUE_TOL)
    }
}

fn within_oracle_caps(p: &Polyhedron) -> bool {
    p.num_rows() <= ORACLE_MAX_ROWS && p.dim() <= ORACLE_MAX_DIM
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in (0,1], got {alpha}")))
    }
}

/// `min_P <x*, x>` via the enumeration oracle.
fn lp_optimum(p: &Polyhedron, x_star: &UnitDirection) -> Result<f64> {
    let r = lp_solve_enumeration(p, x_star.as_vector())?;
    match r.status {
        LpStatus::Optimal => Ok(r.value.expect("optimal LP has a value")),
        LpStatus::Unbounded => Err(Error::Unbounded),
        LpStatus::Infeasible => Err(Error::Infeasible),
    }
}

/// `theta(v) = inf_P <x*, x - v>`.
pub fn theta(p: &Polyhedron, x_star: &UnitDirection, v: &Vector) -> Result<f64> {
    x_star.check_dim(p.dim())?;
    v.check_dim(p.dim())?;
    Ok(lp_optimum(p, x_star)? - x_star.dot(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub cond1: bool,
    pub cond2: bool,
    pub theta: f64,
    pub d_va: f64,
}

/// Condition 1: `theta(v) > 0`. Condition 2: `(1 - (alpha/2)^2) d(v,P) < theta(v)`.
pub fn check_conditions(p: &Polyhedron, x_star: &UnitDirection, v: &Vector, alpha: f64) -> Result<ConditionCheck> {
    check_alpha(alpha)?;
    let theta = theta(p, x_star, v)?;
    let d_va = project_polyhedron(p, v, KKT_TOL)?.distance(v);
    Ok(ConditionCheck {
        cond1: theta > 0.0,
        cond2: (1.0 - alpha * alpha / 4.0) * d_va < theta,
        theta,
        d_va,
    })
}

/// `mu_0 = ((1 - (alpha/2)^2) d - theta) / (alpha/2)^2`; negative when
/// condition 2 already holds.
pub fn mu_threshold_lemma(theta_v: f64, d_va: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(theta_v > 0.0) {
        return Err(Error::Condition1Violated { theta: theta_v });
    }
    let h2 = alpha * alpha / 4.0;
    Ok(((1.0 - h2) * d_va - theta_v) / h2)
}

/// `(4 - alpha^2)/alpha^2 * d`.
pub fn mu_threshold_prop(d_va: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(d_va >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be nonnegative, got {d_va}")));
    }
    Ok((4.0 - alpha * alpha) / (alpha * alpha) * d_va)
}

fn resolve_alpha(p: &Polyhedron, x_star: &UnitDirection, choice: AlphaChoice) -> Result<f64> {
    match choice {
        AlphaChoice::Explicit(a) => {
            check_alpha(a)?;
            Ok(a)
        }
        AlphaChoice::Auto => Ok(sharpness_lower_bound(p, &x_star.negated())?.alpha_lower),
    }
}

/// One certified single-projection solve from the given `v`.
///
/// When the enumeration oracle applies, boundedness and condition 1 are
/// checked first and the final value is cross-checked against the oracle.
/// A failed certificate is returned as [`Error::CertificateFailed`] with the
/// full report attached.
pub fn solve_lp_spp(p: &Polyhedron, x_star: &UnitDirection, v: &Vector, opts: &SppOptions) -> Result<SppReport> {
    x_star.check_dim(p.dim())?;
    v.check_dim(p.dim())?;
    let oracle_value = if within_oracle_caps(p) {
        Some(lp_optimum(p, x_star)?)
    } else {
        None
    };
    let theta_v = oracle_value.map(|o| o - x_star.dot(v));
    if let Some(t) = theta_v {
        if !(t > 0.0) {
            return Err(Error::Condition1Violated { theta: t });
        }
    }
    let alpha = resolve_alpha(p, x_star, opts.alpha)?;
    solve_with_alpha(p, x_star, v, alpha, oracle_value, opts)
}

/// `d(-x*, N_P(x))` with rows active within `active_tol` (widened to twice
/// the violation of `x`); zero exactly when `x` minimizes `<x*, .>` on `P`.
pub fn optimality_certificate(p: &Polyhedron, x_star: &UnitDirection, x: &Vector, active_tol: f64) -> Result<f64> {
    x_star.check_dim(p.dim())?;
    x.check_dim(p.dim())?;
    let cone = normal_cone_at(p, x, active_tol.max(2.0 * p.max_violation(x)))?;
    Ok(distance_to_cone(&x_star.negated(), &cone, MEMBERSHIP_TOL)?.distance)
}

fn solve_with_alpha(
    p: &Polyhedron,
    x_star: &UnitDirection,
    v: &Vector,
    alpha: f64,
    oracle_value: Option<f64>,
    opts: &SppOptions,
) -> Result<SppReport> {
    let theta_v = oracle_value.map(|o| o - x_star.dot(v));
    let d_va = project_polyhedron(p, v, opts.kkt_tol)?.distance(v);
    let mu_threshold = mu_threshold_prop(d_va, alpha)?;
    let mu_lemma = theta_v.map(|t| mu_threshold_lemma(t, d_va, alpha)).transpose()?;
    let mu_used = match opts.mu {
        MuChoice::Explicit(mu) if mu >= 0.0 && mu.is_finite() => mu,
        MuChoice::Explicit(mu) => {
            return Err(Error::InvalidParameter(format!("mu must be finite and nonnegative, got {mu}")))
        }
        MuChoice::Auto => mu_threshold * MU_SAFETY,
    };
    let u = v.axpy(-mu_used, x_star);
    let proj = project_polyhedron(p, &u, opts.kkt_tol)?;
    let solution = proj.proj.clone();
    let value = x_star.dot(&solution);
    let kkt_certificate = optimality_certificate(p, x_star, &solution, opts.active_tol)?;
    // theta(u) = theta(v) + mu since ||x*|| = 1; d(u,P) is the projection length
    let conditions = theta_v.map(|t| {
        let theta_u = t + mu_used;
        Conditions {
            cond1: theta_u > 0.0,
            cond2: (1.0 - alpha * alpha / 4.0) * proj.distance(&u) < theta_u,
        }
    });
    let report = SppReport {
        x_star: x_star.clone(),
        v: v.clone(),
        theta_v,
        d_va,
        alpha_used: alpha,
        mu_threshold,
        mu_lemma,
        mu_used,
        u,
        solution,
        value,
        kkt_certificate,
        conditions,
        oracle_value,
        doublings: 0,
        projection_iterations: proj.iterations,
        used_fallback: proj.used_fallback,
    };
    if !report.certified(opts.cert_tol) {
        return Err(Error::CertificateFailed {
            certificate: report.kkt_certificate,
            tol: opts.cert_tol,
            report: Box::new(report),
        });
    }
    Ok(report)
}

/// Doubling search: `v_k = base - 2^k x*` for `k = 0, 1, ...` until a solve
/// is certified. `base` defaults to a feasible point of `P`.
pub fn solve_lp_spp_doubling(
    p: &Polyhedron,
    x_star: &UnitDirection,
    base: Option<&Vector>,
    opts: &SppOptions,
) -> Result<SppReport> {
    x_star.check_dim(p.dim())?;
    let base = match base {
        Some(b) => {
            b.check_dim(p.dim())?;
            b.clone()
        }
        None => p.feasible_point()?.ok_or(Error::Infeasible)?,
    };
    let oracle_value = if within_oracle_caps(p) {
        Some(lp_optimum(p, x_star)?)
    } else {
        None
    };
    let alpha = resolve_alpha(p, x_star, opts.alpha)?;
    let mut best: Option<Box<SppReport>> = None;
    for k in 0..=opts.max_doublings {
        let v = base.axpy(-(2f64).powi(k as i32), x_star);
        if let Some(o) = oracle_value {
            if !(o - x_star.dot(&v) > 0.0) {
                continue;
            }
        }
        match solve_with_alpha(p, x_star, &v, alpha, oracle_value, opts) {
            Ok(mut r) => {
                r.doublings = k;
                return Ok(r);
            }
            Err(Error::CertificateFailed { mut report, .. }) => {
                report.doublings = k;
                if best.as_ref().is_none_or(|b| report.kkt_certificate < b.kkt_certificate) {
                    best = Some(report);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::DoublingExhausted {
        doublings: opts.max_doublings,
        best,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VMode {
    /// `v = x_opt - (1 + ||x_opt||) x*` from the enumeration oracle (tests only).
    Oracle,
    /// The `v` accepted by the doubling search.
    Doubling,
}

/// A point satisfying condition 1.
pub fn construct_infeasible_v(p: &Polyhedron, x_star: &UnitDirection, mode: VMode, opts: &SppOptions) -> Result<Vector> {
    match mode {
        VMode::Oracle => {
            let r = lp_solve_enumeration(p, x_star.as_vector())?;
            match r.status {
                LpStatus::Optimal => {
                    let x = r.x_opt.expect("optimal LP has a point");
                    let s = 1.0 + x.norm();
                    Ok(x.axpy(-s, x_star))
                }
                LpStatus::Unbounded => Err(Error::Unbounded),
                LpStatus::Infeasible => Err(Error::Infeasible),
            }
        }
        VMode::Doubling => Ok(solve_lp_spp_doubling(p, x_star, None, opts)?.v),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub lifted: LiftedEpigraph,
    pub v: Vector,
    pub t: f64,
    /// Lifted-LP oracle optimum `min_P f`, when available.
    pub m_est: Option<f64>,
    pub w: Vector,
    pub fw: f64,
    pub spp: SppReport,
}

/// Minimize `f` over `P` by the procedure on the lifted epigraph with
/// direction `(0, ..., 0, 1)`. With both `v` and `t` given a single solve is
/// run from `(v, t)`; otherwise the doubling search starts at
/// `(v or a feasible point, t or f(v))`.
pub fn solve_cp_spp(
    p: &Polyhedron,
    f: &MaxAffine,
    v: Option<&Vector>,
    t: Option<f64>,
    opts: &SppOptions,
) -> Result<CpReport> {
    let lifted = lift_epigraph(p, f)?;
    let n = p.dim();
    let e = UnitDirection::new(Vector::basis(n + 1, n))?;
    if let Some(t) = t {
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("t must be finite, got {t}")));
        }
    }
    let spp = match (v, t) {
        (Some(v), Some(t)) => {
            v.check_dim(n)?;
            solve_lp_spp(&lifted.poly, &e, &v.extended(t), opts)?
        }
        _ => {
            let v0 = match v {
                Some(v) => {
                    v.check_dim(n)?;
                    v.clone()
                }
                None => p.feasible_point()?.ok_or(Error::Infeasible)?,
            };
            let t0 = t.unwrap_or_else(|| f.eval(&v0));
            solve_lp_spp_doubling(&lifted.poly, &e, Some(&v0.extended(t0)), opts)?
        }
    };
    let w = spp.solution.head(n);
    let fw = f.eval(&w);
    if (fw - spp.solution[n]).abs() > 1e-8 * (1.0 + fw.abs()) {
        return Err(Error::CertificateFailed {
            certificate: (fw - spp.solution[n]).abs(),
            tol: 1e-8,
            report: Box::new(spp),
        });
    }
    Ok(CpReport {
        v: spp.v.head(n),
        t: spp.v[n],
        m_est: spp.oracle_value,
        w,
        fw,
        lifted,
        spp,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpigraphCheck {
    /// Sharpness-type condition over non-solution points and solution subgradients.
    pub cond_i: bool,
    /// `f(v) < min_P f`.
    pub cond_a: bool,
    /// `(1 - (alpha/2)^2) d(v,P) < min_P f - f(v)`.
    pub cond_b: bool,
    /// Condition (b) with `d(v,P)` scaled by the largest candidate
    /// subgradient norm. The reduction to the linear case measures `theta`
    /// along `x*/||x*||`, so (b) alone is sound only when `||x*|| <= 1`.
    pub cond_b_scaled: bool,
    pub max_subgradient_norm: f64,
    pub min_value: f64,
    /// The infimum checked by `cond_i`; `+inf` when there is no non-solution face.
    #[serde(with = "crate::extreal")]
    pub sharpness_inf: f64,
    pub f_v: f64,
    pub d_va: f64,
    pub candidates: usize,
    pub non_solution_faces: usize,
}

impl EpigraphCheck {
    pub fn all(&self) -> bool {
        self.cond_i && self.cond_a && self.cond_b && self.cond_b_scaled
    }
}

/// Checks the sufficient conditions under which `P_P(v)` minimizes `f`.
///
/// Subgradients at solutions are taken as the active piece gradients at the
/// vertices of the solution set; non-solution points are represented by the
/// realizable active sets whose closed face leaves the solution set.
pub fn verify_epigraph_conditions(p: &Polyhedron, f: &MaxAffine, v: &Vector, alpha: f64) -> Result<EpigraphCheck> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Error::dims(p.dim(), f.dim())?;
    v.check_dim(p.dim())?;
    let lifted = lift_epigraph(p, f)?;
    let n = p.dim();
    let e = UnitDirection::new(Vector::basis(n + 1, n))?;
    let m_val = lp_optimum(&lifted.poly, &e)?;
    let tol = 1e-9 * (1.0 + m_val.abs());

    // solution set S = P ∩ {f <= M}
    let rows: Vec<Vector> = f.pieces().iter().map(|pc| pc.a.clone()).collect();
    let rhs: Vec<f64> = f.pieces().iter().map(|pc| m_val - pc.c + tol).collect();
    let sol = p.with_rows(rows, rhs)?;
    let mut candidates: Vec<Vector> = Vec::new();
    for y in sol.system().distinct_vertices() {
        for g in f.subgradients(&y, 1e-7 * (1.0 + m_val.abs())) {
            if !candidates.contains(&g) {
                candidates.push(g);
            }
        }
    }

    let mut inf = f64::INFINITY;
    let mut non_solution_faces = 0;
    for set in realizable_active_sets(p)? {
        let mut sys = p.system();
        for &j in &set {
            sys.push_eq(p.row(j).as_slice().to_vec(), p.rhs()[j]);
        }
        let leaves = f.pieces().iter().any(|pc| match sys.minimize(&-&pc.a, false) {
            LpOutcome::Optimal { value, .. } => -value + pc.c > m_val + tol,
            LpOutcome::Unbounded { .. } => true,
            LpOutcome::Infeasible => false,
        });
        if !leaves {
            continue;
        }
        non_solution_faces += 1;
        let cone = p.cone_of(&set);
        for g in &candidates {
            let d = match UnitDirection::normalize(&-g) {
                Ok(dir) => distance_to_cone(&dir, &cone, MEMBERSHIP_TOL)?.distance,
                Err(_) => 0.0,
            };
            inf = inf.min(d);
        }
    }

    let f_v = f.eval(v);
    let d_va = project_polyhedron(p, v, KKT_TOL)?.distance(v);
    let g_max = candidates.iter().map(Vector::norm).fold(0.0, f64::max);
    let lhs = (1.0 - alpha * alpha / 4.0) * d_va;
    Ok(EpigraphCheck {
        cond_i: inf >= alpha,
        cond_a: f_v < m_val,
        cond_b: lhs < m_val - f_v,
        cond_b_scaled: lhs * g_max < m_val - f_v,
        max_subgradient_norm: g_max,
        min_value: m_val,
        sharpness_inf: inf,
        f_v,
        d_va,
        candidates: candidates.len(),
        non_solution_faces,
    })
}
