//! Independent re-checks of stored reports: every claim a report makes is
//! recomputed from its embedded problem, never trusted.

use anyhow::{bail, Context, Result};
use spp_core::polyhedron::{ORACLE_MAX_DIM, ORACLE_MAX_ROWS};
use spp_core::regularity::{estimate_subtransversality, theorem_p1_constants};
use spp_core::sharpness::{sharpness_dual_estimate, sharpness_exact, sharpness_lower_bound};
use spp_core::spp::{optimality_certificate, ORACLE_VALUE_TOL};
use spp_core::{
    lift_epigraph, lp_solve_enumeration, project_brute, project_polyhedron, projection_residual, Polyhedron,
    SppReport, UnitDirection, Vector,
};

use crate::commands;
use crate::problem::ProblemFile;
use crate::report::{Body, Check, Config, RunReport, Status, VerifySummary, SCHEMA_VERSION};

/// Feasibility slack allowed for reported points.
const FEAS_TOL: f64 = 1e-9;
/// Agreement required between stored and recomputed deterministic values.
const REPRO_TOL: f64 = 1e-12;

struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn close(&mut self, name: &str, stored: f64, recomputed: f64, tol: f64) {
        let same = stored == recomputed || (stored - recomputed).abs() <= tol * (1.0 + recomputed.abs());
        self.add(name, same, format!("stored {stored:e}, recomputed {recomputed:e}"));
    }
}

fn within_caps(p: &Polyhedron) -> bool {
    p.num_rows() <= ORACLE_MAX_ROWS && p.dim() <= ORACLE_MAX_DIM
}

fn problem(r: &RunReport) -> Result<(&ProblemFile, Polyhedron)> {
    let pf = r.problem.as_ref().context("report has no embedded problem")?;
    pf.validate()?;
    let p = pf.polyhedron()?;
    Ok((pf, p))
}

fn projection_of(p: &Polyhedron, z: &Vector, tol: f64) -> Result<Vector> {
    Ok(if within_caps(p) {
        project_brute(p, z)?.proj
    } else {
        project_polyhedron(p, z, tol)?.proj
    })
}

/// Re-checks an SPP report on `p` in direction `x`; returns whether the
/// certificate (and the oracle value, when available) passes.
fn check_spp(c: &mut Checks, p: &Polyhedron, x: &UnitDirection, s: &SppReport, config: &Config) -> Result<bool> {
    c.add(
        "direction",
        s.x_star.as_vector().dist(x.as_vector()) <= REPRO_TOL,
        "objective direction matches the problem".into(),
    );
    let u = s.v.axpy(-s.mu_used, &s.x_star);
    c.add("shift", u == s.u, format!("u = v - {} x*", s.mu_used));
    c.add(
        "feasible",
        p.max_violation(&s.solution) <= FEAS_TOL,
        format!("max violation {:e}", p.max_violation(&s.solution)),
    );
    let proj = projection_of(p, &s.u, config.tol)?;
    let gap = proj.dist(&s.solution);
    c.add("projection", gap <= 1e-7, format!("solution is P(u) within {gap:e}"));
    c.close("value", s.value, s.x_star.dot(&s.solution), REPRO_TOL);
    let cert = optimality_certificate(p, &s.x_star, &s.solution, config.active_tol)?;
    c.close("certificate value", s.kkt_certificate, cert, 1e-9);
    let mut ok = cert <= config.tol;
    if within_caps(p) {
        let oracle = lp_solve_enumeration(p, s.x_star.as_vector())?
            .value
            .context("oracle found no optimum")?;
        let gap = (oracle - s.value).abs();
        ok &= gap <= ORACLE_VALUE_TOL;
        c.add("oracle", true, format!("value gap to enumeration optimum {gap:e}"));
    }
    Ok(ok)
}

pub fn verify(r: &RunReport) -> Result<VerifySummary> {
    if r.schema_version != SCHEMA_VERSION {
        bail!("schema_version {} is not supported (expected {SCHEMA_VERSION})", r.schema_version);
    }
    let mut c = Checks(Vec::new());
    if let Some(scales) = &r.row_scales {
        let (_, p) = problem(r)?;
        c.add("row scales", scales.as_slice() == p.scales(), "recorded row norms match".into());
    }
    let config = &r.config;
    let claims_ok = match &r.report {
        Body::Project { z, result } => {
            let (_, p) = problem(r)?;
            let x = &result.proj;
            c.add("feasible", p.max_violation(x) <= FEAS_TOL, format!("max violation {:e}", p.max_violation(x)));
            let res = projection_residual(&p, z, x)?;
            c.close("residual value", result.residual_normal, res, 1e-9);
            let best = projection_of(&p, z, config.tol)?;
            let gap = best.dist(x);
            c.add("projection", gap <= 1e-7, format!("distance to the exact projection {gap:e}"));
            res <= config.tol
        }
        Body::Sharpness(s) => {
            let (_, p) = problem(r)?;
            let lo = sharpness_lower_bound(&p, &s.direction)?;
            c.close("lower bound", s.alpha_lower, lo.alpha_lower, REPRO_TOL);
            if let Some(a) = s.alpha_exact {
                let ex = sharpness_exact(&p, &s.direction)?.alpha_exact.unwrap_or(f64::INFINITY);
                c.close("exact modulus", a, ex, REPRO_TOL);
                c.add("ordering", s.alpha_lower <= a + 1e-10, "lower bound <= exact".into());
            }
            if let Some(d) = s.dual_estimate {
                let est = sharpness_dual_estimate(&p, &s.direction, s.samples, r.seed)?;
                c.close("dual estimate", d, est, REPRO_TOL);
            }
            true
        }
        Body::SolveLp {
            objective_scale,
            objective_value,
            spp,
        } => {
            let (pf, p) = problem(r)?;
            let (x, scale) = pf.linear_direction()?;
            c.close("objective scale", *objective_scale, scale, REPRO_TOL);
            c.close("objective value", *objective_value, scale * spp.value, REPRO_TOL);
            check_spp(&mut c, &p, &x, spp, config)?
        }
        Body::SolveCp(cp) => {
            let (pf, p) = problem(r)?;
            let f = pf.max_affine()?;
            let lifted = lift_epigraph(&p, &f)?;
            c.add("lift", lifted == cp.lifted, "lifted epigraph matches the problem".into());
            let n = p.dim();
            let e = UnitDirection::new(Vector::basis(n + 1, n))?;
            c.add("minimizer", cp.w == cp.spp.solution.head(n), "w is the head of the lifted solution".into());
            c.close("f(w)", cp.fw, f.eval(&cp.w), REPRO_TOL);
            let s = cp.spp.solution[n];
            let lands = (cp.fw - s).abs() <= 1e-8 * (1.0 + cp.fw.abs());
            c.add("graph landing", lands, format!("|f(w) - s| = {:e}", (cp.fw - s).abs()));
            check_spp(&mut c, &lifted.poly, &e, &cp.spp, config)? && lands
        }
        Body::Failed { spp, .. } => {
            let (pf, p) = problem(r)?;
            match spp {
                Some(s) => {
                    if r.command.name == "solve-cp" {
                        let f = pf.max_affine()?;
                        let lifted = lift_epigraph(&p, &f)?;
                        let n = p.dim();
                        let e = UnitDirection::new(Vector::basis(n + 1, n))?;
                        let fw = f.eval(&s.solution.head(n));
                        let lands = (fw - s.solution[n]).abs() <= 1e-8 * (1.0 + fw.abs());
                        check_spp(&mut c, &lifted.poly, &e, s, config)? && lands
                    } else {
                        check_spp(&mut c, &p, &pf.linear_direction()?.0, s, config)?
                    }
                }
                None => false,
            }
        }
        Body::DistBound(d) => {
            let (_, p) = problem(r)?;
            c.add("a in P", p.max_violation(&d.a) <= FEAS_TOL, format!("max violation {:e}", p.max_violation(&d.a)));
            c.close("rho", d.rho, d.a.dist(&d.b), REPRO_TOL);
            c.close("epsilon", d.epsilon, d.delta * d.sampled_inf, REPRO_TOL);
            let dbp = projection_of(&p, &d.b, config.tol)?.dist(&d.b);
            c.close("d(b,P)", d.d_bp, dbp, 1e-9);
            let holds = dbp <= d.rho - d.epsilon + 1e-7;
            c.add("verified flag", d.verified == holds, format!("d(b,P) <= rho - epsilon + 1e-7 is {holds}"));
            holds
        }
        Body::Subtrans(s) => {
            let (_, p) = problem(r)?;
            let a = s.alpha_sub_est;
            if a < 1.0 {
                let (gamma, beta) = theorem_p1_constants(a)?;
                c.close("gamma", s.gamma_implied, gamma, REPRO_TOL);
                c.close("beta", s.beta_required, beta, REPRO_TOL);
            } else {
                c.add("beta", s.beta_required.is_infinite(), "beta is +inf at alpha = 1".into());
            }
            let again = estimate_subtransversality(&p, &s.direction, s.box_radius, config.samples, r.seed)?;
            c.close("estimate", a, again.alpha_sub_est, REPRO_TOL);
            true
        }
        Body::Verify(v) => {
            let all = v.checks.iter().all(|k| k.passed);
            c.add("summary", v.passed == all, "passed flag agrees with the checks".into());
            all
        }
        Body::Bench(b) => {
            let again = commands::bench_summary(b.n, b.m, b.count, r.seed, config)?;
            c.add("rerun", &again == b, "re-running the seeded bench reproduces the summary".into());
            b.failures.is_empty()
        }
        Body::Gen { index, instance_seed } => {
            let (pf, _) = problem(r)?;
            let (again, seed) = commands::generate(pf.n, pf.a.len(), r.seed, *index)?;
            c.add("regenerated", &again == pf && seed == *instance_seed, "seed and index reproduce the problem".into());
            true
        }
    };
    let status_ok = (r.status == Status::Ok) == claims_ok;
    c.add(
        "status",
        status_ok,
        format!("stored status {:?}, recomputed certificate {}", r.status, if claims_ok { "passes" } else { "fails" }),
    );
    let passed = c.0.iter().all(|k| k.passed);
    Ok(VerifySummary {
        target: r.command.name.clone(),
        checks: c.0,
        passed,
    })
}
