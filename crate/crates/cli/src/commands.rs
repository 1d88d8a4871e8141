//! Subcommand implementations and the text renderer.

use anyhow::{bail, Context, Result};
use spp_core::instances::random_lp;
use spp_core::regularity::{default_box_radius, distance_upper_bound, estimate_subtransversality};
use spp_core::sampling;
use spp_core::sharpness::{sharpness_dual_estimate, sharpness_exact, sharpness_lower_bound};
use spp_core::spp::{solve_cp_spp, solve_lp_spp, solve_lp_spp_doubling, AlphaChoice, MuChoice, SppOptions};
use spp_core::{
    lp_solve_enumeration, project_brute, project_polyhedron, Error, Polyhedron, UnitDirection, Vector,
};

use crate::problem::{Objective, ProblemFile};
use crate::report::{BenchFailure, BenchSummary, Body, Config, RunReport, Status};
use crate::{verify, Command, GlobalOpts};

/// Sizes up to which exact (all-subset) quantities are computed.
const EXACT_MAX_ROWS: usize = spp_core::polyhedron::SUBSET_MAX_ROWS;

pub struct Outcome {
    pub config: Config,
    pub status: Status,
    pub problem: Option<ProblemFile>,
    pub row_scales: Option<Vec<f64>>,
    pub body: Body,
}

impl Outcome {
    fn ok(config: Config, body: Body) -> Self {
        Outcome {
            config,
            status: Status::Ok,
            problem: None,
            row_scales: None,
            body,
        }
    }

    fn with_problem(mut self, file: ProblemFile, p: &Polyhedron) -> Self {
        self.row_scales = Some(p.scales().to_vec());
        self.problem = Some(file);
        self
    }

    fn failed_if(mut self, failed: bool) -> Self {
        if failed {
            self.status = Status::CertificateFailed;
        }
        self
    }
}

pub fn spp_options(config: &Config) -> SppOptions {
    SppOptions {
        mu: config.mu,
        alpha: config.alpha,
        cert_tol: config.tol,
        kkt_tol: config.tol,
        active_tol: config.active_tol,
        max_doublings: config.max_doublings,
    }
}

fn vector(xs: &[f64]) -> Result<Vector> {
    Ok(Vector::from_slice(xs)?)
}

/// Flags win over file values; file values win over `auto`.
fn resolve(mut config: Config, g: &GlobalOpts, file: &ProblemFile) -> Config {
    if g.mu.is_none() {
        if let Some(mu) = file.mu {
            config.mu = MuChoice::Explicit(mu);
        }
    }
    if g.alpha.is_none() {
        if let Some(a) = file.alpha {
            config.alpha = AlphaChoice::Explicit(a);
        }
    }
    config
}

/// Report body for a solve that ended without a passing certificate, or the
/// error itself when there is nothing to report.
fn failure(e: Error) -> Result<Body> {
    match e {
        Error::CertificateFailed { certificate, tol, report } => Ok(Body::Failed {
            reason: format!("certificate {certificate:e} exceeds tolerance {tol:e}"),
            spp: Some(*report),
        }),
        Error::DoublingExhausted { doublings, best } => Ok(Body::Failed {
            reason: format!("no certified solution after {doublings} doublings"),
            spp: best.map(|b| *b),
        }),
        e => Err(e.into()),
    }
}

pub fn run(cmd: &Command, g: &GlobalOpts, config: Config) -> Result<Outcome> {
    match cmd {
        Command::Project { file, point } => {
            let pf = ProblemFile::read(file)?;
            let p = pf.polyhedron()?;
            let z = match point {
                Some(z) => vector(z)?,
                None => pf.require_v().context("use --point or give `v` in the file")?,
            };
            let result = project_polyhedron(&p, &z, config.tol)?;
            Ok(Outcome::ok(config, Body::Project { z, result }).with_problem(pf, &p))
        }
        Command::Sharpness { file, negate } => {
            let pf = ProblemFile::read(file)?;
            let p = pf.polyhedron()?;
            let (mut x, _) = pf.linear_direction()?;
            if *negate {
                x = x.negated();
            }
            let mut rep = if p.num_rows() <= EXACT_MAX_ROWS {
                sharpness_exact(&p, &x)?
            } else {
                sharpness_lower_bound(&p, &x)?
            };
            if p.is_bounded()? {
                rep.dual_estimate = Some(sharpness_dual_estimate(&p, &x, config.samples, g.seed)?);
                rep.samples = config.samples;
            }
            Ok(Outcome::ok(config, Body::Sharpness(rep)).with_problem(pf, &p))
        }
        Command::SolveLp { file } => {
            let pf = ProblemFile::read(file)?;
            let config = resolve(config, g, &pf);
            let p = pf.polyhedron()?;
            let (x, scale) = pf.linear_direction()?;
            let opts = spp_options(&config);
            let res = match pf.point_v()? {
                Some(v) => solve_lp_spp(&p, &x, &v, &opts),
                None => solve_lp_spp_doubling(&p, &x, None, &opts),
            };
            let (body, failed) = match res {
                Ok(spp) => (
                    Body::SolveLp {
                        objective_scale: scale,
                        objective_value: scale * spp.value,
                        spp,
                    },
                    false,
                ),
                Err(e) => (failure(e)?, true),
            };
            Ok(Outcome::ok(config, body).with_problem(pf, &p).failed_if(failed))
        }
        Command::SolveCp { file } => {
            let pf = ProblemFile::read(file)?;
            let config = resolve(config, g, &pf);
            let p = pf.polyhedron()?;
            let f = pf.max_affine()?;
            let v = pf.point_v()?;
            let (body, failed) = match solve_cp_spp(&p, &f, v.as_ref(), pf.t, &spp_options(&config)) {
                Ok(r) => (Body::SolveCp(r), false),
                Err(e) => (failure(e)?, true),
            };
            Ok(Outcome::ok(config, body).with_problem(pf, &p).failed_if(failed))
        }
        Command::DistBound { file, a, b, delta } => {
            let pf = ProblemFile::read(file)?;
            let p = pf.polyhedron()?;
            let b = match b {
                Some(b) => vector(b)?,
                None => pf.require_v().context("use --b or give `v` in the file")?,
            };
            let a = match a {
                Some(a) => vector(a)?,
                None => p.feasible_point()?.ok_or(Error::Infeasible)?,
            };
            let rep = distance_upper_bound(&p, &a, &b, *delta, config.samples, g.seed)?;
            let failed = !rep.verified;
            Ok(Outcome::ok(config, Body::DistBound(rep)).with_problem(pf, &p).failed_if(failed))
        }
        Command::Subtrans { file, negate, box_radius } => {
            let pf = ProblemFile::read(file)?;
            let p = pf.polyhedron()?;
            let (mut x, _) = pf.linear_direction()?;
            if *negate {
                x = x.negated();
            }
            let r = match box_radius {
                Some(r) => *r,
                None => default_box_radius(&p, &x)?,
            };
            let rep = estimate_subtransversality(&p, &x, r, config.samples, g.seed)?;
            Ok(Outcome::ok(config, Body::Subtrans(rep)).with_problem(pf, &p))
        }
        Command::Verify { report } => {
            let text = std::fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
            let stored: RunReport =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", report.display()))?;
            let summary = verify::verify(&stored)?;
            let failed = !summary.passed;
            Ok(Outcome::ok(config, Body::Verify(summary)).failed_if(failed))
        }
        Command::Bench { n, m, count } => {
            let summary = bench_summary(*n, *m, *count, g.seed, &config)?;
            let failed = !summary.failures.is_empty();
            Ok(Outcome::ok(config, Body::Bench(summary)).failed_if(failed))
        }
        Command::Gen { n, m, index, out } => {
            let (pf, instance_seed) = generate(*n, *m, g.seed, *index)?;
            let p = pf.polyhedron()?;
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&pf)?;
                std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Outcome::ok(config, Body::Gen { index: *index, instance_seed }).with_problem(pf, &p))
        }
    }
}

/// The `index`-th problem of the seeded family, with normalized rows.
pub fn generate(n: usize, m: usize, seed: u64, index: u64) -> Result<(ProblemFile, u64)> {
    if n == 0 || n > spp_core::polyhedron::ORACLE_MAX_DIM {
        bail!("--n must lie in 1..={}", spp_core::polyhedron::ORACLE_MAX_DIM);
    }
    let inst = random_lp(seed, index, n, m)?;
    let pf = ProblemFile {
        n,
        a: inst.p.rows().iter().map(|r| r.as_slice().to_vec()).collect(),
        b: inst.p.rhs().to_vec(),
        objective: Some(Objective::Linear(inst.x_star.as_vector().as_slice().to_vec())),
        v: None,
        t: None,
        mu: None,
        alpha: None,
    };
    Ok((pf, inst.seed))
}

pub fn bench_summary(n: usize, m: usize, count: u64, seed: u64, config: &Config) -> Result<BenchSummary> {
    let opts = spp_options(config);
    let mut s = BenchSummary {
        n,
        m,
        count,
        matches: 0,
        failures: Vec::new(),
        max_value_gap: 0.0,
        max_projection_gap: 0.0,
        total_doublings: 0,
        fallbacks: 0,
    };
    for i in 0..count {
        let (pf, _) = generate(n, m, seed, i)?;
        let p = pf.polyhedron()?;
        let (x, _) = pf.linear_direction()?;
        let oracle = lp_solve_enumeration(&p, x.as_vector())?.value.context("bounded instance has an optimum")?;
        let value_fail = match solve_lp_spp_doubling(&p, &x, None, &opts) {
            Ok(r) => {
                let gap = (r.value - oracle).abs();
                s.max_value_gap = s.max_value_gap.max(gap);
                s.total_doublings += u64::from(r.doublings);
                s.fallbacks += u64::from(r.used_fallback);
                (gap > spp_core::spp::ORACLE_VALUE_TOL).then(|| format!("value gap {gap:e}"))
            }
            Err(e) => Some(format!("solve: {e}")),
        };
        let value_ok = value_fail.is_none();
        if let Some(reason) = value_fail {
            s.failures.push(BenchFailure { index: i, reason });
        }
        let z = &sampling::ball(&Vector::zeros(n), 3.0, 1, seed ^ i)[0];
        let a = project_polyhedron(&p, z, config.tol)?.proj;
        let b = project_brute(&p, z)?.proj;
        let gap = a.dist(&b);
        s.max_projection_gap = s.max_projection_gap.max(gap);
        let proj_ok = gap <= 1e-7;
        if !proj_ok {
            s.failures.push(BenchFailure {
                index: i,
                reason: format!("projection gap {gap:e}"),
            });
        }
        s.matches += u64::from(value_ok && proj_ok);
    }
    Ok(s)
}

fn fmt_vec(v: &Vector) -> String {
    // `+ 0.0` turns -0 into 0
    let parts: Vec<String> = v.iter().map(|x| format!("{:.9}", x + 0.0)).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_dir(d: &UnitDirection) -> String {
    fmt_vec(d.as_vector())
}

pub fn render_text(r: &RunReport, use_color: bool) -> String {
    let status = match r.status {
        Status::Ok => crate::color(use_color, "32", "ok"),
        Status::CertificateFailed => crate::color(use_color, "31", "certificate failed"),
    };
    let mut lines = vec![format!("spp {} {}: {status}", r.version, r.command.name)];
    match &r.report {
        Body::Project { z, result } => {
            lines.push(format!("point      {}", fmt_vec(z)));
            lines.push(format!("projection {}", fmt_vec(&result.proj)));
            lines.push(format!("distance   {:.12}", result.distance(z)));
            lines.push(format!("residual   {:.3e}  (active rows {:?})", result.residual_normal, result.active.indices));
        }
        Body::Sharpness(s) => {
            lines.push(format!("direction     {}", fmt_dir(&s.direction)));
            lines.push(format!("lower bound   {:.12}", s.alpha_lower));
            if let Some(a) = s.alpha_exact {
                lines.push(format!("exact modulus {a:.12}{}", if s.vacuous { "  (vacuous)" } else { "" }));
            }
            if let Some(d) = s.dual_estimate {
                lines.push(format!("dual estimate {d:.12}  ({} samples)", s.samples));
            }
        }
        Body::SolveLp { objective_value, spp, .. } => {
            lines.push(format!("solution    {}", fmt_vec(&spp.solution)));
            lines.push(format!("value       {objective_value:.12}"));
            lines.push(format!("alpha       {:.12}", spp.alpha_used));
            lines.push(format!("mu          {:.12}  (threshold {:.12})", spp.mu_used, spp.mu_threshold));
            lines.push(format!("certificate {:.3e}", spp.kkt_certificate));
            if let Some(o) = spp.oracle_value {
                lines.push(format!("oracle      {o:.12}"));
            }
            if spp.doublings > 0 {
                lines.push(format!("doublings   {}", spp.doublings));
            }
        }
        Body::SolveCp(c) => {
            lines.push(format!("minimizer   {}", fmt_vec(&c.w)));
            lines.push(format!("value       {:.12}", c.fw));
            lines.push(format!("start       v = {}, t = {:.6}", fmt_vec(&c.v), c.t));
            lines.push(format!("certificate {:.3e}", c.spp.kkt_certificate));
        }
        Body::Failed { reason, spp } => {
            lines.push(format!("reason      {reason}"));
            if let Some(spp) = spp {
                lines.push(format!("last point  {}", fmt_vec(&spp.solution)));
                lines.push(format!("certificate {:.3e}", spp.kkt_certificate));
            }
        }
        Body::DistBound(d) => {
            lines.push(format!("rho      {:.12}", d.rho));
            lines.push(format!("inf      {:.12}", d.sampled_inf));
            lines.push(format!("epsilon  {:.12}", d.epsilon));
            lines.push(format!("d(b,P)   {:.12}", d.d_bp));
            lines.push(format!("verified {}{}", d.verified, if d.resampled { " (re-sampled)" } else { "" }));
        }
        Body::Subtrans(s) => {
            lines.push(format!("alpha_sub {:.12}{}", s.alpha_sub_est, if s.vacuous { "  (vacuous)" } else { "" }));
            lines.push(format!("gamma     {:.12}", s.gamma_implied));
            lines.push(format!("beta      {:.12}", s.beta_required));
            lines.push(format!("samples   {} in box radius {}", s.samples, s.box_radius));
        }
        Body::Verify(v) => {
            lines.push(format!("target {}", v.target));
            for c in &v.checks {
                let mark = if c.passed {
                    crate::color(use_color, "32", "PASS")
                } else {
                    crate::color(use_color, "31", "FAIL")
                };
                lines.push(format!("  {mark} {}: {}", c.name, c.detail));
            }
        }
        Body::Bench(b) => {
            lines.push(format!("{}/{} oracle matches (n={}, m={})", b.matches, b.count, b.n, b.m));
            lines.push(format!("max value gap {:.3e}, max projection gap {:.3e}", b.max_value_gap, b.max_projection_gap));
            lines.push(format!("doublings {}, enumeration fallbacks {}", b.total_doublings, b.fallbacks));
            for f in &b.failures {
                lines.push(format!("  instance {}: {}", f.index, f.reason));
            }
        }
        Body::Gen { index, instance_seed } => {
            lines.push(format!("instance {index} (seed {instance_seed})"));
            if let Some(p) = &r.problem {
                lines.push(serde_json::to_string(p).expect("problems serialize"));
            }
        }
    }
    lines.join("\n")
}
