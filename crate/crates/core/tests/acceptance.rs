//! End-to-end acceptance suite. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line in a fixed order; the process
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spp_core::instances::{random_lp, random_point, LpInstance};
use spp_core::polyhedron::{active_set, lp_solve_enumeration, project_brute, LpStatus, Polyhedron};
use spp_core::projection::{project_polyhedron, KKT_TOL};
use spp_core::regularity::{
    composition_alpha, default_box_radius, distance_upper_bound, estimate_subtransversality, hyperplane_samples,
    theorem_p1_constants,
};
use spp_core::sharpness::{kl_alpha_from_beta, kl_beta_from_alpha, pwl_kl_constant, sharpness_exact, sharpness_lower_bound};
use spp_core::spp::{
    check_conditions, mu_threshold_lemma, mu_threshold_prop, solve_lp_spp, solve_lp_spp_doubling, MuChoice, SppOptions,
    CERT_TOL,
};
use spp_core::{distance_to_cone, distance_to_ray, normal_cone_at, MaxAffine, UnitDirection, Vector};

const CORPUS_SEED: u64 = 20_240_601;
const CORPUS: u64 = 500;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c).unwrap()
}

fn u(c: &[f64]) -> UnitDirection {
    UnitDirection::normalize(&v(c)).unwrap()
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got:.17e}, want {want:.17e} (tol {tol:e})"))
    }
}

fn within(name: &str, elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed < budget {
        Ok(())
    } else {
        Err(format!("{name}: took {elapsed:?}, budget {budget:?}"))
    }
}

/// Instance `i` of the shared corpus: n in 1..=4, m in n+1..=8.
fn corpus(i: u64) -> LpInstance {
    let n = 1 + (i % 4) as usize;
    let m = n + 1 + ((i / 4) % (8 - n) as u64) as usize;
    random_lp(CORPUS_SEED, i, n, m).expect("corpus instance")
}

fn lp_value(p: &Polyhedron, x_star: &UnitDirection) -> (f64, Vector) {
    let r = lp_solve_enumeration(p, x_star.as_vector()).unwrap();
    assert_eq!(r.status, LpStatus::Optimal);
    (r.value.unwrap(), r.x_opt.unwrap())
}

fn ex46() -> Polyhedron {
    Polyhedron::new(vec![vec![1.0, -1.0], vec![-1.0, -1.0]], vec![0.0, 0.0]).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s2 = 2f64.sqrt();
    let p = ex46();
    let alpha = sharpness_lower_bound(&p, &u(&[0.0, -1.0])).map_err(|e| e.to_string())?.alpha_lower;
    close("alpha", alpha, s2 / 2.0, 1e-12)?;
    let x0 = v(&[-1.0, -0.5]);
    let d = project_polyhedron(&p, &x0, KKT_TOL).map_err(|e| e.to_string())?.distance(&x0);
    close("d(x0,A)", d, 3.0 * s2 / 4.0, 1e-10)?;
    let thr = mu_threshold_prop(d, alpha).map_err(|e| e.to_string())?;
    close("threshold", thr, 21.0 * s2 / 4.0, 1e-10)?;
    let opts = SppOptions { mu: MuChoice::Explicit(10.0), ..SppOptions::default() };
    let r = solve_lp_spp(&p, &u(&[0.0, 1.0]), &x0, &opts).map_err(|e| e.to_string())?;
    if r.u != v(&[-1.0, -10.5]) {
        return Err(format!("u = {:?}", r.u));
    }
    close("P_A(u)", r.solution.norm(), 0.0, 1e-8)?;
    if r.kkt_certificate > CERT_TOL {
        return Err(format!("certificate {:e}", r.kkt_certificate));
    }
    let t = start.elapsed();
    within("runtime", t, Duration::from_millis(100))?;
    Ok(format!("alpha={alpha:.15} threshold={thr:.12} cert={:.1e} in {t:?}", r.kkt_certificate))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let p = Polyhedron::nonnegative_orthant(3);
    let x_star = u(&[0.0, 1.0, 1.0]);
    let alpha = sharpness_lower_bound(&p, &x_star.negated()).map_err(|e| e.to_string())?.alpha_lower;
    close("alpha", alpha, 0.5f64.sqrt(), 1e-12)?;
    let x0 = v(&[1.0, -1.0, 0.0]);
    let d = project_polyhedron(&p, &x0, KKT_TOL).map_err(|e| e.to_string())?.distance(&x0);
    let thr = mu_threshold_prop(d, alpha).map_err(|e| e.to_string())?;
    close("threshold", thr, 7.0, 1e-10)?;
    let opts = SppOptions { mu: MuChoice::Explicit(7.0 * 2f64.sqrt()), ..SppOptions::default() };
    let r = solve_lp_spp(&p, &x_star, &x0, &opts).map_err(|e| e.to_string())?;
    close("u distance", r.u.dist(&v(&[1.0, -8.0, -7.0])), 0.0, 1e-12)?;
    close("solution", r.solution.dist(&v(&[1.0, 0.0, 0.0])), 0.0, 1e-8)?;
    let (oracle, _) = lp_value(&p, &x_star);
    close("value", r.value, oracle, 1e-8)?;
    close("value", r.value, 0.0, 1e-8)?;
    let t = start.elapsed();
    within("runtime", t, Duration::from_millis(100))?;
    Ok(format!("alpha={alpha:.15} threshold={thr:.12} in {t:?}"))
}

fn criterion_3() -> Outcome {
    let alpha = sharpness_lower_bound(&Polyhedron::nonnegative_orthant(2), &u(&[1.0, 1.0]))
        .map_err(|e| e.to_string())?
        .alpha_lower;
    close("alpha", alpha, 1.0, 1e-12)?;
    Ok(format!("alpha={alpha}"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut proj_fail = Vec::new();
    let mut spp_fail = Vec::new();
    let mut fallbacks = 0;
    let mut worst: f64 = 0.0;
    for i in 0..CORPUS {
        let inst = corpus(i);
        let n = inst.p.dim();
        for _ in 0..2 {
            let z = random_point(&mut rng, n, 4.0);
            match (project_polyhedron(&inst.p, &z, KKT_TOL), project_brute(&inst.p, &z)) {
                (Ok(a), Ok(b)) => {
                    fallbacks += usize::from(a.used_fallback);
                    let gap = a.proj.dist(&b.proj);
                    worst = worst.max(gap);
                    if gap > 1e-7 {
                        proj_fail.push(i);
                    }
                }
                _ => proj_fail.push(i),
            }
        }
        let (oracle, _) = lp_value(&inst.p, &inst.x_star);
        match solve_lp_spp_doubling(&inst.p, &inst.x_star, None, &SppOptions::default()) {
            Ok(r) if (r.value - oracle).abs() <= 1e-7 => {}
            _ => spp_fail.push(i),
        }
    }
    let t = start.elapsed();
    if !proj_fail.is_empty() || !spp_fail.is_empty() {
        return Err(format!("projection failures {proj_fail:?}, spp failures {spp_fail:?}"));
    }
    within("runtime", t, Duration::from_secs(60))?;
    Ok(format!(
        "{CORPUS}/{CORPUS} instances; max projection gap {worst:.1e}; {fallbacks} enumeration fallbacks; {t:.1?}"
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut qualifying = 0;
    let mut failures = Vec::new();
    for i in 0..CORPUS {
        let inst = corpus(i);
        let n = inst.p.dim();
        let alpha = sharpness_lower_bound(&inst.p, &inst.x_star.negated()).unwrap().alpha_lower;
        let (oracle, x_opt) = lp_value(&inst.p, &inst.x_star);
        for _ in 0..4 {
            let tau: f64 = rng.random_range(0.0..6.0);
            let v = &x_opt.axpy(-tau, &inst.x_star) + &random_point(&mut rng, n, 2.0);
            let c = check_conditions(&inst.p, &inst.x_star, &v, alpha).unwrap();
            if c.cond1 && c.cond2 {
                qualifying += 1;
                let proj = project_polyhedron(&inst.p, &v, KKT_TOL).unwrap().proj;
                if (inst.x_star.dot(&proj) - oracle).abs() > 1e-7 {
                    failures.push(i);
                }
            }
        }
    }
    if qualifying == 0 {
        return Err("no (instance, v) pair satisfied both conditions".into());
    }
    if !failures.is_empty() {
        return Err(format!("{} of {qualifying} projections not optimal: {failures:?}", failures.len()));
    }
    Ok(format!("{qualifying}/{qualifying} qualifying projections optimal"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut found = 0;
    let mut tried = 0;
    let mut i = 0;
    while found < 100 {
        tried += 1;
        if tried > 20_000 {
            return Err(format!("only {found} cond1-only points found"));
        }
        let inst = corpus(i % CORPUS);
        i += 1;
        let n = inst.p.dim();
        let alpha = sharpness_lower_bound(&inst.p, &inst.x_star.negated()).unwrap().alpha_lower;
        let (_, x_opt) = lp_value(&inst.p, &inst.x_star);
        let tau: f64 = rng.random_range(0.01..0.5);
        let v = &x_opt.axpy(-tau, &inst.x_star) + &random_point(&mut rng, n, 3.0);
        let c = check_conditions(&inst.p, &inst.x_star, &v, alpha).unwrap();
        if !(c.cond1 && !c.cond2) {
            continue;
        }
        found += 1;
        let mu0 = mu_threshold_lemma(c.theta, c.d_va, alpha).unwrap();
        let prop = mu_threshold_prop(c.d_va, alpha).unwrap();
        if prop < mu0 {
            return Err(format!("instance {i}: threshold {prop} < mu0 {mu0}"));
        }
        for mu in [1.01 * mu0, mu0 + 1.0] {
            let shifted = v.axpy(-mu, &inst.x_star);
            let cu = check_conditions(&inst.p, &inst.x_star, &shifted, alpha).unwrap();
            if !(cu.cond1 && cu.cond2) {
                return Err(format!("instance {i}: mu={mu} (mu0={mu0}) gives {cu:?}"));
            }
        }
    }
    Ok(format!("100/100 shifts satisfy both conditions ({tried} draws)"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a: f64 = rng.random_range(1e-6..1.0 - 1e-6);
        let back = kl_alpha_from_beta(kl_beta_from_alpha(a).unwrap()).unwrap();
        worst = worst.max((back - a).abs());
    }
    close("round trip", worst, 0.0, 1e-14)?;
    let abs = MaxAffine::from_pairs(&[(&[1.0], 0.0), (&[-1.0], 0.0)]).unwrap();
    let beta = pwl_kl_constant(&abs).unwrap().ok_or("|x| has no KL constant")?;
    close("beta(|x|)", beta, 1.0, 1e-12)?;
    close("epi sharpness", kl_alpha_from_beta(beta).unwrap(), 0.5f64.sqrt(), 1e-12)?;

    // d(0, ∂f(x)) for f = indicator - <x*,.> computed through the tangent
    // cone: by Moreau, d(x*, N) = ||P_T(x*)|| with T the polar of N
    let mut points = 0;
    let mut worst_gap: f64 = 0.0;
    for i in 0..20 {
        let inst = corpus(i);
        let n = inst.p.dim();
        for k in 0..100 {
            let z = random_point(&mut rng, n, if k % 2 == 0 { 1.0 } else { 4.0 });
            let x = project_polyhedron(&inst.p, &z, KKT_TOL).unwrap().proj;
            let tol = 1e-8;
            let act = active_set(&inst.p, &x, tol).unwrap();
            let subdiff = distance_to_cone(&inst.x_star, &normal_cone_at(&inst.p, &x, tol).unwrap(), 1e-12)
                .unwrap()
                .distance;
            let tangent = if act.is_empty() {
                inst.x_star.norm()
            } else {
                let rows: Vec<Vec<f64>> = act.indices.iter().map(|&j| inst.p.row(j).as_slice().to_vec()).collect();
                let t = Polyhedron::new(rows, vec![0.0; act.indices.len()]).unwrap();
                project_polyhedron(&t, &inst.x_star, KKT_TOL).unwrap().proj.norm()
            };
            worst_gap = worst_gap.max((subdiff - tangent).abs());
            points += 1;
        }
    }
    close("subdifferential relation", worst_gap, 0.0, 1e-9)?;
    Ok(format!(
        "round-trip err {worst:.1e}; beta(|x|)=1; relation max err {worst_gap:.1e} at {points} points"
    ))
}

fn criterion_8() -> Outcome {
    let mut checked = 0;
    let mut converse_samples = 0;
    let mut violations = Vec::new();
    let mut slack = f64::INFINITY;
    for i in 0..50u64 {
        let inst = corpus(1 + 4 * i % CORPUS);
        let p = &inst.p;
        let x_star = &inst.x_star;
        let sr = sharpness_exact(p, x_star).unwrap().alpha_exact.unwrap();
        let radius = default_box_radius(p, x_star).unwrap();
        let est = estimate_subtransversality(p, x_star, radius, 300, i).unwrap();
        if !est.vacuous {
            let a = (0.99 * est.alpha_sub_est).min(0.999_999);
            let (gamma, _) = theorem_p1_constants(a).unwrap();
            slack = slack.min(sr - gamma);
            if sr < gamma - 1e-6 {
                violations.push(format!("forward #{i}: sr {sr} < gamma {gamma}"));
            }
            checked += 1;
        }
        // converse: alpha with beta(alpha) = sr
        let a = if sr >= 1.0 { 1.0 / 3.0 } else { composition_alpha(sr).unwrap() };
        let (_, beta) = theorem_p1_constants(a).unwrap();
        if sr + 1e-12 >= beta {
            let face = spp_core::face_of(p, x_star).unwrap().unwrap().as_polyhedron();
            for x in hyperplane_samples(p, x_star, radius, 100, 1000 + i).unwrap() {
                let d_face = project_polyhedron(&face, &x, KKT_TOL).unwrap().distance(&x);
                let d_set = project_polyhedron(p, &x, KKT_TOL).unwrap().distance(&x);
                converse_samples += 1;
                if a * d_face > d_set + 1e-7 {
                    violations.push(format!("converse #{i}: {a}*{d_face} > {d_set}"));
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(format!("{} violations: {:?}", violations.len(), &violations[..violations.len().min(5)]));
    }
    Ok(format!(
        "forward holds on {checked}/50 (min slack {slack:.3e}); converse 0 violations over {converse_samples} samples"
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut resampled = 0;
    let mut positive = 0;
    for i in 0..100u64 {
        let inst = corpus(2 + 5 * i % CORPUS);
        let p = &inst.p;
        let n = p.dim();
        let a = project_polyhedron(p, &random_point(&mut rng, n, 3.0), KKT_TOL).unwrap().proj;
        let b = loop {
            let b = &a + &random_point(&mut rng, n, 2.0);
            if !p.contains(&b, 1e-6) {
                break b;
            }
        };
        let delta: f64 = rng.random_range(0.05..1.0);
        let r = distance_upper_bound(p, &a, &b, delta, 200, i).map_err(|e| format!("#{i}: {e}"))?;
        if !r.verified {
            return Err(format!("#{i}: refuted after re-sampling: {r:?}"));
        }
        if r.d_bp > r.rho - r.epsilon + 1e-7 {
            return Err(format!("#{i}: verified report violates its bound"));
        }
        resampled += usize::from(r.resampled);
        positive += usize::from(r.epsilon > 0.0);
    }
    Ok(format!("100/100 verified ({positive} with epsilon > 0, {resampled} re-sampled)"))
}

fn criterion_10() -> Outcome {
    // epigraph of t -> 1/t on t > 0; at x_n = (n, 1/n) the normal cone is
    // the ray through (-1/n^2, -1), and x* = (0,-1) is never attained
    let x_star = u(&[0.0, -1.0]);
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for n in 1..=1000u32 {
        let nf = f64::from(n);
        let g = u(&[-1.0 / (nf * nf), -1.0]);
        let d = distance_to_ray(&x_star, &g).unwrap();
        if !(d < prev) {
            return Err(format!("not decreasing at n={n}: {d} >= {prev}"));
        }
        prev = d;
        last = d;
    }
    if last >= 1e-5 {
        return Err(format!("d at n=1000 is {last:e}"));
    }
    Ok(format!("strictly decreasing, d(x*, N(x_1000)) = {last:.3e}"))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("wedge example end-to-end", criterion_1),
        ("R^3 example end-to-end", criterion_2),
        ("orthant diagonal lower bound", criterion_3),
        ("oracle equivalence", criterion_4),
        ("two-condition soundness", criterion_5),
        ("shift threshold dominance", criterion_6),
        ("KL conversions", criterion_7),
        ("subtransversality constants", criterion_8),
        ("distance upper bound", criterion_9),
        ("non-sharp fixture", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(run) {
            Ok(Ok(msg)) => println!("criterion {:>2} PASS  {name}: {msg}", k + 1),
            Ok(Err(msg)) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", k + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: panicked", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
