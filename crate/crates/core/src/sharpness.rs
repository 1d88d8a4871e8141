//! Sharpness moduli `sr[P, x*] = inf { d(x*, N_P(x)) : x in P, x* not in N_P(x) }`
//! and the Kurdyka–Łojasiewicz constants they translate into.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxaffine::MaxAffine;
use crate::numkernel::{distance_to_cone, distance_to_convex_hull, distance_to_ray, UnitDirection, Vector};
use crate::polyhedron::{face_of, is_realizable, mask_to_indices, realizable_active_sets, Polyhedron, SUBSET_MAX_ROWS};
use crate::sampling;

/// `x*` counts as a member of `cone_J` when its distance is at most this.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub direction: UnitDirection,
    /// `min{1, min_J d(x*, cone_J)}` over all row subsets `J` with `x*` outside `cone_J`.
    pub alpha_lower: f64,
    /// The modulus over realizable active sets; `+inf` when vacuous.
    #[serde(with = "crate::extreal::option", default)]
    pub alpha_exact: Option<f64>,
    pub subsets_examined: usize,
    /// No active set has a normal cone missing `x*` (the infimum is over the empty set).
    pub vacuous: bool,
    #[serde(with = "crate::extreal::option", default)]
    pub dual_estimate: Option<f64>,
    pub samples: usize,
}

fn cone_distance(p: &Polyhedron, x_star: &UnitDirection, rows: &[usize]) -> Result<f64> {
    Ok(distance_to_cone(x_star.as_vector(), &p.cone_of(rows), MEMBERSHIP_TOL)?.distance)
}

fn min_over_subsets<'a>(
    p: &Polyhedron,
    x_star: &UnitDirection,
    subsets: impl Iterator<Item = &'a [usize]>,
) -> Result<(Option<f64>, usize)> {
    let mut best: Option<f64> = None;
    let mut count = 0;
    for rows in subsets {
        count += 1;
        // d(x*, K) <= ||x*|| = 1 for every cone, with equality exactly when
        // K lies in the polar of x*; snap the rounding of ||x*|| to 1
        let d = cone_distance(p, x_star, rows)?;
        let d = if d >= 1.0 - 1e-14 { 1.0 } else { d };
        if d > MEMBERSHIP_TOL {
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    Ok((best, count))
}

fn all_subsets(m: usize) -> Vec<Vec<usize>> {
    (0u32..(1u32 << m)).map(|mask| mask_to_indices(mask, m)).collect()
}

/// The lower bound `alpha_0` over every subset of rows.
pub fn sharpness_lower_bound(p: &Polyhedron, x_star: &UnitDirection) -> Result<SharpnessReport> {
    x_star.check_dim(p.dim())?;
    p.check_subset_caps()?;
    let subsets = all_subsets(p.num_rows());
    let (best, count) = min_over_subsets(p, x_star, subsets.iter().map(Vec::as_slice))?;
    Ok(SharpnessReport {
        direction: x_star.clone(),
        alpha_lower: best.map_or(1.0, |b| b.min(1.0)),
        alpha_exact: None,
        subsets_examined: count,
        vacuous: best.is_none(),
        dual_estimate: None,
        samples: 0,
    })
}

/// The exact modulus: the same minimum restricted to realizable active sets.
/// The report also carries the lower bound.
pub fn sharpness_exact(p: &Polyhedron, x_star: &UnitDirection) -> Result<SharpnessReport> {
    let mut report = sharpness_lower_bound(p, x_star)?;
    let sets = realizable_active_sets(p)?;
    let (best, count) = min_over_subsets(p, x_star, sets.iter().map(Vec::as_slice))?;
    report.alpha_exact = Some(best.unwrap_or(f64::INFINITY));
    report.vacuous = best.is_none();
    report.subsets_examined += count;
    Ok(report)
}

/// Sampled upper estimate of the modulus on a bounded polyhedron.
///
/// For each sampled unit `y*` whose exposed face is disjoint from
/// `F_P(x*)`, every point of `F_P(y*)` has `y*` in its normal cone but not
/// `x*`, so `d(x*, cone[y*])` bounds the modulus from above. Samples are
/// quasi-uniform on the sphere plus shells concentrated around `x*`.
/// Returns `+inf` when no sample qualifies.
pub fn sharpness_dual_estimate(p: &Polyhedron, x_star: &UnitDirection, num_samples: usize, seed: u64) -> Result<f64> {
    x_star.check_dim(p.dim())?;
    if num_samples == 0 {
        return Err(Error::InvalidParameter("num_samples must be at least 1".into()));
    }
    if !p.is_bounded()? {
        return Err(Error::UnboundedSet);
    }
    let home = face_of(p, x_star)?.ok_or(Error::UnboundedSet)?;
    let n = p.dim();
    let uniform = num_samples.div_ceil(2);
    let mut candidates = sampling::unit_sphere(n, uniform, seed);
    let shells = [0.5, 0.2, 0.05, 0.01, 1e-3];
    let per_shell = (num_samples - uniform).div_ceil(shells.len());
    for (k, r) in shells.iter().enumerate() {
        for w in sampling::unit_sphere(n, per_shell, seed.wrapping_add(k as u64 + 1)) {
            if let Ok(y) = UnitDirection::normalize(&x_star.axpy(*r, &w)) {
                candidates.push(y);
            }
        }
    }
    let mut best = f64::INFINITY;
    for y in candidates.iter().take(num_samples) {
        let d = distance_to_ray(x_star, y)?;
        if d >= best {
            continue;
        }
        let face = face_of(p, y)?.ok_or(Error::UnboundedSet)?;
        if !face.intersects(&home) {
            best = d;
        }
    }
    Ok(best)
}

/// `beta = alpha / sqrt(1 - alpha^2)`.
pub fn kl_beta_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(alpha / ((1.0 - alpha) * (1.0 + alpha)).sqrt())
}

/// `alpha = beta / sqrt(1 + beta^2)`.
pub fn kl_alpha_from_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(beta / beta.hypot(1.0))
}

/// Global KL constant of a max-affine function: the minimum of
/// `d(0, conv{a_i : i in I})` over realizable argmax patterns `I` whose
/// gradient hull misses the origin. `None` when there is no such pattern.
pub fn pwl_kl_constant(f: &MaxAffine) -> Result<Option<f64>> {
    let k = f.num_pieces();
    if k > SUBSET_MAX_ROWS {
        return Err(Error::TooLarge {
            m: k,
            n: f.dim(),
            max_m: SUBSET_MAX_ROWS,
            max_n: usize::MAX,
        });
    }
    // argmax patterns = active sets of the epigraph rows <a_i,x> - s <= -c_i
    let rows: Vec<Vector> = f.pieces().iter().map(|p| p.a.extended(-1.0)).collect();
    let rhs: Vec<f64> = f.pieces().iter().map(|p| -p.c).collect();
    let epi = Polyhedron::from_rows(rows, rhs)?;
    let origin = Vector::zeros(f.dim());
    let mut best: Option<f64> = None;
    for mask in 1u32..(1u32 << k) {
        let idx = mask_to_indices(mask, k);
        let grads: Vec<Vector> = idx.iter().map(|&i| f.pieces()[i].a.clone()).collect();
        let d = distance_to_convex_hull(&origin, &grads, MEMBERSHIP_TOL)?;
        if d <= MEMBERSHIP_TOL || best.is_some_and(|b| d >= b) {
            continue;
        }
        if is_realizable(&epi, &idx)? {
            best = Some(d);
        }
    }
    Ok(best)
}

/// Sharpness data for `f = indicator_P - <x*, .>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorKl {
    /// `sr[P, x*]`.
    #[serde(with = "crate::extreal")]
    pub alpha: f64,
    /// `alpha / sqrt(1 + alpha^2)`, reported only when `alpha < 1`.
    pub epi_alpha: Option<f64>,
}

pub fn indicator_linear_kl(p: &Polyhedron, x_star: &UnitDirection) -> Result<IndicatorKl> {
    let r = sharpness_exact(p, x_star)?;
    let alpha = r.alpha_exact.expect("sharpness_exact fills alpha_exact");
    let epi_alpha = (alpha < 1.0).then(|| alpha / alpha.hypot(1.0));
    Ok(IndicatorKl { alpha, epi_alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(c: &[f64]) -> UnitDirection {
        UnitDirection::normalize(&Vector::from_slice(c).unwrap()).unwrap()
    }

    fn ex46() -> Polyhedron {
        Polyhedron::new(vec![vec![1.0, -1.0], vec![-1.0, -1.0]], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn ex46_lower_and_exact() {
        let r = sharpness_exact(&ex46(), &u(&[0.0, -1.0])).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((r.alpha_lower - h).abs() < 1e-12);
        assert!((r.alpha_exact.unwrap() - h).abs() < 1e-12);
        assert!(!r.vacuous);
    }

    #[test]
    fn orthant_examples() {
        let r3 = Polyhedron::nonnegative_orthant(3);
        let r = sharpness_lower_bound(&r3, &u(&[0.0, -1.0, -1.0])).unwrap();
        assert!((r.alpha_lower - 0.5f64.sqrt()).abs() < 1e-12);
        let r2 = Polyhedron::nonnegative_orthant(2);
        let r = sharpness_lower_bound(&r2, &u(&[1.0, 1.0])).unwrap();
        assert!((r.alpha_lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_realizable_row_skipped() {
        let p = Polyhedron::new(vec![vec![1.0], vec![1.0]], vec![0.0, -1.0]).unwrap();
        let r = sharpness_exact(&p, &u(&[-1.0])).unwrap();
        assert_eq!(r.alpha_exact, Some(1.0));
    }

    #[test]
    fn singleton_is_vacuous() {
        let p = Polyhedron::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let r = sharpness_exact(&p, &u(&[1.0])).unwrap();
        assert!(r.vacuous);
        assert_eq!(r.alpha_exact, Some(f64::INFINITY));
        assert!(r.alpha_lower <= 1.0);
    }

    #[test]
    fn dual_estimate_on_square() {
        let sq = Polyhedron::cube(2, 1.0);
        let x = u(&[1.0, 1.0]);
        let exact = sharpness_exact(&sq, &x).unwrap().alpha_exact.unwrap();
        for seed in 0..10 {
            let est = sharpness_dual_estimate(&sq, &x, 200, seed).unwrap();
            assert!(est >= exact - 1e-7, "seed {seed}: {est} < {exact}");
        }
        let x = u(&[1.0, 0.0]);
        let exact = sharpness_exact(&sq, &x).unwrap().alpha_exact.unwrap();
        let coarse = sharpness_dual_estimate(&sq, &x, 20, 1).unwrap();
        let fine = sharpness_dual_estimate(&sq, &x, 2000, 1).unwrap();
        assert!(fine <= coarse && fine >= exact - 1e-7);
        assert!(fine - exact < 0.05, "{fine} vs {exact}");
    }

    #[test]
    fn dual_estimate_rejects_unbounded() {
        assert!(matches!(
            sharpness_dual_estimate(&ex46(), &u(&[0.0, -1.0]), 10, 0),
            Err(Error::UnboundedSet)
        ));
    }

    #[test]
    fn kl_conversions() {
        assert!((kl_beta_from_alpha(0.6).unwrap() - 0.75).abs() < 1e-15);
        assert!((kl_alpha_from_beta(0.75).unwrap() - 0.6).abs() < 1e-15);
        assert!(kl_beta_from_alpha(1.0).is_err());
        assert!(kl_beta_from_alpha(0.0).is_err());
        assert!(kl_alpha_from_beta(0.0).is_err());
    }

    #[test]
    fn pwl_constants() {
        let abs = MaxAffine::from_pairs(&[(&[1.0], 0.0), (&[-1.0], 0.0)]).unwrap();
        assert_eq!(pwl_kl_constant(&abs).unwrap(), Some(1.0));
        let f = MaxAffine::from_pairs(&[(&[2.0], 0.0), (&[-1.0], 0.0)]).unwrap();
        assert_eq!(pwl_kl_constant(&f).unwrap(), Some(1.0));
        let c = MaxAffine::from_pairs(&[(&[0.0], 3.0)]).unwrap();
        assert_eq!(pwl_kl_constant(&c).unwrap(), None);
        // a dominated piece is never an argmax and must not count
        let g = MaxAffine::from_pairs(&[(&[1.0], 0.0), (&[-1.0], 0.0), (&[0.1], -5.0)]).unwrap();
        assert_eq!(pwl_kl_constant(&g).unwrap(), Some(1.0));
    }

    #[test]
    fn indicator_kl() {
        let r = indicator_linear_kl(&ex46(), &u(&[0.0, -1.0])).unwrap();
        assert!((r.epi_alpha.unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let r = indicator_linear_kl(&Polyhedron::nonnegative_orthant(2), &u(&[1.0, 1.0])).unwrap();
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.epi_alpha, None);
    }
}
