mod common;

use common::v;
use proptest::prelude::*;
use spp_core::{distance_to_cone, distance_to_ray, Cone, UnitDirection, Vector};

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

fn unit(c: &[f64]) -> Option<UnitDirection> {
    let x = v(c);
    (x.norm() > 1e-3).then(|| UnitDirection::normalize(&x).unwrap())
}

proptest! {
    #[test]
    fn ray_distance_identity(a in coords(3), b in coords(3)) {
        let (Some(u), Some(w)) = (unit(&a), unit(&b)) else { return Ok(()) };
        let d = distance_to_ray(&u, &w).unwrap();
        let c = u.dot(w.as_vector()).max(0.0);
        prop_assert!((d * d + c * c - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normalized_cone_distance_is_symmetric(a in coords(3), b in coords(3)) {
        let (p, q) = (v(&a), v(&b));
        prop_assume!(p.norm() > 1e-3 && q.norm() > 1e-3);
        let pq = distance_to_cone(p.normalized().unwrap().as_vector(), &Cone::new(3, vec![q.clone()]).unwrap(), 1e-12).unwrap();
        let qp = distance_to_cone(q.normalized().unwrap().as_vector(), &Cone::new(3, vec![p.clone()]).unwrap(), 1e-12).unwrap();
        prop_assert!((pq.distance - qp.distance).abs() <= 1e-10);
    }

    #[test]
    fn members_have_zero_distance(
        gens in prop::collection::vec(coords(3), 1..5),
        w in prop::collection::vec(0.0..3.0f64, 5),
    ) {
        let gens: Vec<Vector> = gens.iter().map(|g| v(g)).collect();
        let x = gens.iter().zip(&w).fold(Vector::zeros(3), |acc, (g, t)| acc.axpy(*t, g));
        let d = distance_to_cone(&x, &Cone::new(3, gens).unwrap(), 1e-9).unwrap();
        prop_assert!(d.distance <= 1e-9);
    }

    #[test]
    fn single_generator_matches_ray(a in coords(4), b in coords(4)) {
        let (Some(u), Some(w)) = (unit(&a), unit(&b)) else { return Ok(()) };
        let cone = Cone::new(4, vec![w.as_vector().clone()]).unwrap();
        let d = distance_to_cone(u.as_vector(), &cone, 1e-12).unwrap().distance;
        prop_assert!((d - distance_to_ray(&u, &w).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn cone_distance_matches_grid_search() {
    let mut r = common::rng(11);
    for _ in 0..5 {
        let x = spp_core::instances::random_point(&mut r, 3, 2.0);
        let gens: Vec<Vector> = (0..3).map(|_| spp_core::instances::random_point(&mut r, 3, 1.0)).collect();
        let d = distance_to_cone(&x, &Cone::new(3, gens.clone()).unwrap(), 1e-12).unwrap().distance;
        // coarse grid then local refinement; the grid can only overestimate
        let mut best = f64::INFINITY;
        let mut arg = [0.0; 3];
        let step = 0.1;
        for i in 0..=100 {
            for j in 0..=100 {
                for k in 0..=100 {
                    let t = [i as f64 * step, j as f64 * step, k as f64 * step];
                    let y = (0..3).fold(Vector::zeros(3), |acc, g| acc.axpy(t[g], &gens[g]));
                    let e = x.dist(&y);
                    if e < best {
                        best = e;
                        arg = t;
                    }
                }
            }
        }
        let fine = 1e-3;
        for i in -100..=100 {
            for j in -100..=100 {
                for k in -100..=100 {
                    let t = [arg[0] + i as f64 * fine, arg[1] + j as f64 * fine, arg[2] + k as f64 * fine];
                    if t.iter().any(|c| *c < 0.0) {
                        continue;
                    }
                    let y = (0..3).fold(Vector::zeros(3), |acc, g| acc.axpy(t[g], &gens[g]));
                    best = best.min(x.dist(&y));
                }
            }
        }
        assert!(d <= best + 1e-9, "nnls {d} above grid {best}");
        assert!(best - d <= 1e-2, "nnls {d} far below grid {best}");
    }
}
