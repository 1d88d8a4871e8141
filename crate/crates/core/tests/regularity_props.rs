mod common;

use common::{instance, rng};
use proptest::prelude::*;
use rand::Rng;
use spp_core::instances::random_point;
use spp_core::regularity::{default_box_radius, distance_upper_bound, estimate_subtransversality};
use spp_core::{project_brute, Vector};

const SEED: u64 = 31337;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn subtransversality_constants_consistent(i in 0u64..10_000, s in any::<u64>()) {
        let inst = instance(SEED, i);
        let r = default_box_radius(&inst.p, &inst.x_star).unwrap();
        let rep = estimate_subtransversality(&inst.p, &inst.x_star, r, 100, s).unwrap();
        let a = rep.alpha_sub_est;
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!((rep.gamma_implied - a * (1.0 - a * a / 4.0).sqrt()).abs() <= 1e-15);
        if a < 1.0 {
            prop_assert!((rep.beta_required - 2.0 * a / (1.0 - a)).abs() <= 1e-12 * (1.0 + rep.beta_required));
        } else {
            prop_assert!(rep.beta_required.is_infinite());
        }
    }

    #[test]
    fn verified_bounds_hold(i in 0u64..10_000, s in any::<u64>()) {
        let inst = instance(SEED, i);
        let n = inst.p.dim();
        let mut g = rng(s);
        let a = project_brute(&inst.p, &random_point(&mut g, n, 3.0)).unwrap().proj;
        let b: Vector = &a + &random_point(&mut g, n, 3.0);
        prop_assume!(!inst.p.contains(&b, 1e-6));
        let delta = g.random_range(0.05..1.0);
        let rep = distance_upper_bound(&inst.p, &a, &b, delta, 100, s).unwrap();
        prop_assert!(rep.rho > 0.0 && rep.delta > 0.0);
        prop_assert!(rep.epsilon >= 0.0);
        prop_assert!(rep.verified);
        prop_assert!(rep.d_bp <= rep.rho - rep.epsilon + 1e-7);
    }
}
