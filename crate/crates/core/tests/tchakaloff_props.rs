mod common;

use proptest::prelude::*;
use tchak_core::caratheodory::ReduceOptions;
use tchak_core::measures::moments;
use tchak_core::systems::effective_real_dimension;
use tchak_core::tchakaloff::{tchakaloff_rule, tchakaloff_rule_normalized};

proptest! {
    #[test]
    fn rules_are_exact_nonnegative_and_small(seed in any::<u64>(), n in 1usize..9, m in 1usize..120) {
        let (sys, mu) = common::instance(seed, n, m);
        let effdim = effective_real_dimension(&sys, mu.points(), 1e-10).unwrap();
        let target = moments(&sys, &mu).unwrap();
        let rule = tchakaloff_rule(&sys, &mu, ReduceOptions::default()).unwrap();
        prop_assert!(rule.len() <= effdim);
        prop_assert!(rule.relative_residual(&target) <= 1e-9);
        prop_assert!(rule.weights.as_real().unwrap().iter().all(|&w| w >= 0.0));
        let norm = tchakaloff_rule_normalized(&sys, &mu, ReduceOptions::default()).unwrap();
        prop_assert!(norm.len() <= effdim + 1);
        prop_assert!((norm.total_weight().re - mu.total_mass()).abs() <= 1e-12 * mu.total_mass().max(1e-300));
    }

    #[test]
    fn rule_as_measure_is_a_fixed_point(seed in any::<u64>(), n in 1usize..9, m in 1usize..120) {
        let (sys, mu) = common::instance(seed, n, m);
        let rule = tchakaloff_rule(&sys, &mu, ReduceOptions::default()).unwrap();
        let nu = rule.to_measure().unwrap();
        let again = tchakaloff_rule(&sys, &nu, ReduceOptions::default()).unwrap();
        let a = rule.moments(&sys).unwrap().to_complex();
        let b = again.moments(&sys).unwrap().to_complex();
        prop_assert!(common::rel_dist(&b, &a) <= 1e-12 || a.iter().all(|z| z.norm_sqr() == 0.0));
    }
}
