mod common;

use proptest::prelude::*;
use tchak_core::caratheodory::ReduceOptions;
use tchak_core::tchakaloff::tchakaloff_rule;
use tchak_core::widths::{worst_case_error_on, Kernel, RkhsSpec};
use tchak_core::{DiscreteMeasure, FunctionSystem, PointList};

fn spec(m: usize, ell: f64) -> RkhsSpec {
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    RkhsSpec::new(Kernel::Gaussian { length_scale: ell }, DiscreteMeasure::uniform(PointList::from_scalars(&xs), 1.0).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn error_ignores_node_order(seed in any::<u64>(), k in 1usize..12) {
        let s = spec(60, 0.2);
        let mut r = common::rng(seed);
        let xs = common::uniform(&mut r, 0.0, 1.0, k);
        let w = common::uniform(&mut r, 0.0, 1.0, k);
        let e = worst_case_error_on(&PointList::from_scalars(&xs), &w, &s).unwrap();
        let perm: Vec<usize> = (0..k).rev().collect();
        let xp: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        let wp: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
        let ep = worst_case_error_on(&PointList::from_scalars(&xp), &wp, &s).unwrap();
        prop_assert!((e - ep).abs() <= 1e-12 * (1.0 + e));
    }

    #[test]
    fn sampled_supremum_is_a_lower_bound(seed in any::<u64>(), k in 1usize..8, terms in 1usize..6) {
        let s = spec(60, 0.2);
        let mut r = common::rng(seed);
        let xs = common::uniform(&mut r, 0.0, 1.0, k);
        let w = common::uniform(&mut r, 0.0, 1.0, k);
        let e = worst_case_error_on(&PointList::from_scalars(&xs), &w, &s).unwrap();
        let ys = common::uniform(&mut r, 0.0, 1.0, terms);
        let c = common::uniform(&mut r, -1.0, 1.0, terms);
        let base = s.base();
        let h = |y: f64| -> f64 {
            base.points().iter().zip(base.weights()).map(|(p, &bw)| bw * s.k(&[y], p).unwrap()).sum()
        };
        let mut norm2 = 0.0;
        let mut err = 0.0;
        for a in 0..terms {
            for b in 0..terms {
                norm2 += c[a] * c[b] * s.k(&[ys[a]], &[ys[b]]).unwrap();
            }
            let q: f64 = xs.iter().zip(&w).map(|(&x, &wi)| wi * s.k(&[x], &[ys[a]]).unwrap()).sum();
            err += c[a] * (h(ys[a]) - q);
        }
        prop_assume!(norm2 > 1e-8);
        prop_assert!(err.abs() / norm2.sqrt() <= e + 1e-9);
    }
}

#[test]
fn exact_rules_on_kernel_sections_have_zero_error() {
    let s = spec(40, 0.3);
    let base = s.base().clone();
    let centers = base.points().clone();
    let k = s.clone();
    let sys = FunctionSystem::custom_real(centers.len(), move |x| {
        Ok(centers.iter().map(|c| k.k(x, c).unwrap()).collect())
    });
    let rule = tchakaloff_rule(&sys, &base, ReduceOptions { rank_tol: 1e-14, ..ReduceOptions::default() }).unwrap();
    let w = rule.weights.as_real().unwrap();
    let e = worst_case_error_on(&rule.nodes, w, &s).unwrap();
    assert!(e <= 1e-6, "error {e:e}");
    assert_eq!(worst_case_error_on(base.points(), base.weights(), &s).unwrap(), 0.0);
}
