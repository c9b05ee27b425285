mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use tchak_core::caratheodory::{reduce, reduce_convex, ReduceOptions};
use tchak_core::systems::numerical_rank;
use tchak_core::EvaluationMatrix;

fn case(seed: u64) -> (EvaluationMatrix, Vec<f64>) {
    let mut r = common::rng(seed);
    let n = r.random_range(1..=8usize);
    let m = r.random_range(1..=200usize);
    let k = r.random_range(1..=n);
    let a = common::low_rank(&mut r, n, m, k);
    let w = (0..m).map(|_| if r.random::<f64>() < 0.1 { 0.0 } else { r.random::<f64>() }).collect();
    (EvaluationMatrix::real(a), w)
}

fn combo(m: &EvaluationMatrix, idx: &[usize], w: &[f64]) -> DVector<f64> {
    let a = m.as_real().unwrap();
    let mut s = DVector::zeros(a.nrows());
    for (&j, &x) in idx.iter().zip(w) {
        s += a.column(j) * x;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reduction_preserves_moments_and_bounds_support(seed in any::<u64>()) {
        let (m, w) = case(seed);
        let all: Vec<usize> = (0..w.len()).collect();
        let target = combo(&m, &all, &w);
        let red = reduce(&m, &w, ReduceOptions::default()).unwrap();
        let got = combo(&m, &red.indices, &red.weights);
        let rel = (&got - &target).norm() / target.norm().max(1e-300);
        prop_assert!(rel <= 1e-9 || target.norm() == 0.0, "relative residual {rel:e}");
        prop_assert!(red.indices.len() <= numerical_rank(&m, 1e-10));
        prop_assert!(red.weights.iter().all(|&x| x >= 0.0));
        prop_assert!(red.indices.windows(2).all(|p| p[0] < p[1]));
    }
}

proptest! {
    #[test]
    fn reduction_is_idempotent(seed in any::<u64>()) {
        let (m, w) = case(seed);
        let first = reduce(&m, &w, ReduceOptions::default()).unwrap();
        let sub = m.select_columns(&first.indices);
        let second = reduce(&sub, &first.weights, ReduceOptions::default()).unwrap();
        let relabeled: Vec<usize> = second.indices.iter().map(|&i| first.indices[i]).collect();
        prop_assert_eq!(relabeled, first.indices.clone());
        prop_assert_eq!(second.weights, first.weights);
    }

    #[test]
    fn convex_reduction_keeps_mass(seed in any::<u64>()) {
        let (m, w) = case(seed);
        let red = reduce_convex(&m, &w, ReduceOptions::default()).unwrap();
        let before: f64 = w.iter().sum();
        let after: f64 = red.weights.iter().sum();
        prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
        prop_assert!(red.indices.len() <= numerical_rank(&m, 1e-10) + 1);
    }
}

#[test]
fn complex_input_is_rejected() {
    let mut r = common::rng(1);
    let m = EvaluationMatrix::complex(common::complex_matrix(&mut r, 2, 4));
    assert!(reduce(&m, &[1.0; 4], ReduceOptions::default()).is_err());
}
