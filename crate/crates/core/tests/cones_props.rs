mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use tchak_core::cones::{cone_membership, suitability, LinearResult, LinearVerdict, Verdict};
use tchak_core::{EvaluationMatrix, MomentVector, C64};

const TOL: f64 = 1e-9;

fn check_result(a: &nalgebra::DMatrix<f64>, b: &[f64], verdict: &Verdict) -> Result<(), TestCaseError> {
    let bv = DVector::from_column_slice(b);
    match verdict {
        Verdict::Feasible { weights } => {
            prop_assert!(weights.iter().all(|&x| x >= 0.0));
            let r = a * DVector::from_column_slice(weights) - &bv;
            prop_assert!(r.norm() <= 10.0 * TOL * (1.0 + bv.norm()), "residual {:e}", r.norm());
        }
        Verdict::Infeasible { certificate } => {
            let c = DVector::from_column_slice(certificate);
            prop_assert!((c.norm() - 1.0).abs() < 1e-12);
            let worst = (a.transpose() * &c).max();
            prop_assert!(worst <= 1e-9, "column value {worst:e}");
            prop_assert!(c.dot(&bv) > 0.0);
        }
    }
    Ok(())
}

fn instance(seed: u64) -> (nalgebra::DMatrix<f64>, Vec<f64>) {
    let mut r = common::rng(seed);
    let n = r.random_range(1..=5usize);
    let m = r.random_range(1..=30usize);
    let a = common::real_matrix(&mut r, n, m);
    let b = if r.random::<bool>() {
        let w: Vec<f64> = (0..m).map(|_| r.random::<f64>()).collect();
        (&a * DVector::from_vec(w)).iter().copied().collect()
    } else {
        common::uniform(&mut r, -1.0, 1.0, n)
    };
    (a, b)
}

fn linear_ok(r: &LinearResult) -> bool {
    matches!(r.verdict, LinearVerdict::Feasible { .. })
}

proptest! {
    #[test]
    fn exactly_one_valid_object(seed in any::<u64>()) {
        let (a, b) = instance(seed);
        let res = cone_membership(&EvaluationMatrix::real(a.clone()), &MomentVector::Real(b.clone()), TOL).unwrap();
        prop_assert!(res.weights().is_some() != res.certificate().is_some());
        check_result(&a, &b, &res.verdict)?;
    }

    #[test]
    fn more_points_never_break_feasibility(seed in any::<u64>(), extra in 1usize..10) {
        let (a, b) = instance(seed);
        let before = cone_membership(&EvaluationMatrix::real(a.clone()), &MomentVector::Real(b.clone()), TOL).unwrap();
        let mut r = common::rng(seed ^ 0x5eed);
        let more = common::real_matrix(&mut r, a.nrows(), extra);
        let big = nalgebra::DMatrix::from_fn(a.nrows(), a.ncols() + extra, |i, j| if j < a.ncols() { a[(i, j)] } else { more[(i, j - a.ncols())] });
        let after = cone_membership(&EvaluationMatrix::real(big), &MomentVector::Real(b), TOL).unwrap();
        prop_assert!(!before.is_feasible() || after.is_feasible());
    }

    #[test]
    fn verdicts_are_nested(seed in any::<u64>(), complex in any::<bool>()) {
        let mut r = common::rng(seed);
        let n = r.random_range(1..=4usize);
        let m = r.random_range(1..=12usize);
        let (mat, b) = if complex {
            let a = common::complex_matrix(&mut r, n, m);
            let w: Vec<C64> = (0..m).map(|_| C64::new(r.random::<f64>() - 0.3, 0.0)).collect();
            let b: Vec<C64> = (&a * DVector::from_vec(w)).iter().copied().collect();
            (EvaluationMatrix::complex(a), MomentVector::Complex(b))
        } else {
            let a = common::real_matrix(&mut r, n, m);
            (EvaluationMatrix::real(a), MomentVector::Real(common::uniform(&mut r, -1.0, 1.0, n)))
        };
        let rep = suitability(&mat, &b, TOL).unwrap();
        if rep.nonneg_weights.is_feasible() {
            prop_assert!(linear_ok(&rep.r_weights));
        }
        if linear_ok(&rep.r_weights) {
            prop_assert!(linear_ok(&rep.k_weights));
        }
    }
}
