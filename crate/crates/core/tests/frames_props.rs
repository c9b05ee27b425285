mod common;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use tchak_core::caratheodory::ReduceOptions;
use tchak_core::frames::{
    frame_operator, gram_dimension, hermitian_devectorize, hermitian_vectorize, scalability_test, tune_to_target,
    FrameFamily,
};
use tchak_core::systems::Entries;
use tchak_core::{Field, C64};

fn family(seed: u64, complex: bool) -> FrameFamily {
    let mut r = common::rng(seed);
    let n = r.random_range(2..=4usize);
    let m = r.random_range(n..=40usize);
    if complex {
        FrameFamily::from_complex(common::complex_matrix(&mut r, n, m)).unwrap()
    } else {
        FrameFamily::from_real(common::real_matrix(&mut r, n, m)).unwrap()
    }
}

fn hermitian(seed: u64, n: usize, field: Field) -> Entries {
    let mut r = common::rng(seed);
    match field {
        Field::Real => {
            let a = common::real_matrix(&mut r, n, n);
            Entries::Real(&a + a.transpose())
        }
        Field::Complex => {
            let a = common::complex_matrix(&mut r, n, n);
            Entries::Complex(&a + a.adjoint())
        }
    }
}

fn unitary(seed: u64, n: usize) -> DMatrix<C64> {
    let mut r = common::rng(seed);
    common::complex_matrix(&mut r, n, n).qr().q()
}

proptest! {
    #[test]
    fn frame_operator_is_linear(seed in any::<u64>(), complex in any::<bool>(), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let fam = family(seed, complex);
        let mut r = common::rng(seed ^ 7);
        let w1 = common::uniform(&mut r, 0.0, 1.0, fam.len());
        let w2 = common::uniform(&mut r, 0.0, 1.0, fam.len());
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let s1 = frame_operator(&fam, &fam.measure(w1).unwrap()).unwrap().matrix.to_complex();
        let s2 = frame_operator(&fam, &fam.measure(w2).unwrap()).unwrap().matrix.to_complex();
        let s = frame_operator(&fam, &fam.measure(mix).unwrap()).unwrap().matrix.to_complex();
        let expect = s1.map(|z| z * a) + s2.map(|z| z * b);
        prop_assert!((s - &expect).norm() <= 1e-12 * (1.0 + expect.norm()));
    }

    #[test]
    fn scalable_measures_give_the_identity(seed in any::<u64>(), complex in any::<bool>()) {
        let fam = family(seed, complex);
        let res = scalability_test(&fam, 1e-9, ReduceOptions::default()).unwrap();
        if let Some(m) = res.measure() {
            let s = frame_operator(&fam, &m.to_measure(&fam).unwrap()).unwrap();
            prop_assert!(s.distance_to_identity() <= 1e-8);
            prop_assert!(m.len() <= gram_dimension(fam.n(), fam.field()));
        } else {
            let h = res.witness().unwrap();
            let vals = tchak_core::frames::witness_values(&fam, h);
            prop_assert!(vals.iter().all(|&v| v <= 1e-9));
            let tr: f64 = (0..fam.n()).map(|i| h.to_complex()[(i, i)].re).sum();
            prop_assert!(tr > 0.0);
        }
    }

    #[test]
    fn tuning_matches_the_transformed_test(seed in any::<u64>(), complex in any::<bool>()) {
        let fam = family(seed, complex);
        let n = fam.n();
        let field = fam.field();
        let mut r = common::rng(seed ^ 11);
        let target = match field {
            Field::Real => {
                let g = common::real_matrix(&mut r, n, n);
                Entries::Real(&g * g.transpose() + DMatrix::identity(n, n) * 0.1)
            }
            Field::Complex => {
                let g = common::complex_matrix(&mut r, n, n);
                Entries::Complex(&g * g.adjoint() + DMatrix::identity(n, n).map(|x: f64| C64::new(0.1 * x, 0.0)))
            }
        };
        let tuned = tune_to_target(&fam, &target, 1e-9, ReduceOptions::default()).unwrap();
        let tc = target.to_complex();
        let eig = tc.clone().symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)))
            * eig.eigenvectors.adjoint();
        let t = match field {
            Field::Real => Entries::Real(inv_sqrt.map(|z| z.re)),
            Field::Complex => Entries::Complex(inv_sqrt),
        };
        let moved = fam.transformed(&t).unwrap();
        let plain = scalability_test(&moved, 1e-9, ReduceOptions::default()).unwrap();
        prop_assert_eq!(tuned.is_scalable(), plain.is_scalable());
        if let Some(m) = tuned.measure() {
            let s = frame_operator(&fam, &m.to_measure(&fam).unwrap()).unwrap();
            prop_assert!(s.distance(&target) <= 1e-8 * (1.0 + tc.norm()));
        }
    }

    #[test]
    fn unitary_maps_keep_parseval_weights(seed in any::<u64>()) {
        let fam = family(seed, true);
        let res = scalability_test(&fam, 1e-9, ReduceOptions::default()).unwrap();
        let u = Entries::Complex(unitary(seed ^ 3, fam.n()));
        let moved = fam.transformed(&u).unwrap();
        if let Some(m) = res.measure() {
            let s = frame_operator(&moved, &m.to_measure(&moved).unwrap()).unwrap();
            prop_assert!(s.distance_to_identity() <= 1e-8);
        }
        let again = scalability_test(&moved, 1e-9, ReduceOptions::default()).unwrap();
        prop_assert_eq!(res.is_scalable(), again.is_scalable());
    }

    #[test]
    fn vectorization_is_an_isometry(seed in any::<u64>(), n in 1usize..6, complex in any::<bool>()) {
        let field = if complex { Field::Complex } else { Field::Real };
        let h = hermitian(seed, n, field);
        let c = hermitian_vectorize(&h);
        prop_assert_eq!(c.len(), gram_dimension(n, field));
        let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(norm, h.to_complex().norm(), max_relative = 1e-13);
        let back = hermitian_devectorize(&c, n, field).unwrap();
        prop_assert!((back.to_complex() - h.to_complex()).norm() <= 1e-13 * (1.0 + norm));
    }
}
