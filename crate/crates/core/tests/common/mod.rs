#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tchak_core::{DiscreteMeasure, FunctionSystem, PointList, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

pub fn real_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn complex_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<C64> {
    DMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
}

/// Low-rank matrix `A·B` with inner dimension `rank`.
pub fn low_rank(rng: &mut ChaCha8Rng, r: usize, c: usize, rank: usize) -> DMatrix<f64> {
    real_matrix(rng, r, rank) * real_matrix(rng, rank, c)
}

pub fn low_rank_complex(rng: &mut ChaCha8Rng, r: usize, c: usize, rank: usize) -> DMatrix<C64> {
    complex_matrix(rng, r, rank) * complex_matrix(rng, rank, c)
}

/// A random system of one of several families, with a measure of `m` points.
pub fn instance(seed: u64, n: usize, m: usize) -> (FunctionSystem, DiscreteMeasure) {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..m).map(|_| if r.random::<f64>() < 0.1 { 0.0 } else { r.random::<f64>() }).collect();
    let (sys, pts) = match seed % 5 {
        0 => (FunctionSystem::legendre(n, true), PointList::from_scalars(&uniform(&mut r, -1.0, 1.0, m))),
        1 => (FunctionSystem::fourier(-(n as i64) / 2, n, 1.0), PointList::from_scalars(&uniform(&mut r, 0.0, 1.0, m))),
        2 => (FunctionSystem::real_trig(n, 1.0, false), PointList::from_scalars(&uniform(&mut r, 0.0, 1.0, m))),
        3 => {
            let k = r.random_range(1..=n);
            (FunctionSystem::matrix_real(low_rank(&mut r, n, m, k)), PointList::indices(m))
        }
        _ => {
            let k = r.random_range(1..=n);
            (FunctionSystem::matrix_complex(low_rank_complex(&mut r, n, m, k)), PointList::indices(m))
        }
    };
    (sys, DiscreteMeasure::new(pts, w).unwrap())
}

pub fn rel_dist(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let s: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    d / s.max(1e-300)
}
