//! Carathéodory elimination: shrink a non-negative combination of columns to
//! at most `rank` columns without changing the combined vector.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::KahanSum;
use crate::systems::EvaluationMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReduceOptions {
    /// Weights at or below `weight_tol · max(w)` are dropped after each step.
    pub weight_tol: f64,
    /// Relative singular-value threshold for rank decisions.
    pub rank_tol: f64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self { weight_tol: crate::DEFAULT_WEIGHT_TOL, rank_tol: crate::DEFAULT_RANK_TOL }
    }
}

/// Surviving column positions (ascending) and their new weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// `‖m·w − m_S·w_S‖₂`.
    pub residual: f64,
}

impl Reduction {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Conic reduction of a real evaluation matrix. The returned indices are
/// column positions in `m`.
pub fn reduce(m: &EvaluationMatrix, w: &[f64], opts: ReduceOptions) -> Result<Reduction> {
    let a = m
        .as_real()
        .ok_or_else(|| Error::InvalidArgument("reduce needs a real matrix; realify complex systems first".into()))?;
    reduce_matrix(a, w, opts)
}

/// As [`reduce`], additionally preserving `Σ w`.
pub fn reduce_convex(m: &EvaluationMatrix, w: &[f64], opts: ReduceOptions) -> Result<Reduction> {
    let a = m
        .as_real()
        .ok_or_else(|| Error::InvalidArgument("reduce needs a real matrix; realify complex systems first".into()))?;
    reduce_matrix_convex(a, w, opts)
}

pub(crate) fn reduce_matrix_convex(a: &DMatrix<f64>, w: &[f64], opts: ReduceOptions) -> Result<Reduction> {
    // The ones row is scaled to the column norms so rank decisions see it.
    let scale = (0..a.ncols()).map(|j| a.column(j).norm()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut aug = a.clone().insert_row(a.nrows(), scale);
    if a.nrows() == 0 {
        aug = DMatrix::from_element(1, a.ncols(), 1.0);
    }
    let mut out = reduce_matrix(&aug, w, opts)?;
    out.residual = residual(a, w, &out.indices, &out.weights);
    Ok(out)
}

pub(crate) fn reduce_matrix(a: &DMatrix<f64>, w: &[f64], opts: ReduceOptions) -> Result<Reduction> {
    if w.len() != a.ncols() {
        return Err(Error::Dimension(alloc::format!("{} columns but {} weights", a.ncols(), w.len())));
    }
    if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidArgument(alloc::format!("weight {i} = {} is negative or not finite", w[i])));
    }
    let mut active: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let mut weights: Vec<f64> = active.iter().map(|&i| w[i]).collect();
    let mut changed = false;

    for _pass in 0..16 {
        let sub = a.select_columns(&active);
        let rank = linalg::numerical_rank(&sub, opts.rank_tol);
        if active.len() <= rank {
            let (indices, weights) = if changed {
                let target = mat_vec(a, w);
                polish(a, &target, active, weights)
            } else {
                (active, weights)
            };
            let residual = residual(a, w, &indices, &weights);
            return Ok(Reduction { indices, weights, residual });
        }
        changed = true;
        let c = compress_rows(&sub, rank);
        let (keep, new_w) = eliminate(&c, &weights, opts)?;
        active = keep.iter().map(|&k| active[k]).collect();
        weights = new_w;
    }
    let sub = a.select_columns(&active);
    Err(Error::NullspaceNotFound { active: active.len(), bound: linalg::numerical_rank(&sub, opts.rank_tol) })
}

/// `U_rᵀ A` for the leading `r` left singular vectors: same column dependencies,
/// `r` rows.
fn compress_rows(a: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    if r == 0 {
        return DMatrix::zeros(0, a.ncols());
    }
    let svd = SVD::new(a.clone(), true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let ur = u.select_columns(&order[..r]);
    ur.transpose() * a
}

/// Windowed elimination on an `r × k` matrix of rank `r`: at most `r + 1`
/// columns are in play at a time, refilled from the remaining candidates.
/// Returns surviving local positions and weights.
fn eliminate(c: &DMatrix<f64>, w: &[f64], opts: ReduceOptions) -> Result<(Vec<usize>, Vec<f64>)> {
    let r = c.nrows();
    let k = c.ncols();
    let mut suffix_max = alloc::vec![0.0f64; k + 1];
    for i in (0..k).rev() {
        suffix_max[i] = suffix_max[i + 1].max(w[i]);
    }
    let mut window: Vec<usize> = Vec::with_capacity(r + 1);
    let mut ww: Vec<f64> = Vec::with_capacity(r + 1);
    let mut next = 0;
    loop {
        while window.len() < r + 1 && next < k {
            window.push(next);
            ww.push(w[next]);
            next += 1;
        }
        if window.len() <= r {
            break;
        }
        let sub = c.select_columns(&window);
        let (mut z, _, _) = linalg::null_vector(&sub);
        // Largest entry positive, so a noise-level positive entry cannot set a huge step.
        let big = z.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if big < 0.0 {
            z = -z;
        }
        let mut arg = usize::MAX;
        let mut t = f64::INFINITY;
        for (i, &zi) in z.iter().enumerate() {
            if zi > 0.0 {
                let ratio = ww[i] / zi;
                if ratio < t {
                    t = ratio;
                    arg = i;
                }
            }
        }
        for (i, &zi) in z.iter().enumerate() {
            ww[i] -= t * zi;
        }
        ww[arg] = 0.0;
        let wmax = ww.iter().copied().fold(suffix_max[next], f64::max);
        let cut = opts.weight_tol * wmax;
        for (i, &v) in ww.iter().enumerate() {
            if v < -cut {
                return Err(Error::NegativeWeight { index: window[i], value: v });
            }
        }
        let mut j = 0;
        while j < window.len() {
            if ww[j] <= cut {
                window.swap_remove(j);
                ww.swap_remove(j);
            } else {
                j += 1;
            }
        }
    }
    let mut pairs: Vec<(usize, f64)> = window.into_iter().zip(ww).collect();
    pairs.sort_by_key(|p| p.0);
    Ok(pairs.into_iter().unzip())
}

/// Least-squares refinement on the final support, kept only if it stays
/// non-negative and lowers the residual.
fn polish(a: &DMatrix<f64>, target: &DVector<f64>, idx: Vec<usize>, w: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
    let mut w: Vec<f64> = w.into_iter().map(|x| x.max(0.0)).collect();
    if idx.is_empty() {
        return (idx, w);
    }
    let sub = a.select_columns(&idx);
    let before = residual_to(&sub, &w, target);
    let refined = linalg::lstsq(&sub, target, 1e-14);
    if refined.iter().all(|&x| x >= 0.0) {
        let rw: Vec<f64> = refined.iter().copied().collect();
        if residual_to(&sub, &rw, target) < before {
            w = rw;
        }
    }
    (idx, w)
}

fn mat_vec(a: &DMatrix<f64>, w: &[f64]) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| {
        let mut s = KahanSum::default();
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                s.add(a[(i, j)] * wj);
            }
        }
        s.value()
    })
}

fn residual_to(sub: &DMatrix<f64>, w: &[f64], target: &DVector<f64>) -> f64 {
    let got = mat_vec(sub, w);
    (got - target).norm()
}

/// `‖a·w − a_S·w_S‖₂` with compensated sums.
pub(crate) fn residual(a: &DMatrix<f64>, w: &[f64], idx: &[usize], ws: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        let mut acc = KahanSum::default();
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                acc.add(a[(i, j)] * wj);
            }
        }
        for (&j, &wj) in idx.iter().zip(ws) {
            acc.add(-a[(i, j)] * wj);
        }
        let d = acc.value();
        s += d * d;
    }
    s.sqrt()
}
