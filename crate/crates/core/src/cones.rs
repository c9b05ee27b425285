//! Cone and span membership with certificates, and positive discretization
//! of functionals on finite domains.
//!
//! Every verdict here is relative to the supplied finite point set; no
//! statement is made about points that were not supplied.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::caratheodory::{self, ReduceOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::MomentVector;
use crate::scalar::{Field, C64};
use crate::systems::{evaluate, realify, realify_vector, select_independent_points, Entries, EvaluationMatrix, FunctionSystem, PointList};
use crate::tchakaloff::{build_rule, QuadratureRule, WeightClass, Weights};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Non-negative weights with `Φw ≈ b`.
    Feasible { weights: Vec<f64> },
    /// Unit vector `c` with `cᵀΦ ≤ 0` (to tolerance) and `cᵀb > 0`.
    Infeasible { certificate: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub verdict: Verdict,
    /// Optimal NNLS residual `‖Φw* − b‖₂`.
    pub residual: f64,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, Verdict::Feasible { .. })
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.verdict {
            Verdict::Feasible { weights } => Some(weights),
            Verdict::Infeasible { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&[f64]> {
        match &self.verdict {
            Verdict::Infeasible { certificate } => Some(certificate),
            Verdict::Feasible { .. } => None,
        }
    }
}

/// Lawson–Hanson active-set NNLS: `argmin ‖Aw − b‖₂` over `w ≥ 0`.
/// Returns the solution and its residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<(DVector<f64>, f64)> {
    let (rows, n) = a.shape();
    if b.len() != rows {
        return Err(Error::Dimension(alloc::format!("{rows} rows but target of length {}", b.len())));
    }
    let mut x = DVector::<f64>::zeros(n);
    if n == 0 || rows == 0 {
        return Ok((x, b.norm()));
    }
    let dual_tol = 10.0 * rows.max(n) as f64 * f64::EPSILON * a.norm() * b.norm();
    let mut passive = alloc::vec![false; n];
    // Columns whose entry would be non-positive when freed; skipped until `x` moves.
    let mut blocked = alloc::vec![false; n];
    let mut iterations = 0;
    loop {
        let r = b - a * &x;
        let w = a.transpose() * &r;
        let mut best = None;
        let mut best_w = dual_tol;
        for j in 0..n {
            if !passive[j] && !blocked[j] && w[j] > best_w {
                best_w = w[j];
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if iterations >= max_iter {
            return Err(Error::Indeterminate { iterations, residual: r.norm() });
        }
        iterations += 1;
        passive[j] = true;
        let solve = |passive: &[bool]| {
            let p: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let s = linalg::lstsq(&a.select_columns(&p), b, 1e-13);
            (p, s)
        };
        let (mut p, mut s) = solve(&passive);
        let kj = p.iter().position(|&i| i == j).expect("just added");
        if s[kj] <= 0.0 {
            // Rounding made the dual test pass; freeing `j` would not help.
            passive[j] = false;
            blocked[j] = true;
            continue;
        }
        blocked.fill(false);
        loop {
            if s.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in p.iter().enumerate() {
                    x[i] = s[k];
                }
                break;
            }
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Indeterminate { iterations, residual: (b - a * &x).norm() });
            }
            let mut alpha = 1.0f64;
            for (k, &i) in p.iter().enumerate() {
                if s[k] <= 0.0 {
                    let denom = x[i] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (k, &i) in p.iter().enumerate() {
                x[i] += alpha * (s[k] - x[i]);
            }
            let mut moved = false;
            for (k, &i) in p.iter().enumerate() {
                if x[i] <= 1e-15 * x.amax() || (s[k] <= 0.0 && alpha == 0.0 && x[i] == 0.0) {
                    passive[i] = false;
                    x[i] = 0.0;
                    moved = true;
                }
            }
            if !moved {
                // Guard against a stalled step: drop the most negative entry.
                let (k, _) = s.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
                passive[p[k]] = false;
                x[p[k]] = 0.0;
            }
            if !passive.iter().any(|&v| v) {
                break;
            }
            (p, s) = solve(&passive);
        }
    }
    let res = (b - a * &x).norm();
    Ok((x, res))
}

/// Decides `b ∈ cone{columns of m}`: feasible iff the NNLS residual is at most
/// `tol · (1 + ‖b‖)`; otherwise the certificate is the normalized residual.
pub fn cone_membership(m: &EvaluationMatrix, b: &MomentVector, tol: f64) -> Result<FeasibilityResult> {
    let a = m
        .as_real()
        .ok_or_else(|| Error::InvalidArgument("cone membership needs a real matrix".into()))?;
    let bv = match b {
        MomentVector::Real(v) => DVector::from_column_slice(v),
        MomentVector::Complex(_) => return Err(Error::InvalidArgument("cone membership needs a real target".into())),
    };
    cone_membership_matrix(a, &bv, tol)
}

pub(crate) fn cone_membership_matrix(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<FeasibilityResult> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(alloc::format!("{} rows but target of length {}", a.nrows(), b.len())));
    }
    let (x, residual) = nnls(a, b, 10 * a.ncols().max(1))?;
    if residual <= tol * (1.0 + b.norm()) {
        return Ok(FeasibilityResult { verdict: Verdict::Feasible { weights: x.iter().copied().collect() }, residual });
    }
    let r = b - a * &x;
    let c = &r / r.norm();
    Ok(FeasibilityResult { verdict: Verdict::Infeasible { certificate: c.iter().copied().collect() }, residual })
}

/// Outcome of a positive discretization attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalOutcome {
    Rule(QuadratureRule),
    Infeasible(FeasibilityResult),
}

/// Non-negative rule on the finite domain `omega` for the functional with
/// values `l_values = (L(φ_1), …, L(φ_n))`, or a separating certificate.
pub fn discretize_functional(
    system: &FunctionSystem,
    omega: &PointList,
    l_values: &MomentVector,
    tol: f64,
    opts: ReduceOptions,
) -> Result<FunctionalOutcome> {
    if l_values.len() != system.len() {
        return Err(Error::Dimension(alloc::format!("{} values for {} functions", l_values.len(), system.len())));
    }
    let target = match (system.field(), l_values) {
        (Field::Real, MomentVector::Complex(v)) if v.iter().any(|z| z.im != 0.0) => {
            return Err(Error::InvalidArgument("complex functional values for a real system".into()))
        }
        (Field::Real, v) => MomentVector::Real(v.to_complex().iter().map(|z| z.re).collect()),
        (Field::Complex, v) => MomentVector::Complex(v.to_complex()),
    };
    let a = realify(&evaluate(system, omega)?);
    let a = a.as_real().expect("realified");
    let b = DVector::from_vec(match &target {
        MomentVector::Real(v) => v.clone(),
        MomentVector::Complex(v) => realify_vector(v),
    });
    let res = cone_membership_matrix(a, &b, tol)?;
    let Verdict::Feasible { weights } = &res.verdict else {
        return Ok(FunctionalOutcome::Infeasible(res));
    };
    let red = caratheodory::reduce_matrix(a, weights, opts)?;
    let bound = linalg::numerical_rank(a, opts.rank_tol);
    let rule = build_rule(system, omega, red.indices, Weights::Real(red.weights), WeightClass::Nonneg, &target, bound)?;
    Ok(FunctionalOutcome::Rule(rule))
}

/// Span membership over `K` or `ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearVerdict {
    Feasible { weights: Weights },
    /// Unit vector orthogonal to every column with positive inner product with `b`.
    Infeasible { witness: Weights },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearResult {
    pub verdict: LinearVerdict,
    pub residual: f64,
}

impl LinearResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, LinearVerdict::Feasible { .. })
    }
}

/// Whether a point set supports exact rules with weights in `K`, in `ℝ`, and
/// non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SuitabilityReport {
    pub k_weights: LinearResult,
    pub r_weights: LinearResult,
    pub nonneg_weights: FeasibilityResult,
}

pub fn suitability(m: &EvaluationMatrix, b: &MomentVector, tol: f64) -> Result<SuitabilityReport> {
    if b.len() != m.nrows() {
        return Err(Error::Dimension(alloc::format!("{} rows but target of length {}", m.nrows(), b.len())));
    }
    let k_weights = match &m.entries {
        Entries::Real(a) => match b {
            MomentVector::Real(v) => linear_real(a, &DVector::from_column_slice(v), tol),
            MomentVector::Complex(v) => linear_complex(&a.map(|x| C64::new(x, 0.0)), &DVector::from_column_slice(v), tol),
        },
        Entries::Complex(a) => linear_complex(a, &DVector::from_vec(b.to_complex()), tol),
    };
    let rb = DVector::from_vec(match m.field() {
        Field::Real if b.field() == Field::Real => b.realified(),
        Field::Real => b.to_complex().iter().map(|z| z.re).collect::<Vec<_>>(),
        Field::Complex => realify_vector(&b.to_complex()),
    });
    let ra = realify(m);
    let ra = ra.as_real().expect("realified");
    let mut r_weights = linear_real(ra, &rb, tol);
    let mut nonneg_weights = cone_membership_matrix(ra, &rb, tol)?;
    if m.field() == Field::Real && b.field() == Field::Complex && b.to_complex().iter().any(|z| z.im != 0.0) {
        // Real columns cannot produce an imaginary part with real weights.
        let im: Vec<f64> = b.to_complex().iter().map(|z| z.im).collect();
        let nrm = im.iter().map(|x| x * x).sum::<f64>().sqrt();
        let witness: Vec<C64> = im.iter().map(|&x| C64::new(0.0, x / nrm)).collect();
        r_weights = LinearResult { verdict: LinearVerdict::Infeasible { witness: Weights::Complex(witness.clone()) }, residual: nrm };
        nonneg_weights = FeasibilityResult {
            verdict: Verdict::Infeasible { certificate: witness.iter().map(|z| z.im).collect() },
            residual: nrm,
        };
    }
    Ok(SuitabilityReport { k_weights, r_weights, nonneg_weights })
}

fn linear_real(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> LinearResult {
    let x = linalg::lstsq(a, b, crate::DEFAULT_RANK_TOL);
    let r = b - a * &x;
    let residual = r.norm();
    if residual <= tol * (1.0 + b.norm()) {
        LinearResult { verdict: LinearVerdict::Feasible { weights: Weights::Real(x.iter().copied().collect()) }, residual }
    } else {
        let c = &r / residual;
        LinearResult { verdict: LinearVerdict::Infeasible { witness: Weights::Real(c.iter().copied().collect()) }, residual }
    }
}

fn linear_complex(a: &DMatrix<C64>, b: &DVector<C64>, tol: f64) -> LinearResult {
    let x = linalg::lstsq(a, b, crate::DEFAULT_RANK_TOL);
    let r = b - a * &x;
    let residual = r.norm();
    if residual <= tol * (1.0 + b.norm()) {
        LinearResult { verdict: LinearVerdict::Feasible { weights: Weights::Complex(x.iter().copied().collect()) }, residual }
    } else {
        let c = r.map(|z| z / residual);
        LinearResult { verdict: LinearVerdict::Infeasible { witness: Weights::Complex(c.iter().copied().collect()) }, residual }
    }
}

/// Exact rule with weights in `K` (at most `n` nodes) or in `ℝ` (at most
/// `effdim` nodes), from a pivoted subset of `points` and a linear solve.
pub fn discretize_linear(
    system: &FunctionSystem,
    points: &PointList,
    b: &MomentVector,
    field: Field,
    tol: f64,
) -> Result<QuadratureRule> {
    if b.len() != system.len() {
        return Err(Error::Dimension(alloc::format!("{} values for {} functions", b.len(), system.len())));
    }
    let m = evaluate(system, points)?;
    let thresh = tol * (1.0 + b.norm());
    let (ids, weights, class) = if field == Field::Real || system.field() == Field::Real {
        {
            let r = realify(&m);
            let rb = DVector::from_vec(match system.field() {
                Field::Real => b.to_complex().iter().map(|z| z.re).collect(),
                Field::Complex => realify_vector(&b.to_complex()),
            });
            if system.field() == Field::Real && b.to_complex().iter().any(|z| z.im != 0.0) {
                let im = b.to_complex().iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
                return Err(Error::SpanViolation { residual: im });
            }
            let ids = select_independent_points(&r, crate::DEFAULT_RANK_TOL);
            let a = r.as_real().expect("realified").select_columns(&ids);
            let x = linalg::lstsq(&a, &rb, crate::DEFAULT_RANK_TOL);
            let res = (&rb - &a * &x).norm();
            if res > thresh {
                return Err(Error::SpanViolation { residual: res });
            }
            let class = if field == Field::Real { WeightClass::Real } else { WeightClass::General };
            (ids, Weights::Real(x.iter().copied().collect()), class)
        }
    } else {
        {
            let a = m.entries.to_complex();
            let bc = DVector::from_vec(b.to_complex());
            let ids = select_independent_points(&m, crate::DEFAULT_RANK_TOL);
            let sub = a.select_columns(&ids);
            let x = linalg::lstsq(&sub, &bc, crate::DEFAULT_RANK_TOL);
            let res = (&bc - &sub * &x).norm();
            if res > thresh {
                return Err(Error::SpanViolation { residual: res });
            }
            (ids, Weights::Complex(x.iter().copied().collect()), WeightClass::General)
        }
    };
    let bound = match class {
        WeightClass::General => system.len(),
        _ => linalg::numerical_rank(realify(&m).as_real().expect("realified"), crate::DEFAULT_RANK_TOL),
    };
    let target = match system.field() {
        Field::Real => MomentVector::Real(b.to_complex().iter().map(|z| z.re).collect()),
        Field::Complex => MomentVector::Complex(b.to_complex()),
    };
    build_rule(system, points, ids, weights, class, &target, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn zero_target_is_feasible_with_zero_weights() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let res = cone_membership_matrix(&a, &DVector::zeros(2), 1e-9).unwrap();
        assert_eq!(res.weights().unwrap(), &[0.0; 3]);
    }

    #[test]
    fn inverse_and_constant_have_no_positive_rule_for_the_first_moment_only() {
        let xs: Vec<f64> = (0..200).map(|i| 0.75 * 1.05f64.powi(i)).collect();
        let a = DMatrix::from_fn(2, xs.len(), |i, j| if i == 0 { 1.0 / xs[j] } else { 1.0 });
        let b = DVector::from_vec(vec![1.0, 0.0]);
        let res = cone_membership_matrix(&a, &b, 1e-9).unwrap();
        let c = DVector::from_column_slice(res.certificate().unwrap());
        assert!((a.transpose() * &c).max() <= 1e-9);
        assert!(c.dot(&b) >= 0.5);
    }

    #[test]
    fn known_combination_is_recovered() {
        let a = DMatrix::from_row_slice(3, 5, &[1.0, 2.0, 0.5, 1.0, 3.0, 0.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.2, 0.7]);
        let w0 = DVector::from_vec(vec![0.0, 0.3, 0.0, 1.2, 0.5]);
        let b = &a * &w0;
        let res = cone_membership_matrix(&a, &b, 1e-9).unwrap();
        assert!(res.is_feasible());
        assert!(res.residual <= 1e-10);
    }

    #[test]
    fn point_evaluation_is_one_node() {
        let sys = FunctionSystem::monomial(3);
        let omega = PointList::from_scalars(&[0.0, 0.5, 1.0, 1.5]);
        let l = MomentVector::Real(vec![1.0, 0.5, 0.25]);
        let FunctionalOutcome::Rule(rule) = discretize_functional(&sys, &omega, &l, 1e-9, ReduceOptions::default()).unwrap()
        else {
            panic!("expected a rule")
        };
        assert_eq!(rule.node_ids, vec![1]);
        assert!((rule.weights.as_real().unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_on_the_unit_interval() {
        let sys = FunctionSystem::constant(1.0);
        let pts = PointList::from_scalars(&[0.0, 0.5, 1.0]);
        let rule = discretize_linear(&sys, &pts, &MomentVector::Real(vec![1.0]), Field::Complex, 1e-10).unwrap();
        assert_eq!(rule.len(), 1);
        assert!(rule.residual < 1e-14);
    }

    #[test]
    fn complex_weights_for_a_trig_space() {
        let sys = FunctionSystem::fourier(-1, 3, 2.0 * PI);
        let xs: Vec<f64> = (0..50).map(|i| 0.1 + 0.05 * i as f64).collect();
        let pts = PointList::from_scalars(&xs);
        let mu = crate::DiscreteMeasure::uniform(pts.clone(), 1.0).unwrap();
        let b = crate::measures::moments(&sys, &mu).unwrap();
        let rule = discretize_linear(&sys, &pts, &b, Field::Complex, 1e-10).unwrap();
        assert_eq!(rule.len(), 3);
        assert!(rule.residual <= 1e-10);
    }

    #[test]
    fn suitability_verdicts_nest() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let m = EvaluationMatrix::real(a);
        let rep = suitability(&m, &MomentVector::Real(vec![1.0, -1.0]), 1e-9).unwrap();
        assert!(rep.k_weights.is_feasible());
        assert!(rep.r_weights.is_feasible());
        assert!(!rep.nonneg_weights.is_feasible());
    }
}
