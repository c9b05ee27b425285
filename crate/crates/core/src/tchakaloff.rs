//! Exact quadrature with non-negative weights over discrete measures.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::caratheodory::{self, ReduceOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::{moments, DiscreteMeasure, MomentVector};
use crate::scalar::{Field, KahanSumC, C64};
use crate::systems::{evaluate, realify, Entries, FunctionSystem, PointList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    General,
    Real,
    Nonneg,
}

impl WeightClass {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightClass::General => "general",
            WeightClass::Real => "real",
            WeightClass::Nonneg => "nonneg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl Weights {
    pub fn len(&self) -> usize {
        match self {
            Weights::Real(w) => w.len(),
            Weights::Complex(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Weights::Real(w) => Some(w),
            Weights::Complex(_) => None,
        }
    }

    pub fn to_complex(&self) -> Vec<C64> {
        match self {
            Weights::Real(w) => w.iter().map(|&x| C64::new(x, 0.0)).collect(),
            Weights::Complex(w) => w.clone(),
        }
    }
}

/// Nodes taken from an input point list, their weights, and the moment
/// residual against the target the rule was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Positions of the nodes in the source point list.
    pub node_ids: Vec<usize>,
    pub nodes: PointList,
    pub weights: Weights,
    pub weight_class: WeightClass,
    /// Absolute moment residual `‖Σ w_j φ(x_j) − target‖₂`.
    pub residual: f64,
    /// The node-count bound the construction guarantees.
    pub node_bound_used: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    /// The rule as a measure on its nodes; only for real non-negative weights.
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        match &self.weights {
            Weights::Real(w) => DiscreteMeasure::new(self.nodes.clone(), w.clone()),
            Weights::Complex(_) => Err(Error::InvalidArgument("rule has complex weights".into())),
        }
    }

    pub fn total_weight(&self) -> C64 {
        let mut s = KahanSumC::default();
        for w in self.weights.to_complex() {
            s.add(w);
        }
        s.value()
    }

    /// `Σ_j w_j φ(x_j)`.
    pub fn moments(&self, system: &FunctionSystem) -> Result<MomentVector> {
        let m = evaluate(system, &self.nodes)?;
        Ok(weighted_moments(&m.entries, &self.weights))
    }

    /// Recomputes the residual against `target` through the same code path
    /// that produced `self.residual`.
    pub fn recompute_residual(&self, system: &FunctionSystem, target: &MomentVector) -> Result<f64> {
        self.moments(system)?.distance(target)
    }

    pub fn relative_residual(&self, target: &MomentVector) -> f64 {
        let t = target.norm();
        if t == 0.0 {
            self.residual
        } else {
            self.residual / t
        }
    }
}

pub(crate) fn weighted_moments(entries: &Entries, w: &Weights) -> MomentVector {
    match (entries, w) {
        (_, Weights::Real(w)) => crate::measures::weighted_column_sum(entries, w),
        (e, Weights::Complex(w)) => {
            let m = e.to_complex();
            MomentVector::Complex(
                (0..m.nrows())
                    .map(|i| {
                        let mut s = KahanSumC::default();
                        for (j, wj) in w.iter().enumerate() {
                            s.add(m[(i, j)] * wj);
                        }
                        s.value()
                    })
                    .collect(),
            )
        }
    }
}

/// Assembles a rule on a subset of `points` and records its residual.
pub(crate) fn build_rule(
    system: &FunctionSystem,
    points: &PointList,
    ids: Vec<usize>,
    weights: Weights,
    class: WeightClass,
    target: &MomentVector,
    bound: usize,
) -> Result<QuadratureRule> {
    let mut rule = QuadratureRule {
        nodes: points.select(&ids),
        node_ids: ids,
        weights,
        weight_class: class,
        residual: 0.0,
        node_bound_used: bound,
    };
    rule.residual = rule.recompute_residual(system, target)?;
    Ok(rule)
}

/// Non-negative rule with at most `effdim` nodes reproducing `moments(system, mu)`.
pub fn tchakaloff_rule(system: &FunctionSystem, mu: &DiscreteMeasure, opts: ReduceOptions) -> Result<QuadratureRule> {
    rule_impl(system, mu, opts, false)
}

/// As [`tchakaloff_rule`], also preserving total mass; at most `effdim + 1` nodes.
pub fn tchakaloff_rule_normalized(
    system: &FunctionSystem,
    mu: &DiscreteMeasure,
    opts: ReduceOptions,
) -> Result<QuadratureRule> {
    rule_impl(system, mu, opts, true)
}

fn rule_impl(system: &FunctionSystem, mu: &DiscreteMeasure, opts: ReduceOptions, mass: bool) -> Result<QuadratureRule> {
    let m = evaluate(system, mu.points())?;
    let r = realify(&m);
    let a = r.as_real().expect("realified");
    let target = moments(system, mu)?;
    let (red, bound) = if mass {
        let aug = a.clone().insert_row(a.nrows(), 1.0);
        (caratheodory::reduce_matrix_convex(a, mu.weights(), opts)?, linalg::numerical_rank(&aug, opts.rank_tol))
    } else {
        (caratheodory::reduce_matrix(a, mu.weights(), opts)?, linalg::numerical_rank(a, opts.rank_tol))
    };
    build_rule(system, mu.points(), red.indices, Weights::Real(red.weights), WeightClass::Nonneg, &target, bound)
}

/// Real evaluation matrix of `system` on `points`, realified.
pub(crate) fn real_matrix(system: &FunctionSystem, points: &PointList) -> Result<DMatrix<f64>> {
    let r = realify(&evaluate(system, points)?);
    Ok(r.as_real().expect("realified").clone())
}

/// Support size, subset indices and weights.
pub type MinimalRule = (usize, Vec<usize>, Vec<f64>);

/// Smallest support size admitting an exact non-negative rule, found by
/// trying every subset of `points` in increasing size. Returns the size and
/// one witnessing subset, or `None` if no subset of size `≤ max_size` works.
/// Exponential; meant for tiny grids.
pub fn minimal_rule_search(
    system: &FunctionSystem,
    points: &PointList,
    target: &MomentVector,
    max_size: usize,
    tol: f64,
) -> Result<Option<MinimalRule>> {
    let a = real_matrix(system, points)?;
    if target.field() == Field::Complex && system.field() == Field::Real {
        return Err(Error::InvalidArgument("complex target for a real system".into()));
    }
    let b = nalgebra::DVector::from_vec(match system.field() {
        Field::Real => target.realified(),
        Field::Complex => crate::systems::realify_vector(&target.to_complex()),
    });
    if b.len() != a.nrows() {
        return Err(Error::Dimension("target length differs from the system".into()));
    }
    let thresh = tol * (1.0 + b.norm());
    if b.norm() <= thresh {
        return Ok(Some((0, Vec::new(), Vec::new())));
    }
    let m = a.ncols();
    for k in 1..=max_size.min(m) {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            let sub = a.select_columns(&subset);
            let (w, res) = crate::cones::nnls(&sub, &b, 10 * k.max(1) + 10)?;
            if res <= thresh {
                return Ok(Some((k, subset, w.iter().copied().collect())));
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    Ok(None)
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fine_grid(m: usize) -> DiscreteMeasure {
        let xs: Vec<f64> = (0..m).map(|i| -1.0 + (2 * i + 1) as f64 / m as f64).collect();
        DiscreteMeasure::uniform(PointList::from_scalars(&xs), 2.0).unwrap()
    }

    #[test]
    fn cubic_rule_on_a_fine_grid() {
        let sys = FunctionSystem::monomial(4);
        let mu = fine_grid(2001);
        let rule = tchakaloff_rule(&sys, &mu, ReduceOptions::default()).unwrap();
        assert!(rule.len() <= 4);
        let target = moments(&sys, &mu).unwrap();
        assert!(rule.residual <= 1e-10 * target.norm());
        assert!(rule.weights.as_real().unwrap().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn normalized_rule_preserves_mass() {
        let sys = FunctionSystem::monomial(4);
        let mu = fine_grid(2001).normalized().unwrap();
        let rule = tchakaloff_rule_normalized(&sys, &mu, ReduceOptions::default()).unwrap();
        assert!(rule.len() <= 5);
        assert!((rule.total_weight().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn constant_system_gives_one_node() {
        let sys = FunctionSystem::constant(1.0);
        let mu = fine_grid(17);
        let rule = tchakaloff_rule_normalized(&sys, &mu, ReduceOptions::default()).unwrap();
        assert_eq!(rule.len(), 1);
        assert!((rule.total_weight().re - 2.0).abs() <= 1e-14);
    }

    #[test]
    fn small_support_is_returned_unchanged() {
        let sys = FunctionSystem::monomial(3);
        let mu = DiscreteMeasure::new(PointList::from_scalars(&[-0.5, 0.25]), vec![0.3, 0.9]).unwrap();
        let rule = tchakaloff_rule(&sys, &mu, ReduceOptions::default()).unwrap();
        assert_eq!(rule.node_ids, vec![0, 1]);
        assert_eq!(rule.weights, Weights::Real(vec![0.3, 0.9]));
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
    }
}
