//! Discrete measures, moment vectors and Monte-Carlo proxies.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Field, KahanSum, KahanSumC, C64};
use crate::systems::{evaluate, Entries, FunctionSystem};

pub use crate::systems::PointList;

/// A finite point set with non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: PointList,
    weights: Vec<f64>,
    total_mass: f64,
}

impl DiscreteMeasure {
    pub fn new(points: PointList, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("weight {i} = {} is not a finite non-negative number", weights[i])));
        }
        let total_mass = compensated_sum(weights.iter().copied());
        Ok(Self { points, weights, total_mass })
    }

    /// Equal weights `total_mass / M` on the given points.
    pub fn uniform(points: PointList, total_mass: f64) -> Result<Self> {
        let m = points.len();
        let w = if m == 0 { 0.0 } else { total_mass / m as f64 };
        Self::new(points, alloc::vec![w; m])
    }

    pub fn points(&self) -> &PointList {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Ids of the points with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn restrict(&self, ids: &[usize]) -> DiscreteMeasure {
        let weights = ids.iter().map(|&i| self.weights[i]).collect::<Vec<_>>();
        let total_mass = compensated_sum(weights.iter().copied());
        DiscreteMeasure { points: self.points.select(ids), weights, total_mass }
    }

    /// `a·self + b·other` on the concatenated point lists.
    pub fn combine(&self, a: f64, other: &DiscreteMeasure, b: f64) -> Result<DiscreteMeasure> {
        let points = self.points.concat(&other.points)?;
        let weights = self
            .weights
            .iter()
            .map(|w| a * w)
            .chain(other.weights.iter().map(|w| b * w))
            .collect();
        DiscreteMeasure::new(points, weights)
    }

    /// Drops atoms below `1e-15 · total_mass`. Never applied implicitly.
    pub fn compact(&self) -> DiscreteMeasure {
        let cut = 1e-15 * self.total_mass;
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > cut).collect();
        self.restrict(&keep)
    }

    /// The same points rescaled to total mass 1.
    pub fn normalized(&self) -> Result<DiscreteMeasure> {
        if self.total_mass <= 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero measure".into()));
        }
        let w = self.weights.iter().map(|w| w / self.total_mass).collect();
        DiscreteMeasure::new(self.points.clone(), w)
    }
}

/// Integrals `∫ φ_k dμ` of a function system.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentVector {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl MomentVector {
    pub fn field(&self) -> Field {
        match self {
            MomentVector::Real(_) => Field::Real,
            MomentVector::Complex(_) => Field::Complex,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            MomentVector::Real(v) => v.len(),
            MomentVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        let s = match self {
            MomentVector::Real(v) => compensated_sum(v.iter().map(|x| x * x)),
            MomentVector::Complex(v) => compensated_sum(v.iter().map(|z| z.norm_sqr())),
        };
        s.sqrt()
    }

    /// `‖self − other‖₂`; mixed fields compare as complex vectors.
    pub fn distance(&self, other: &MomentVector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!("moment lengths {} and {}", self.len(), other.len())));
        }
        let a = self.to_complex();
        let b = other.to_complex();
        let s = compensated_sum(a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()));
        Ok(s.sqrt())
    }

    pub fn to_complex(&self) -> Vec<C64> {
        match self {
            MomentVector::Real(v) => v.iter().map(|&x| C64::new(x, 0.0)).collect(),
            MomentVector::Complex(v) => v.clone(),
        }
    }

    /// Entries with `(Re, Im)` interleaved for complex vectors.
    pub fn realified(&self) -> Vec<f64> {
        match self {
            MomentVector::Real(v) => v.clone(),
            MomentVector::Complex(v) => crate::systems::realify_vector(v),
        }
    }
}

/// `Σ_j w_j φ(x_j)` with compensated summation.
pub fn moments(system: &FunctionSystem, mu: &DiscreteMeasure) -> Result<MomentVector> {
    let m = evaluate(system, mu.points())?;
    Ok(weighted_column_sum(&m.entries, mu.weights()))
}

pub(crate) fn weighted_column_sum(entries: &Entries, w: &[f64]) -> MomentVector {
    match entries {
        Entries::Real(m) => MomentVector::Real(
            (0..m.nrows())
                .map(|i| {
                    let mut s = KahanSum::default();
                    for (j, wj) in w.iter().enumerate() {
                        s.add(wj * m[(i, j)]);
                    }
                    s.value()
                })
                .collect(),
        ),
        Entries::Complex(m) => MomentVector::Complex(
            (0..m.nrows())
                .map(|i| {
                    let mut s = KahanSumC::default();
                    for (j, wj) in w.iter().enumerate() {
                        s.add(m[(i, j)] * *wj);
                    }
                    s.value()
                })
                .collect(),
        ),
    }
}

/// A source of iid points standing in for a continuous measure.
#[derive(Debug, Clone)]
pub enum Sampler {
    /// Uniform on the box `[low_i, high_i]`, scaled to `total_mass`.
    Uniform { low: Vec<f64>, high: Vec<f64>, total_mass: f64 },
    /// Draws atoms of a discrete measure with probability proportional to their weight.
    Discrete(DiscreteMeasure),
    /// Draws atoms of `base` with probability `ϱ(x_i)·w_i / Σ ϱ w`, where
    /// `density` holds `ϱ` relative to `base`.
    Density { base: DiscreteMeasure, density: Vec<f64> },
}

impl Sampler {
    /// The density `ϱ(x) = k(x,x) / ∫ k(y,y) dμ(y)` for a kernel diagonal
    /// evaluated on the atoms of `base`.
    pub fn kernel_diagonal_density(base: DiscreteMeasure, diagonal: &[f64]) -> Result<Self> {
        if diagonal.len() != base.len() {
            return Err(Error::Dimension("kernel diagonal length differs from the measure".into()));
        }
        let trace = compensated_sum(base.weights().iter().zip(diagonal).map(|(w, k)| w * k));
        if !(trace > 0.0) {
            return Err(Error::InvalidArgument("kernel trace must be positive".into()));
        }
        let density = diagonal.iter().map(|k| k / trace).collect();
        Ok(Sampler::Density { base, density })
    }

    fn total_mass(&self) -> f64 {
        match self {
            Sampler::Uniform { total_mass, .. } => *total_mass,
            Sampler::Discrete(mu) => mu.total_mass(),
            Sampler::Density { base, .. } => base.total_mass(),
        }
    }
}

/// An iid sample with equal weights, plus the density of each draw when the
/// sampler was a density sampler (for importance reweighting).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMeasure {
    pub measure: DiscreteMeasure,
    pub density: Option<Vec<f64>>,
}

/// `count` iid draws, each with weight `total_mass / count`; deterministic in `seed`.
pub fn sample_measure(sampler: &Sampler, count: usize, seed: u64) -> Result<SampledMeasure> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sampler.total_mass() / count as f64;
    match sampler {
        Sampler::Uniform { low, high, .. } => {
            if low.len() != high.len() || low.is_empty() {
                return Err(Error::Dimension("uniform sampler bounds must have equal positive length".into()));
            }
            let mut coords = Vec::with_capacity(count * low.len());
            for _ in 0..count {
                for (a, b) in low.iter().zip(high) {
                    coords.push(a + (b - a) * rng.random::<f64>());
                }
            }
            let points = PointList::new(low.len(), coords)?;
            Ok(SampledMeasure { measure: DiscreteMeasure::new(points, alloc::vec![w; count])?, density: None })
        }
        Sampler::Discrete(mu) => {
            let ids = draw_indices(mu.weights(), count, &mut rng)?;
            let points = mu.points().select(&ids);
            Ok(SampledMeasure { measure: DiscreteMeasure::new(points, alloc::vec![w; count])?, density: None })
        }
        Sampler::Density { base, density } => {
            let probs: Vec<f64> = base.weights().iter().zip(density).map(|(a, b)| a * b).collect();
            let ids = draw_indices(&probs, count, &mut rng)?;
            let points = base.points().select(&ids);
            let dens = ids.iter().map(|&i| density[i]).collect();
            Ok(SampledMeasure { measure: DiscreteMeasure::new(points, alloc::vec![w; count])?, density: Some(dens) })
        }
    }
}

/// Inverse-CDF draws proportional to non-negative `weights`.
pub(crate) fn draw_indices<R: Rng>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = KahanSum::default();
    for &w in weights {
        acc.add(w);
        cdf.push(acc.value());
    }
    let total = cdf.last().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("cannot sample from a zero measure".into()));
    }
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(m: usize, a: f64, b: f64) -> PointList {
        PointList::from_scalars(&(0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect::<Vec<_>>())
    }

    #[test]
    fn uniform_grid_moments_match_integrals() {
        let m = 10001;
        let mids: Vec<f64> = (0..m).map(|i| -1.0 + (2 * i + 1) as f64 / m as f64).collect();
        let mu = DiscreteMeasure::uniform(PointList::from_scalars(&mids), 1.0).unwrap();
        let MomentVector::Real(m) = moments(&FunctionSystem::monomial(3), &mu).unwrap() else { panic!() };
        // Normalized Lebesgue on [-1, 1]: ∫1 = 1, ∫x = 0, ∫x² = 1/3.
        assert!((m[0] - 1.0).abs() < 1e-12);
        assert!(m[1].abs() < 1e-12);
        assert!((m[2] - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn zero_measure_and_single_atom() {
        let sys = FunctionSystem::monomial(3);
        let zero = DiscreteMeasure::new(grid(5, 0.0, 1.0), vec![0.0; 5]).unwrap();
        assert_eq!(moments(&sys, &zero).unwrap(), MomentVector::Real(vec![0.0; 3]));
        let atom = DiscreteMeasure::new(PointList::from_scalars(&[2.0]), vec![0.5]).unwrap();
        assert_eq!(moments(&sys, &atom).unwrap(), MomentVector::Real(vec![0.5, 1.0, 2.0]));
    }

    #[test]
    fn rejects_negative_weights() {
        assert!(DiscreteMeasure::new(PointList::from_scalars(&[0.0]), vec![-1e-3]).is_err());
        assert!(DiscreteMeasure::new(PointList::from_scalars(&[0.0]), vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn uniform_sampler_bookkeeping_and_reproducibility() {
        let s = Sampler::Uniform { low: vec![0.0], high: vec![1.0], total_mass: 1.0 };
        let a = sample_measure(&s, 4, 11).unwrap();
        assert_eq!(a.measure.weights(), &[0.25; 4]);
        assert!(a.measure.points().coords().iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(a, sample_measure(&s, 4, 11).unwrap());
        assert_ne!(a, sample_measure(&s, 4, 12).unwrap());
    }

    #[test]
    fn density_sampler_records_density() {
        let base = DiscreteMeasure::uniform(grid(4, 0.0, 1.0), 1.0).unwrap();
        let diag = [1.0, 1.0, 3.0, 3.0];
        let s = Sampler::kernel_diagonal_density(base, &diag).unwrap();
        let out = sample_measure(&s, 8, 3).unwrap();
        assert_eq!(out.measure.weights(), &[1.0 / 8.0; 8]);
        let dens = out.density.unwrap();
        assert!(dens.iter().all(|&d| d == 0.5 || d == 1.5));
    }

    #[test]
    fn compact_is_explicit() {
        let mu = DiscreteMeasure::new(grid(3, 0.0, 1.0), vec![1.0, 1e-20, 1.0]).unwrap();
        assert_eq!(mu.len(), 3);
        assert_eq!(mu.compact().len(), 2);
    }
}
